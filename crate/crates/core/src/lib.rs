//! Inertial sensor stochastic error calibration with the Generalized Method
//! of Wavelet Moments.
//!
//! The signal side (wavelet transforms, wavelet/Allan/Hadamard variances) is
//! generic over [`Scalar`] so `f32` recordings can be processed without a
//! copy; model fitting, simulation and selection work in `f64`.
//!
//! ```
//! use gmwm::{parse_model, sim, wv};
//!
//! let model = parse_model("AR1(phi=0.9,sigma2=0.01)+WN(sigma2=1)", 1.0).unwrap();
//! let theta = vec![0.9, 0.01, 1.0];
//! let x = sim::simulate_theta(&model, &theta, 4096, 42).unwrap();
//! let series = wv::wvar(&x, 10).unwrap();
//! assert_eq!(series.estimates.len(), 10);
//! ```

pub mod error;
pub mod estimator;
pub mod implied;
pub mod io;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod sim;
pub mod wavelet;
pub mod wv;

pub use error::{Error, ErrorClass, Result};
pub use estimator::{gmwm_fit, FitOptions, FitResult};
pub use implied::{implied_wv, ImpliedWv};
pub use model::{ar1_to_gm, gm_to_ar1, parse_model, Bounds, LatentModel, ProcessBlock, ProcessKind};
pub use scalar::Scalar;
pub use selection::{auto_rank, rank_models, wic_fast, RankOptions, RankingTable, WicMethod};
pub use wavelet::{Transform, WaveletDecomposition, WaveletFilter};
pub use wv::{AvSeries, HvSeries, WvSeries};

pub type WaveletDecomposition64 = WaveletDecomposition<f64>;
pub type WaveletDecomposition32 = WaveletDecomposition<f32>;
pub type WvSeries64 = WvSeries<f64>;
pub type WvSeries32 = WvSeries<f32>;
pub type AvSeries64 = AvSeries<f64>;
pub type HvSeries64 = HvSeries<f64>;
