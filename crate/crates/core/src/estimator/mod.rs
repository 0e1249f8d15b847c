//! GMWM estimation: minimize `(nu_hat - nu(theta))' Omega (nu_hat - nu(theta))`
//! over the admissible parameter space.
//!
//! The weighting is two-step. A first fit uses `Omega = diag(1 / w_j^2)`
//! with `w_j` the width of the confidence interval at scale `j`; the
//! bootstrap covariance `V` of the WV is then simulated at that estimate and
//! the final fit uses `Omega = V^-1`.

pub mod bootstrap;
pub mod guess;
pub mod inference;
pub(crate) mod optim;
pub(crate) mod transform;

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::implied::implied_values;
use crate::model::LatentModel;
use crate::rng::{derive_seed, stream};
use crate::scalar::Scalar;
use crate::wavelet::default_levels;
use crate::wv::{wvar_with, WvConfig, WvSeries};
use crate::{Error, Result};

pub use bootstrap::{bootstrap_v, bootstrap_v_with_seeds, floored_inverse};
pub use guess::{dominating_process, draw_process_start, initial_guess, Dominance, DrawState, GuessConfig, SignalSummary};
pub use inference::{gof_test, param_ci, GofTest, ParamEstimate};

use optim::{nelder_mead, NmOptions};
use transform::Codec;

/// Seed streams derived from the master seed.
pub(crate) const STREAM_GUESS: u64 = 1;
pub(crate) const STREAM_BOOTSTRAP: u64 = 2;
pub(crate) const STREAM_RESTART: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Plug in the robust WV (and re-estimate it robustly in the bootstrap).
    pub robust: bool,
    /// Efficiency of the robust WV, in (0.5, 1].
    pub efficiency: f64,
    /// Random draws for the starting values (G).
    pub guesses: usize,
    /// Bootstrap replicates for `V` (H).
    pub bootstrap: usize,
    pub seed: u64,
    /// Number of scales J; `floor(log2 T) - 1` when absent.
    pub levels: Option<usize>,
    pub alpha: f64,
    /// Perturbed restarts of the first-step search.
    pub restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            robust: false,
            efficiency: 0.6,
            guesses: 1000,
            bootstrap: 100,
            seed: 0,
            levels: None,
            alpha: 0.05,
            restarts: 3,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.guesses == 0 {
            return Err(Error::InvalidArgument("at least one guess draw is needed".into()));
        }
        if self.bootstrap < 2 {
            return Err(Error::InvalidArgument("the bootstrap needs at least two replicates".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.robust && !(self.efficiency > 0.5 && self.efficiency <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "efficiency must lie in (0.5, 1], got {}",
                self.efficiency
            )));
        }
        Ok(())
    }

    pub(crate) fn wv_efficiency(&self) -> Option<f64> {
        self.robust.then_some(self.efficiency)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// The model with `theta` filled in.
    pub model: LatentModel,
    pub labels: Vec<String>,
    pub theta: Vec<f64>,
    pub objective: f64,
    /// Weighting matrix of the final fit, row-major.
    pub omega: Vec<Vec<f64>>,
    /// `V` could not be inverted and the diagonal first-step weights were
    /// kept.
    pub omega_fallback: bool,
    pub v_hat: Vec<Vec<f64>>,
    /// Empirical WV the model was fitted to.
    pub wv: WvSeries<f64>,
    pub implied: Vec<f64>,
    pub estimates: Vec<ParamEstimate>,
    /// Absent when `J = p` or `V` is singular.
    pub gof: Option<GofTest>,
    pub start: Vec<f64>,
    pub seed: u64,
    pub options: FitOptions,
    pub converged: bool,
    pub signal: SignalSummary,
    /// Seconds; not serialized so repeated runs give identical JSON.
    #[serde(skip)]
    pub wall_time: f64,
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let c = rows.first().map_or(0, |r| r.len());
    DMatrix::from_row_iterator(n, c, rows.iter().flatten().cloned())
}

/// The weighted distance of a model to an empirical WV.
pub(crate) struct Problem<'a> {
    pub model: &'a LatentModel,
    pub nu_hat: &'a [f64],
    pub omega: &'a DMatrix<f64>,
}

impl Problem<'_> {
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let j = self.nu_hat.len();
        let mut nu = vec![0.0; j];
        if implied_values(self.model, theta, j, &mut nu).is_err() {
            return f64::INFINITY;
        }
        let d: Vec<f64> = self.nu_hat.iter().zip(&nu).map(|(a, b)| a - b).collect();
        let v = inference::quad(&d, self.omega);
        if v.is_finite() {
            v.max(0.0)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
}

/// Simplex search from every start plus `restarts` perturbations of the
/// first one, then repeated polishing of the best point until it stops
/// improving.
pub(crate) fn minimize(problem: &Problem, starts: &[Vec<f64>], restarts: usize, seed: u64) -> Result<Minimum> {
    let codec = Codec::new(problem.model, &starts[0]);
    let f = |z: &[f64]| match codec.decode(z) {
        Some(th) => problem.objective(&th),
        None => f64::INFINITY,
    };
    let opts = NmOptions::default();
    let mut z_starts: Vec<Vec<f64>> = starts.iter().map(|s| codec.encode(s)).collect();
    for r in 0..restarts {
        let mut rng = stream(derive_seed(seed, r as u64));
        let z: Vec<f64> = z_starts[0]
            .iter()
            .map(|v| v + 0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        z_starts.push(z);
    }
    let mut best: Option<optim::NmResult> = None;
    for z0 in &z_starts {
        let r = nelder_mead(f, z0, &opts);
        if best.as_ref().is_none_or(|b| r.f < b.f) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one start");
    if !best.f.is_finite() {
        return Err(Error::Optimizer("objective is not finite at any starting point".into()));
    }
    let polish = NmOptions { step: 0.05, ..opts };
    for _ in 0..8 {
        let r = nelder_mead(f, &best.x, &polish);
        let gain = best.f - r.f;
        let improved = r.f < best.f;
        let conv = r.converged;
        if improved {
            best = r;
        } else {
            best.converged |= conv;
        }
        if gain <= 1e-12 * best.f.abs() || gain <= 0.0 {
            best.converged |= conv;
            break;
        }
    }
    let theta = codec.decode(&best.x).expect("finite objective implies admissible point");
    Ok(Minimum {
        theta,
        objective: best.f,
        converged: best.converged,
    })
}

/// Square root `R` of a weighting matrix with `R'R = Omega`, negative
/// eigenvalues clamped to zero.
pub(crate) fn weight_root(omega: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(omega.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Local least-squares refinement from `theta0`, for warm-started refits.
/// `root` is [`weight_root`] of the problem's weighting matrix.
pub(crate) fn refine(problem: &Problem, theta0: &[f64], root: &DMatrix<f64>) -> Result<Minimum> {
    let codec = Codec::new(problem.model, theta0);
    let j = problem.nu_hat.len();
    let mut nu = vec![0.0; j];
    let resid = |z: &[f64]| -> Option<Vec<f64>> {
        let th = codec.decode(z)?;
        implied_values(problem.model, &th, j, &mut nu).ok()?;
        let d = nalgebra::DVector::from_iterator(j, problem.nu_hat.iter().zip(&nu).map(|(a, b)| a - b));
        let r = root * d;
        r.iter().all(|v| v.is_finite()).then(|| r.iter().cloned().collect())
    };
    let r = optim::levenberg_marquardt(resid, &codec.encode(theta0), 200)
        .ok_or_else(|| Error::Optimizer("refinement start is not admissible".into()))?;
    let theta = codec.decode(&r.x).expect("admissible point");
    Ok(Minimum {
        objective: problem.objective(&theta),
        theta,
        converged: r.converged,
    })
}

/// Diagonal weights `1 / w_j^2` from the interval widths; zero widths take
/// the smallest positive width.
pub(crate) fn diagonal_weights(wv: &WvSeries<f64>) -> DMatrix<f64> {
    let widths: Vec<f64> = wv.ci_hi.iter().zip(&wv.ci_lo).map(|(h, l)| h - l).collect();
    let min_pos = widths.iter().cloned().filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min);
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        widths.len(),
        widths.iter().map(|&w| 1.0 / if w > 0.0 { w } else { min_pos }.powi(2)),
    ))
}

pub(crate) fn summarize<F: Scalar>(signal: &[F]) -> SignalSummary {
    let (min, max) = signal.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let x = v.as_f64();
        (lo.min(x), hi.max(x))
    });
    SignalSummary {
        len: signal.len(),
        min,
        max,
    }
}

/// Checks the fit preconditions and returns the number of scales.
pub(crate) fn fit_levels(len: usize, model: &LatentModel, levels: Option<usize>) -> Result<usize> {
    let j = levels.unwrap_or_else(|| default_levels(len));
    let p = model.n_free();
    if p == 0 {
        return Err(Error::InvalidArgument("every parameter is pinned; nothing to estimate".into()));
    }
    if j < p {
        return Err(Error::UnderIdentified { scales: j, params: p });
    }
    let needed = 1usize.checked_shl(j as u32 + 1).unwrap_or(usize::MAX);
    if len < needed {
        return Err(Error::SignalTooShort { len, needed });
    }
    Ok(j)
}

/// GMWM fit of `model` to `signal`.
pub fn gmwm_fit<F: Scalar>(signal: &[F], model: &LatentModel, opts: &FitOptions) -> Result<FitResult> {
    Ok(fit_with_ensemble(signal, model, opts)?.0)
}

/// The fit together with the bootstrap ensemble behind `V`.
pub(crate) fn fit_with_ensemble<F: Scalar>(signal: &[F], model: &LatentModel, opts: &FitOptions) -> Result<(FitResult, Vec<Vec<f64>>)> {
    let clock = Instant::now();
    opts.validate()?;
    let len = signal.len();
    let levels = fit_levels(len, model, opts.levels)?;
    let cfg = WvConfig {
        levels: Some(levels),
        alpha: opts.alpha,
        freq: model.freq,
        efficiency: opts.wv_efficiency(),
        ..WvConfig::default()
    };
    let wv = wvar_with(signal, &cfg)?.to_f64();
    if wv.degenerate {
        return Err(Error::Degenerate("all wavelet variances are zero".into()));
    }
    let summary = summarize(signal);
    let guess_cfg = GuessConfig {
        draws: opts.guesses,
        seed: derive_seed(opts.seed, STREAM_GUESS),
    };
    let start = initial_guess(model, &wv, summary, &guess_cfg)?;
    let restart_seed = derive_seed(opts.seed, STREAM_RESTART);

    let omega1 = diagonal_weights(&wv);
    let step1 = minimize(
        &Problem {
            model,
            nu_hat: &wv.estimates,
            omega: &omega1,
        },
        std::slice::from_ref(&start),
        opts.restarts,
        restart_seed,
    )?;

    let seeds = bootstrap::replicate_seeds(derive_seed(opts.seed, STREAM_BOOTSTRAP), opts.bootstrap);
    let ensemble = bootstrap::bootstrap_ensemble(model, &step1.theta, len, levels, opts.wv_efficiency(), &seeds)?;
    let v = bootstrap::covariance(&ensemble);
    let (omega, omega_fallback) = match floored_inverse(&v) {
        Some(w) => (w, false),
        None => (omega1.clone(), true),
    };
    let step2 = minimize(
        &Problem {
            model,
            nu_hat: &wv.estimates,
            omega: &omega,
        },
        &[step1.theta.clone(), start.clone()],
        0,
        restart_seed,
    )?;
    if !(step1.converged || step2.converged) {
        return Err(Error::Optimizer(format!(
            "no convergence after restarts; best point {:?} with objective {:e}",
            step2.theta, step2.objective
        )));
    }
    let theta = step2.theta;
    let mut implied = vec![0.0; levels];
    implied_values(model, &theta, levels, &mut implied)?;
    let estimates = inference::intervals(model, &theta, &omega, &v, 1.0 - opts.alpha)?;
    let d: Vec<f64> = wv.estimates.iter().zip(&implied).map(|(a, b)| a - b).collect();
    let gof = if levels > model.n_free() && !omega_fallback {
        inference::gof_from_parts(&d, &v, opts.bootstrap, model.n_free()).ok()
    } else {
        None
    };
    let result = FitResult {
        model: model.with_theta(theta.clone())?,
        labels: model.param_labels(),
        theta,
        objective: step2.objective,
        omega: to_rows(&omega),
        omega_fallback,
        v_hat: to_rows(&v),
        wv,
        implied,
        estimates,
        gof,
        start,
        seed: opts.seed,
        options: opts.clone(),
        converged: step2.converged,
        signal: summary,
        wall_time: clock.elapsed().as_secs_f64(),
    };
    Ok((result, ensemble))
}

impl FitResult {
    /// Plain-text table of estimates, standard errors and intervals,
    /// followed by the objective and the goodness-of-fit test.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let pct = (100.0 * (1.0 - self.options.alpha)).round();
        let _ = writeln!(s, "Model: {}", self.model.render());
        let _ = writeln!(
            s,
            "Estimation: {} GMWM{}, {} scales, T = {}",
            if self.options.robust { "robust" } else { "standard" },
            if self.options.robust {
                format!(" (efficiency {})", self.options.efficiency)
            } else {
                String::new()
            },
            self.wv.len(),
            self.signal.len
        );
        let w = self.labels.iter().map(|l| l.len()).max().unwrap_or(5).max(9);
        let _ = writeln!(
            s,
            "{:<w$}  {:>13}  {:>13}  {:>13}  {:>13}",
            "",
            "Estimate",
            "SE",
            format!("CI.Low {pct}%"),
            format!("CI.High {pct}%")
        );
        for e in &self.estimates {
            let opt = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.6e}"));
            let mut flags = String::new();
            if e.fixed {
                flags.push_str(" (fixed)");
            }
            if e.truncated {
                flags.push_str(" (truncated)");
            }
            if !e.identified {
                flags.push_str(" (not identified)");
            }
            let _ = writeln!(
                s,
                "{:<w$}  {:>13.6e}  {:>13}  {:>13}  {:>13}{}",
                e.label,
                e.value,
                opt(e.se),
                opt(e.ci_lo),
                opt(e.ci_hi),
                flags
            );
        }
        let _ = writeln!(s, "Objective function: {:.6e}", self.objective);
        match &self.gof {
            Some(g) => {
                let _ = writeln!(
                    s,
                    "Goodness of fit: statistic {:.4} on {} degrees of freedom, p-value {:.4}",
                    g.statistic, g.dof, g.p_value
                );
            }
            None => {
                let _ = writeln!(s, "Goodness of fit: not available");
            }
        }
        if self.omega_fallback {
            let _ = writeln!(s, "Warning: bootstrap covariance singular; diagonal weights used");
        }
        let _ = writeln!(s, "Seed: {}", self.seed);
        s
    }
}
