//! Asymptotic parameter intervals and the over-identification test.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::bootstrap::floored_inverse;
use super::{from_rows, FitResult};
use crate::implied::implied_wv_jacobian;
use crate::model::{Bounds, LatentModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Multiplier `(H - J - 2) / (H - 1)` applied to the inverse bootstrap
    /// covariance (1 when `H <= J + 2`).
    pub precision_correction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub label: String,
    pub value: f64,
    /// None when the parameter is not identified (rank-deficient Jacobian).
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    /// The normal interval crossed a bound and was cut there.
    pub truncated: bool,
    /// Pinned by the model string: zero-width interval.
    pub fixed: bool,
    pub identified: bool,
}

/// `T (nu_hat - nu)' Omega* (nu_hat - nu)` against chi-square with
/// `J - p` degrees of freedom. Since `V` is the covariance of the WV at the
/// observed length, `Omega* = (T V)^-1` and the factor `T` cancels.
pub fn gof_test(fit: &FitResult) -> Result<GofTest> {
    let v = from_rows(&fit.v_hat);
    let d: Vec<f64> = fit.wv.estimates.iter().zip(&fit.implied).map(|(a, b)| a - b).collect();
    gof_from_parts(&d, &v, fit.options.bootstrap, fit.model.n_free())
}

pub(crate) fn gof_from_parts(d: &[f64], v: &DMatrix<f64>, replicates: usize, p: usize) -> Result<GofTest> {
    let j = d.len();
    if j <= p {
        return Err(Error::ZeroDof);
    }
    let w = floored_inverse(v).ok_or_else(|| Error::Singular("bootstrap covariance has no positive eigenvalue".into()))?;
    let correction = if replicates > j + 2 {
        (replicates - j - 2) as f64 / (replicates - 1) as f64
    } else {
        1.0
    };
    let statistic = (correction * quad(d, &w)).max(0.0);
    let dof = j - p;
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    Ok(GofTest {
        statistic,
        dof,
        p_value: chi.sf(statistic),
        precision_correction: correction,
    })
}

pub(crate) fn quad(d: &[f64], w: &DMatrix<f64>) -> f64 {
    let n = d.len();
    let mut s = 0.0;
    for a in 0..n {
        let mut row = 0.0;
        for b in 0..n {
            row += w[(a, b)] * d[b];
        }
        s += d[a] * row;
    }
    s
}

/// Sandwich covariance `(D'WD)^-1 D'W V W D (D'WD)^-1` of the free
/// parameters, computed on columns scaled by the parameter magnitudes.
/// The second value flags parameters lying in the numerical null space.
pub fn sandwich(d: &DMatrix<f64>, w: &DMatrix<f64>, v: &DMatrix<f64>, scale: &[f64]) -> (DMatrix<f64>, Vec<bool>) {
    let p = d.ncols();
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(scale));
    let ds = d * &s;
    let a = ds.transpose() * w * &ds;
    let eig = SymmetricEigen::new(a.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut unidentified = vec![false; p];
    let tol = 1e-10 * lmax;
    let mut inv_vals = eig.eigenvalues.clone();
    for (k, l) in eig.eigenvalues.iter().enumerate() {
        if !(lmax > 0.0) || *l <= tol {
            inv_vals[k] = 0.0;
            for (i, u) in unidentified.iter_mut().enumerate() {
                if eig.eigenvectors[(i, k)].abs() > 1e-6 {
                    *u = true;
                }
            }
        } else {
            inv_vals[k] = 1.0 / l;
        }
    }
    let a_inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    let b = ds.transpose() * w * v * w * &ds;
    let cov_s = &a_inv * b * &a_inv;
    (&s * cov_s * &s, unidentified)
}

/// Normal intervals `theta_k +- z se_k`, cut at the parameter bounds.
pub fn param_ci(fit: &FitResult, level: f64) -> Result<Vec<ParamEstimate>> {
    let w = from_rows(&fit.omega);
    let v = from_rows(&fit.v_hat);
    intervals(&fit.model, &fit.theta, &w, &v, level)
}

pub(crate) fn intervals(model: &LatentModel, theta: &[f64], w: &DMatrix<f64>, v: &DMatrix<f64>, level: f64) -> Result<Vec<ParamEstimate>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let levels = w.nrows();
    let jac = implied_wv_jacobian(model, theta, levels)?;
    let free = model.free_indices();
    let d = jac.matrix.select_columns(&free);
    let scale: Vec<f64> = free.iter().map(|&i| if theta[i] != 0.0 { theta[i].abs() } else { 1.0 }).collect();
    let (cov, unidentified) = sandwich(&d, w, v, &scale);
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + level / 2.0);
    let labels = model.param_labels();
    let specs: Vec<_> = model.params().collect();
    let mut out = Vec::with_capacity(theta.len());
    for (i, &value) in theta.iter().enumerate() {
        let label = labels[i].clone();
        if specs[i].fixed {
            out.push(ParamEstimate {
                label,
                value,
                se: Some(0.0),
                ci_lo: Some(value),
                ci_hi: Some(value),
                truncated: false,
                fixed: true,
                identified: true,
            });
            continue;
        }
        let k = free.iter().position(|&f| f == i).unwrap();
        if unidentified[k] {
            out.push(ParamEstimate {
                label,
                value,
                se: None,
                ci_lo: None,
                ci_hi: None,
                truncated: false,
                fixed: false,
                identified: false,
            });
            continue;
        }
        let se = cov[(k, k)].max(0.0).sqrt();
        let (mut lo, mut hi) = (value - z * se, value + z * se);
        let mut truncated = false;
        match specs[i].bounds {
            Bounds::Positive if lo < 0.0 => {
                lo = 0.0;
                truncated = true;
            }
            Bounds::UnitInterval => {
                if lo < -1.0 {
                    lo = -1.0;
                    truncated = true;
                }
                if hi > 1.0 {
                    hi = 1.0;
                    truncated = true;
                }
            }
            _ => {}
        }
        out.push(ParamEstimate {
            label,
            value,
            se: Some(se),
            ci_lo: Some(lo),
            ci_hi: Some(hi),
            truncated,
            fixed: false,
            identified: true,
        });
    }
    Ok(out)
}
