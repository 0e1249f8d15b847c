//! Model-implied Haar wavelet variance.
//!
//! For a stationary block with autocovariance `gamma`, the level-`j` MODWT
//! coefficient is `2^-j c'X` with `c = (+1 x h, -1 x h)`, `h = 2^(j-1)`, so
//! `nu2_j = c' Gamma c / 4^j`. Collecting equal lags gives
//! `c' Gamma c = 2h gamma(0) + 2 sum_{k=1}^{2h-1} a(k) gamma(k)` with
//! `a(k) = 2h - 3k` for `k <= h` and `a(k) = k - 2h` beyond.
//! Closed forms are used where they exist; the quadratic form is the
//! reference they are tested against.

pub mod arma;
pub mod dd;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{gm_to_ar1, Bounds, LatentModel, ProcessKind};
use crate::{Error, Result};
use dd::Dd;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedWv {
    pub levels: Vec<usize>,
    /// `2^j / freq`, in seconds.
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    /// One row per block, in declaration order; rows sum to `values`.
    pub decomposition: Vec<Vec<f64>>,
    pub block_labels: Vec<String>,
}

/// Implied WV at levels `1..=levels` for the parameter values stored in
/// the model.
pub fn implied_wv(model: &LatentModel, levels: usize) -> Result<ImpliedWv> {
    implied_wv_at(model, model.theta()?, levels)
}

pub fn implied_wv_at(model: &LatentModel, theta: &[f64], levels: usize) -> Result<ImpliedWv> {
    model.check_theta(theta)?;
    let mut decomposition = Vec::with_capacity(model.blocks.len());
    for (b, off) in model.blocks.iter().zip(model.block_offsets()) {
        let n = b.params.len();
        decomposition.push(block_wv(b.kind, &theta[off..off + n], model.freq, levels)?);
    }
    let mut values = vec![0.0; levels];
    for row in &decomposition {
        for (v, r) in values.iter_mut().zip(row) {
            *v += r;
        }
    }
    Ok(ImpliedWv {
        levels: (1..=levels).collect(),
        scales: (1..=levels).map(|j| (1u64 << j) as f64 / model.freq).collect(),
        values,
        decomposition,
        block_labels: model.blocks.iter().map(|b| b.kind.label()).collect(),
    })
}

/// Total implied WV written into `out`, without the bounds check. Callers
/// guarantee `theta` is admissible (the optimizer only produces such
/// points).
pub(crate) fn implied_values(model: &LatentModel, theta: &[f64], levels: usize, out: &mut [f64]) -> Result<()> {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (b, off) in model.blocks.iter().zip(model.block_offsets()) {
        let n = b.params.len();
        let row = block_wv(b.kind, &theta[off..off + n], model.freq, levels)?;
        for (v, r) in out.iter_mut().zip(&row) {
            *v += r;
        }
    }
    Ok(())
}

/// Implied WV of a single block at levels `1..=levels`.
pub fn block_wv(kind: ProcessKind, params: &[f64], freq: f64, levels: usize) -> Result<Vec<f64>> {
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite parameter in {}", kind.label())));
    }
    let taus = (1..=levels).map(|j| (1u64 << j) as f64);
    let out = match kind {
        ProcessKind::Wn => taus.map(|t| params[0] / t).collect(),
        ProcessKind::Qn => taus.map(|t| 6.0 * params[0] / (t * t)).collect(),
        ProcessKind::Rw => taus.map(|t| params[0] * (t * t + 2.0) / (12.0 * t)).collect(),
        ProcessKind::Dr => taus.map(|t| params[0] * params[0] * t * t / 16.0).collect(),
        ProcessKind::Ar1 => (1..=levels).map(|j| ar1_wv(params[0], params[1], j)).collect(),
        ProcessKind::Gm => {
            let (phi, s2) = gm_to_ar1(params[0], params[1], freq)?;
            (1..=levels).map(|j| ar1_wv(phi, s2, j)).collect()
        }
        ProcessKind::Ar(p) => arma_wv(&params[..p], &[], params[p], levels),
        ProcessKind::Ma(q) => arma_wv(&[], &params[..q], params[q], levels),
        ProcessKind::Arma(p, q) => arma_wv(&params[..p], &params[p..p + q], params[p + q], levels),
    };
    Ok(out)
}

/// Closed-form AR1 wavelet variance,
/// `nu2_j = sigma2 N / (2 h^2 (1 - phi)^2 (1 - phi^2))` with
/// `N = h (1 - phi^2) - 3 phi + 4 phi^(h+1) - phi^(2h+1)`.
/// `N` vanishes to third order at `phi = 1`, so it is accumulated in
/// double-double arithmetic.
pub fn ar1_wv(phi: f64, sigma2: f64, j: usize) -> f64 {
    let h = 1u64 << (j - 1);
    let p = Dd::new(phi);
    let one_minus_sq = Dd::ONE - p * p;
    let n = one_minus_sq * (h as f64) - p * 3.0 + p.powu(h + 1) * 4.0 - p.powu(2 * h + 1);
    let om = 1.0 - phi;
    let hf = h as f64;
    sigma2 * n.to_f64() / (2.0 * hf * hf * om * om * (om * (1.0 + phi)))
}

fn arma_wv(ar: &[f64], ma: &[f64], sigma2: f64, levels: usize) -> Vec<f64> {
    let max_lag = (1usize << levels) - 1;
    let gamma = arma::arma_autocov(ar, ma, sigma2, max_lag);
    (1..=levels).map(|j| quadratic_form_wv(&gamma, j)).collect()
}

/// `c' Gamma c / 4^j` for an autocovariance sequence with at least `2^j`
/// lags.
pub fn quadratic_form_wv(gamma: &[f64], j: usize) -> f64 {
    let h = 1usize << (j - 1);
    assert!(gamma.len() >= 2 * h, "need autocovariances up to lag 2^j - 1");
    let mut acc = 2.0 * h as f64 * gamma[0];
    for (k, &g) in gamma.iter().enumerate().take(2 * h).skip(1) {
        let a = if k <= h { 2.0 * h as f64 - 3.0 * k as f64 } else { k as f64 - 2.0 * h as f64 };
        acc += 2.0 * a * g;
    }
    acc / 4f64.powi(j as i32)
}

/// Autocovariances up to `max_lag` for the stationary kinds (None for RW and
/// DR).
pub fn block_autocov(kind: ProcessKind, params: &[f64], freq: f64, max_lag: usize) -> Result<Option<Vec<f64>>> {
    let g = match kind {
        ProcessKind::Wn => {
            let mut g = vec![0.0; max_lag + 1];
            g[0] = params[0];
            g
        }
        ProcessKind::Qn => {
            let mut g = vec![0.0; max_lag + 1];
            g[0] = 2.0 * params[0];
            if max_lag >= 1 {
                g[1] = -params[0];
            }
            g
        }
        ProcessKind::Ar1 => arma::arma_autocov(&params[..1], &[], params[1], max_lag),
        ProcessKind::Gm => {
            let (phi, s2) = gm_to_ar1(params[0], params[1], freq)?;
            arma::arma_autocov(&[phi], &[], s2, max_lag)
        }
        ProcessKind::Ar(p) => arma::arma_autocov(&params[..p], &[], params[p], max_lag),
        ProcessKind::Ma(q) => arma::arma_autocov(&[], &params[..q], params[q], max_lag),
        ProcessKind::Arma(p, q) => arma::arma_autocov(&params[..p], &params[p..p + q], params[p + q], max_lag),
        ProcessKind::Rw | ProcessKind::Dr => return Ok(None),
    };
    Ok(Some(g))
}

/// Finite-difference Jacobian of the implied WV.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    /// `levels x n_params`; columns of pinned parameters are zero.
    pub matrix: DMatrix<f64>,
    /// Parameters differenced one-sidedly because a central step would
    /// leave the admissible region.
    pub one_sided: Vec<bool>,
}

/// Central differences with step `1e-6 max(|theta_k|, 1e-8)`.
pub fn implied_wv_jacobian(model: &LatentModel, theta: &[f64], levels: usize) -> Result<Jacobian> {
    model.check_theta(theta)?;
    let n = theta.len();
    let mut matrix = DMatrix::<f64>::zeros(levels, n);
    let mut one_sided = vec![false; n];
    let base = implied_wv_at(model, theta, levels)?.values;
    let specs: Vec<_> = model.params().cloned().collect();
    let mut plus = vec![0.0; levels];
    let mut minus = vec![0.0; levels];
    for k in 0..n {
        if specs[k].fixed {
            continue;
        }
        let h = 1e-6 * theta[k].abs().max(1e-8);
        let mut tp = theta.to_vec();
        tp[k] += h;
        let mut tm = theta.to_vec();
        tm[k] -= h;
        let up_ok = admissible(model, &tp, &specs[k].bounds);
        let down_ok = admissible(model, &tm, &specs[k].bounds);
        match (up_ok, down_ok) {
            (true, true) => {
                implied_values(model, &tp, levels, &mut plus)?;
                implied_values(model, &tm, levels, &mut minus)?;
                for j in 0..levels {
                    matrix[(j, k)] = (plus[j] - minus[j]) / (2.0 * h);
                }
            }
            (true, false) => {
                one_sided[k] = true;
                implied_values(model, &tp, levels, &mut plus)?;
                for j in 0..levels {
                    matrix[(j, k)] = (plus[j] - base[j]) / h;
                }
            }
            (false, true) => {
                one_sided[k] = true;
                implied_values(model, &tm, levels, &mut minus)?;
                for j in 0..levels {
                    matrix[(j, k)] = (base[j] - minus[j]) / h;
                }
            }
            (false, false) => {
                return Err(Error::Degenerate(format!(
                    "cannot difference parameter {} at {}",
                    specs[k].name, theta[k]
                )))
            }
        }
    }
    Ok(Jacobian { matrix, one_sided })
}

fn admissible(model: &LatentModel, theta: &[f64], bounds: &Bounds) -> bool {
    match bounds {
        Bounds::Stationary | Bounds::Invertible => model.check_theta(theta).is_ok(),
        _ => theta.iter().zip(model.params()).all(|(&v, p)| p.bounds.contains(v)),
    }
}
