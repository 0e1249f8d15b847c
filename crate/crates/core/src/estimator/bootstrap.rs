//! Parametric bootstrap of the wavelet variance covariance.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::model::LatentModel;
use crate::rng::derive_seed;
use crate::sim::simulate_theta;
use crate::wv::wv_estimates;
use crate::{Error, Result};

/// WV estimates of signals simulated from `model` at `theta`, one per seed,
/// in seed order. Replicates run in parallel; the result does not depend on
/// the thread count.
pub fn bootstrap_ensemble(
    model: &LatentModel,
    theta: &[f64],
    len: usize,
    levels: usize,
    efficiency: Option<f64>,
    seeds: &[u64],
) -> Result<Vec<Vec<f64>>> {
    seeds
        .par_iter()
        .map(|&s| {
            let x = simulate_theta(model, theta, len, s)?;
            wv_estimates(&x, levels, efficiency)
        })
        .collect()
}

/// Replicate seeds `derive_seed(seed, h)` for `h = 0..count`.
pub fn replicate_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|h| derive_seed(seed, h)).collect()
}

/// `V = Phi*' Phi* / (H - 1)` with `Phi*` the column-centered replicate
/// matrix.
pub fn covariance(replicates: &[Vec<f64>]) -> DMatrix<f64> {
    let h = replicates.len();
    let j = replicates.first().map_or(0, |r| r.len());
    let mut mean = vec![0.0; j];
    for r in replicates {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= h as f64);
    let centered = DMatrix::from_fn(h, j, |i, k| replicates[i][k] - mean[k]);
    let mut v = centered.transpose() * &centered / (h as f64 - 1.0);
    // exact symmetry
    for a in 0..j {
        for b in 0..a {
            let s = 0.5 * (v[(a, b)] + v[(b, a)]);
            v[(a, b)] = s;
            v[(b, a)] = s;
        }
    }
    v
}

/// Bootstrap covariance of the WV at `model.theta`: `h` simulations of
/// length `len`, replicate `i` seeded with `derive_seed(seed, i)`.
pub fn bootstrap_v(
    model: &LatentModel,
    len: usize,
    h: usize,
    seed: u64,
    levels: usize,
    efficiency: Option<f64>,
) -> Result<DMatrix<f64>> {
    bootstrap_v_with_seeds(model, len, &replicate_seeds(seed, h), levels, efficiency)
}

/// As [`bootstrap_v`] with explicit replicate seeds.
pub fn bootstrap_v_with_seeds(
    model: &LatentModel,
    len: usize,
    seeds: &[u64],
    levels: usize,
    efficiency: Option<f64>,
) -> Result<DMatrix<f64>> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument("the bootstrap needs at least two replicates".into()));
    }
    let reps = bootstrap_ensemble(model, model.theta()?, len, levels, efficiency, seeds)?;
    Ok(covariance(&reps))
}

/// Inverse through the eigen decomposition with eigenvalues floored at
/// `1e-12 lambda_max`. None when the matrix has no positive eigenvalue or
/// is not finite.
pub fn floored_inverse(v: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let eig = SymmetricEigen::new(v.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(lmax > 0.0) {
        return None;
    }
    let floor = 1e-12 * lmax;
    let inv_vals = eig.eigenvalues.map(|l| 1.0 / l.max(floor));
    let q = &eig.eigenvectors;
    let mut w = q * DMatrix::from_diagonal(&inv_vals) * q.transpose();
    for a in 0..w.nrows() {
        for b in 0..a {
            let s = 0.5 * (w[(a, b)] + w[(b, a)]);
            w[(a, b)] = s;
            w[(b, a)] = s;
        }
    }
    Some(w)
}

/// True when the floor in [`floored_inverse`] changes at least one
/// eigenvalue.
pub fn floor_active(v: &DMatrix<f64>) -> bool {
    let eig = SymmetricEigen::new(v.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    eig.eigenvalues.iter().any(|&l| l < 1e-12 * lmax)
}
