//! Seeded simulation of latent models.
//!
//! Block `i` of a model draws from its own stream seeded with
//! `derive_seed(seed, i)`; the composite is the sum of the block paths in
//! declaration order.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::implied::arma;
use crate::model::{gm_to_ar1, LatentModel, ProcessKind};
use crate::rng::{derive_seed, stream, StreamRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    /// Must carry parameter values.
    pub model: LatentModel,
    pub len: usize,
    pub seed: u64,
    /// Burn-in for stationary blocks; derived from the dynamics when absent.
    pub burn_in: Option<usize>,
}

pub fn simulate(spec: &SimSpec) -> Result<Vec<f64>> {
    let theta = spec.model.theta()?;
    simulate_inner(&spec.model, theta, spec.len, spec.seed, spec.burn_in)
}

/// Convenience form taking the parameter vector explicitly.
pub fn simulate_theta(model: &LatentModel, theta: &[f64], len: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_inner(model, theta, len, seed, None)
}

fn simulate_inner(model: &LatentModel, theta: &[f64], len: usize, seed: u64, burn_in: Option<usize>) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::InvalidArgument("simulation length must be at least 1".into()));
    }
    model.check_theta(theta)?;
    let mut out = vec![0.0; len];
    for (i, (b, off)) in model.blocks.iter().zip(model.block_offsets()).enumerate() {
        let params = &theta[off..off + b.params.len()];
        add_block(b.kind, params, model.freq, derive_seed(seed, i as u64), burn_in, &mut out)?;
    }
    Ok(out)
}

fn normal(rng: &mut StreamRng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Default AR1 burn-in: `10 / (1 - |phi|)`, at most 10^4.
pub fn ar1_burn_in(phi: f64) -> usize {
    (10.0 / (1.0 - phi.abs())).min(1e4) as usize
}

/// One block path of length `len` from the stream seeded with `seed`.
pub fn simulate_block(
    kind: ProcessKind,
    params: &[f64],
    freq: f64,
    len: usize,
    seed: u64,
    burn_in: Option<usize>,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; len];
    add_block(kind, params, freq, seed, burn_in, &mut out)?;
    Ok(out)
}

/// Adds one block path to `out` in place.
fn add_block(kind: ProcessKind, params: &[f64], freq: f64, seed: u64, burn_in: Option<usize>, out: &mut [f64]) -> Result<()> {
    let mut rng = stream(seed);
    match kind {
        ProcessKind::Wn => {
            let s = params[0].sqrt();
            for o in out.iter_mut() {
                *o += s * normal(&mut rng);
            }
        }
        ProcessKind::Qn => {
            let s = params[0].sqrt();
            let mut prev = s * normal(&mut rng);
            for o in out.iter_mut() {
                let z = s * normal(&mut rng);
                *o += z - prev;
                prev = z;
            }
        }
        ProcessKind::Rw => {
            let s = params[0].sqrt();
            let mut acc = 0.0;
            for o in out.iter_mut() {
                acc += s * normal(&mut rng);
                *o += acc;
            }
        }
        ProcessKind::Dr => {
            for (t, o) in out.iter_mut().enumerate() {
                *o += params[0] * (t + 1) as f64;
            }
        }
        ProcessKind::Ar1 => ar1_path(params[0], params[1], burn_in, &mut rng, out),
        ProcessKind::Gm => {
            let (phi, s2) = gm_to_ar1(params[0], params[1], freq)?;
            ar1_path(phi, s2, burn_in, &mut rng, out)
        }
        ProcessKind::Ar(p) => arma_path(&params[..p], &[], params[p], burn_in, &mut rng, out),
        ProcessKind::Ma(q) => arma_path(&[], &params[..q], params[q], burn_in, &mut rng, out),
        ProcessKind::Arma(p, q) => arma_path(&params[..p], &params[p..p + q], params[p + q], burn_in, &mut rng, out),
    }
    Ok(())
}

fn ar1_path(phi: f64, sigma2: f64, burn_in: Option<usize>, rng: &mut StreamRng, out: &mut [f64]) {
    let s = sigma2.sqrt();
    // stationary start, then burn-in
    let mut x = s / ((1.0 - phi) * (1.0 + phi)).sqrt() * normal(rng);
    for _ in 0..burn_in.unwrap_or_else(|| ar1_burn_in(phi)) {
        x = phi * x + s * normal(rng);
    }
    for o in out.iter_mut() {
        x = phi * x + s * normal(rng);
        *o += x;
    }
}

fn arma_path(ar: &[f64], ma: &[f64], sigma2: f64, burn_in: Option<usize>, rng: &mut StreamRng, out: &mut [f64]) {
    let s = sigma2.sqrt();
    let burn = burn_in.unwrap_or_else(|| arma::psi_decay_lag(ar, ma, 1e-10, 10_000).max(ar.len() + ma.len()));
    let total = burn + out.len();
    let (p, q) = (ar.len(), ma.len());
    let mut x = vec![0.0; total];
    let mut e = vec![0.0; total];
    for t in 0..total {
        e[t] = s * normal(rng);
        let mut v = e[t];
        for i in 1..=p.min(t) {
            v += ar[i - 1] * x[t - i];
        }
        for j in 1..=q.min(t) {
            v += ma[j - 1] * e[t - j];
        }
        x[t] = v;
    }
    for (o, v) in out.iter_mut().zip(&x[burn..]) {
        *o += v;
    }
}

/// Replaces a fraction of the samples with spikes of `+-magnitude`, at
/// positions drawn without replacement. Test and robustness tooling.
pub fn contaminate(signal: &[f64], fraction: f64, magnitude: f64, seed: u64) -> Vec<f64> {
    let mut out = signal.to_vec();
    let n = out.len();
    let k = ((n as f64) * fraction).round() as usize;
    let mut rng = stream(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k.min(n) {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
        out[idx[i]] = if rng.random::<bool>() { magnitude } else { -magnitude };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn model(text: &str) -> LatentModel {
        parse_model(text, 1.0).unwrap()
    }

    #[test]
    fn drift_is_exact() {
        let x = simulate_theta(&model("DR()"), &[2.0], 5, 0).unwrap();
        assert_eq!(x, vec![2.0, 4.0, 6.0, 8.0, 10.0]);
    }

    #[test]
    fn white_noise_sample_variance() {
        let x = simulate_theta(&model("WN()"), &[1.0], 1 << 16, 17).unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
        assert!((0.97..=1.03).contains(&var), "{var}");
    }

    #[test]
    fn seeds_are_reproducible() {
        let m = model("AR1()+WN()+RW()");
        let th = [0.9, 0.1, 1.0, 0.01];
        let a = simulate_theta(&m, &th, 1000, 5).unwrap();
        let b = simulate_theta(&m, &th, 1000, 5).unwrap();
        let c = simulate_theta(&m, &th, 1000, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn composite_is_sum_of_block_streams() {
        let m = model("2*AR1()+WN()+QN()+DR()");
        let th = [0.5, 1.0, 0.99, 0.1, 2.0, 0.3, 0.01];
        let total = simulate_theta(&m, &th, 777, 99).unwrap();
        let mut sum = vec![0.0; 777];
        for (i, (b, off)) in m.blocks.iter().zip(m.block_offsets()).enumerate() {
            let p = simulate_block(b.kind, &th[off..off + b.params.len()], 1.0, 777, derive_seed(99, i as u64), None)
                .unwrap();
            for (s, v) in sum.iter_mut().zip(p) {
                *s += v;
            }
        }
        assert_eq!(total, sum);
    }

    #[test]
    fn ar1_lag_one_correlation() {
        let x = simulate_theta(&model("AR1()"), &[0.8, 1.0], 1 << 16, 3).unwrap();
        let n = x.len() as f64;
        let g0 = x.iter().map(|v| v * v).sum::<f64>() / n;
        let g1 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / n;
        assert!((g1 / g0 - 0.8).abs() < 0.02);
        assert!((g0 - 1.0 / 0.36).abs() < 0.15);
    }

    #[test]
    fn quantization_noise_autocovariance() {
        let x = simulate_theta(&model("QN()"), &[1.0], 1 << 16, 4).unwrap();
        let n = x.len() as f64;
        let g0 = x.iter().map(|v| v * v).sum::<f64>() / n;
        let g1 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / n;
        assert!((g0 - 2.0).abs() < 0.05);
        assert!((g1 + 1.0).abs() < 0.05);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(simulate_theta(&model("AR1()"), &[1.0, 1.0], 10, 0).is_err());
        assert!(simulate_theta(&model("WN()"), &[1.0], 0, 0).is_err());
        let m = model("WN()");
        let spec = SimSpec {
            model: m,
            len: 10,
            seed: 0,
            burn_in: None,
        };
        assert!(simulate(&spec).is_err());
    }

    #[test]
    fn burn_in_rule() {
        assert_eq!(ar1_burn_in(0.9), 100);
        assert_eq!(ar1_burn_in(0.999995), 10_000);
        assert_eq!(ar1_burn_in(0.0), 10);
    }

    #[test]
    fn contamination_count() {
        let x = vec![0.0; 1000];
        let y = contaminate(&x, 0.01, 100.0, 1);
        assert_eq!(y.iter().filter(|v| v.abs() == 100.0).count(), 10);
    }
}
