//! Starting values: total variance, the dominating-process heuristic on the
//! first two scales, process-specific random draws, and selection of the
//! draw with the flattest implied-to-empirical ratio.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::implied::{arma::pacf_to_ar, implied_values};
use crate::model::{ar1_to_gm, LatentModel, ProcessKind};
use crate::rng::{derive_seed, stream, uniform_open_lo, StreamRng};
use crate::wv::{chi2_interval, WvSeries};
use crate::{Error, Result};

/// Upper limit of every autoregressive draw.
pub const PHI_MAX: f64 = 0.999995;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominance {
    Qn,
    Wn,
    Ar1Gm,
}

/// Length and range of the raw signal, the inputs of the drift draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSummary {
    pub len: usize,
    pub min: f64,
    pub max: f64,
}

impl SignalSummary {
    pub fn of(signal: &[f64]) -> SignalSummary {
        let (min, max) = signal
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        SignalSummary {
            len: signal.len(),
            min,
            max,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GuessConfig {
    /// Number of random draws, at least 1.
    pub draws: usize,
    pub seed: u64,
}

/// Mutable sampler state within one round of draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawState {
    pub sigma2_total: f64,
    pub len: usize,
    /// `(max - min) / len`.
    pub range_slope: f64,
    pub dominance: Dominance,
    /// AR1/GM condition (1, 2, then 3 and beyond).
    pub condition: u32,
    pub prev_phi: Option<f64>,
}

/// Slopes from the first scale to both ends of the 95% interval of the
/// second, in log4 units.
pub fn domination_slopes(wv: &WvSeries<f64>) -> Result<(f64, f64)> {
    if wv.len() < 2 {
        return Err(Error::InvalidArgument("dominance needs at least two scales".into()));
    }
    let nu1 = wv.estimates[0];
    if !(nu1 > 0.0) {
        return Err(Error::Degenerate("first-scale wavelet variance is zero".into()));
    }
    let (lo, hi) = chi2_interval(wv.estimates[1], wv.edf[1], 0.05);
    let s = |a: f64| (a.ln() - nu1.ln()) / 4f64.ln();
    Ok((s(lo), s(hi)))
}

pub fn dominating_process(wv: &WvSeries<f64>) -> Result<Dominance> {
    let (s_lo, s_hi) = domination_slopes(wv)?;
    Ok(if s_hi < -0.5 {
        Dominance::Qn
    } else if s_lo > -0.5 {
        Dominance::Ar1Gm
    } else {
        Dominance::Wn
    })
}

/// Condition the first AR1/GM block of a round starts in. A QN-dominated
/// round moves to condition 2 with probability 0.75 and otherwise stays at
/// condition 1.
pub fn starting_condition(dominance: Dominance, rng: &mut StreamRng) -> u32 {
    match dominance {
        Dominance::Qn => {
            if rng.random::<f64>() <= 0.75 {
                2
            } else {
                1
            }
        }
        Dominance::Wn => 2,
        Dominance::Ar1Gm => 1,
    }
}

fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws `(phi, sigma2)` for an AR1 at the current condition and advances
/// the state.
fn draw_ar1(state: &mut DrawState, rng: &mut StreamRng) -> (f64, f64) {
    let s2t = state.sigma2_total;
    let (phi, sigma2) = match state.condition {
        1 => {
            let u = uniform_open_lo(rng, 0.0, 1.0 / 3.0);
            // (1 - sqrt(1 - 3u)) / 5, rationalized to stay positive
            let phi = 3.0 * u / (5.0 * (1.0 + (1.0 - 3.0 * u).sqrt()));
            let top = s2t * (1.0 - phi).powi(2);
            (phi, uniform_open_lo(rng, top / 2.0, top))
        }
        2 => {
            let lo = state.prev_phi.unwrap_or(0.9).max(0.9);
            let phi = uniform(rng, lo, PHI_MAX);
            (phi, uniform_open_lo(rng, 0.0, s2t * (1.0 - phi * phi) / 100.0))
        }
        _ => {
            let prev = state.prev_phi.unwrap_or(0.9);
            let u = uniform_open_lo(rng, 0.0, 1.0 / 3.0);
            let phi = (PHI_MAX - prev) * (1.0 - 3.0 * u).sqrt() + prev;
            let top = s2t * (1.0 - phi).powi(2);
            (phi, uniform_open_lo(rng, top / 2.0, top))
        }
    };
    state.condition += 1;
    state.prev_phi = Some(phi);
    (phi, sigma2)
}

/// One block's starting parameters in its own parametrization.
pub fn draw_process_start(kind: ProcessKind, freq: f64, state: &mut DrawState, rng: &mut StreamRng) -> Vec<f64> {
    let s2t = state.sigma2_total;
    let n = state.len as f64;
    match kind {
        ProcessKind::Ar1 => {
            let (phi, s2) = draw_ar1(state, rng);
            vec![phi, s2]
        }
        ProcessKind::Gm => {
            let (phi, s2) = draw_ar1(state, rng);
            let (beta, s2gm) = ar1_to_gm(phi, s2, freq).expect("draws keep phi in (0, 1)");
            vec![beta, s2gm]
        }
        ProcessKind::Dr => {
            let r = state.range_slope;
            vec![uniform(rng, r / 100.0, r / 2.0)]
        }
        ProcessKind::Rw => vec![uniform_open_lo(rng, s2t / (1e5 * n), s2t / n)],
        ProcessKind::Wn => {
            if state.dominance == Dominance::Wn {
                vec![uniform_open_lo(rng, s2t / 2.0, s2t)]
            } else {
                vec![uniform_open_lo(rng, s2t / 1e5, s2t / 10.0)]
            }
        }
        ProcessKind::Qn => {
            if state.dominance == Dominance::Qn {
                vec![uniform_open_lo(rng, s2t / 8.0, s2t / 3.0)]
            } else {
                vec![uniform_open_lo(rng, s2t / 2e5, s2t / 100.0)]
            }
        }
        ProcessKind::Ar(p) => {
            let mut v = coefficient_draw(p, false, rng);
            v.push(uniform_open_lo(rng, 0.0, s2t));
            v
        }
        ProcessKind::Ma(q) => {
            let mut v = coefficient_draw(q, true, rng);
            v.push(uniform_open_lo(rng, 0.0, s2t));
            v
        }
        ProcessKind::Arma(p, q) => {
            let mut v = coefficient_draw(p, false, rng);
            v.extend(coefficient_draw(q, true, rng));
            v.push(uniform_open_lo(rng, 0.0, s2t));
            v
        }
    }
}

/// Partial autocorrelations uniform on (-0.8, 0.8), mapped to coefficients.
fn coefficient_draw(n: usize, negate: bool, rng: &mut StreamRng) -> Vec<f64> {
    let pacf: Vec<f64> = (0..n).map(|_| uniform(rng, -0.8, 0.8)).collect();
    let c = pacf_to_ar(&pacf);
    if negate {
        c.into_iter().map(|x| -x).collect()
    } else {
        c
    }
}

/// Sum of the wavelet variances over all scales.
pub fn total_variance(wv: &WvSeries<f64>) -> f64 {
    wv.estimates.iter().sum()
}

/// `sum_j (1 - nu_j(theta) / nu_hat_j)^2` over scales with a positive
/// estimate.
pub fn flattening(implied: &[f64], nu_hat: &[f64]) -> f64 {
    implied
        .iter()
        .zip(nu_hat)
        .filter(|(_, &e)| e > 0.0)
        .map(|(m, e)| (1.0 - m / e).powi(2))
        .sum()
}

/// One full round: every block drawn in declaration order, supplied
/// starting values substituted.
pub fn draw_round(model: &LatentModel, base: &DrawState, rng: &mut StreamRng) -> Vec<f64> {
    let mut state = *base;
    state.condition = starting_condition(base.dominance, rng);
    state.prev_phi = None;
    let mut theta = Vec::with_capacity(model.n_params());
    for b in &model.blocks {
        let draw = draw_process_start(b.kind, model.freq, &mut state, rng);
        for (spec, v) in b.params.iter().zip(draw) {
            theta.push(spec.start.unwrap_or(v));
        }
    }
    theta
}

/// Best of `cfg.draws` rounds under the flattening criterion; ties go to
/// the earliest draw. Round `i` uses the stream `derive_seed(cfg.seed, i)`.
pub fn initial_guess(model: &LatentModel, wv: &WvSeries<f64>, summary: SignalSummary, cfg: &GuessConfig) -> Result<Vec<f64>> {
    if cfg.draws == 0 {
        return Err(Error::InvalidArgument("at least one guess draw is needed".into()));
    }
    if wv.estimates.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("all wavelet variances are zero".into()));
    }
    let dominance = if wv.len() >= 2 {
        dominating_process(wv)?
    } else {
        Dominance::Wn
    };
    let base = DrawState {
        sigma2_total: total_variance(wv),
        len: summary.len,
        range_slope: (summary.max - summary.min) / summary.len as f64,
        dominance,
        condition: 1,
        prev_phi: None,
    };
    if model.starts().iter().all(|s| s.is_some()) {
        return Ok(model.starts().into_iter().map(|s| s.unwrap()).collect());
    }
    let levels = wv.len();
    let scored: Vec<(f64, Vec<f64>)> = (0..cfg.draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(derive_seed(cfg.seed, i as u64));
            let theta = draw_round(model, &base, &mut rng);
            let mut nu = vec![0.0; levels];
            let score = match implied_values(model, &theta, levels, &mut nu) {
                Ok(()) => flattening(&nu, &wv.estimates),
                Err(_) => f64::INFINITY,
            };
            (if score.is_finite() { score } else { f64::INFINITY }, theta)
        })
        .collect();
    let mut best = 0;
    for (i, (s, _)) in scored.iter().enumerate() {
        if *s < scored[best].0 {
            best = i;
        }
    }
    let theta = scored.into_iter().nth(best).unwrap().1;
    model.check_theta(&theta)?;
    Ok(theta)
}
