//! Empirical wavelet variance (classical and robust), Allan and Hadamard
//! variances, and the classical-versus-robust comparison.

mod allan;
mod compare;
pub mod robust;

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::scalar::{check_finite, sum_sq, Scalar};
use crate::wavelet::{self, Transform, WaveletFilter};
use crate::{Error, Result};

pub use allan::{avar, dyadic_lengths, haar_matched_wv, hvar, AvSeries, ClusterConfig, ClusterStat, ClusterVariance, HvSeries};
pub use compare::{compare_wvar, ComparisonReport, Verdict};

/// Per-scale wavelet variance with chi-square confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WvSeries<F> {
    pub levels: Vec<usize>,
    /// `tau_j / freq`, in seconds (samples when `freq = 1`).
    pub scales: Vec<f64>,
    pub estimates: Vec<F>,
    pub ci_lo: Vec<F>,
    pub ci_hi: Vec<F>,
    /// Coefficients entering each estimate (`T - 2^j + 1` for the MODWT).
    pub counts: Vec<usize>,
    /// Equivalent degrees of freedom behind the intervals.
    pub edf: Vec<f64>,
    pub transform: Transform,
    pub robust: bool,
    /// 1 for the classical estimator.
    pub efficiency: f64,
    pub alpha: f64,
    pub freq: f64,
    pub signal_len: usize,
    /// Every estimate is zero (constant input).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WvConfig {
    /// Defaults to `floor(log2 T) - 1`.
    pub levels: Option<usize>,
    pub transform: Transform,
    pub filter: WaveletFilter,
    pub alpha: f64,
    pub freq: f64,
    /// Some(eff) selects the robust estimator.
    pub efficiency: Option<f64>,
}

impl Default for WvConfig {
    fn default() -> Self {
        WvConfig {
            levels: None,
            transform: Transform::Modwt,
            filter: WaveletFilter::Haar,
            alpha: 0.05,
            freq: 1.0,
            efficiency: None,
        }
    }
}

/// Classical MODWT wavelet variance at levels `1..=levels`.
pub fn wvar<F: Scalar>(signal: &[F], levels: usize) -> Result<WvSeries<F>> {
    wvar_with(
        signal,
        &WvConfig {
            levels: Some(levels),
            ..WvConfig::default()
        },
    )
}

/// Robust MODWT wavelet variance; `efficiency` in (0.5, 1].
pub fn wvar_robust<F: Scalar>(signal: &[F], levels: usize, efficiency: f64) -> Result<WvSeries<F>> {
    wvar_with(
        signal,
        &WvConfig {
            levels: Some(levels),
            efficiency: Some(efficiency),
            ..WvConfig::default()
        },
    )
}

pub fn wvar_with<F: Scalar>(signal: &[F], cfg: &WvConfig) -> Result<WvSeries<F>> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    if !(cfg.freq > 0.0 && cfg.freq.is_finite()) {
        return Err(Error::InvalidArgument(format!("frequency must be positive, got {}", cfg.freq)));
    }
    let tuning = match cfg.efficiency {
        Some(eff) => robust::Tuning::for_efficiency(eff)?,
        None => None,
    };
    let levels = cfg.levels.unwrap_or_else(|| wavelet::default_levels(signal.len()));
    let decomp = wavelet::decompose(signal, levels, cfg.transform, cfg.filter)?;
    let len = signal.len();
    let mut estimates = Vec::with_capacity(levels);
    let mut counts = Vec::with_capacity(levels);
    for j in 1..=levels {
        let w = decomp.level(j);
        let mut v = level_variance(w, tuning.as_ref());
        if cfg.transform == Transform::Dwt {
            v = v / F::lit((1u64 << j) as f64);
        }
        estimates.push(v);
        counts.push(w.len());
    }
    let efficiency = cfg.efficiency.unwrap_or(1.0);
    Ok(assemble(estimates, counts, len, cfg, efficiency))
}

fn assemble<F: Scalar>(estimates: Vec<F>, counts: Vec<usize>, len: usize, cfg: &WvConfig, efficiency: f64) -> WvSeries<F> {
    let levels = estimates.len();
    let mut ci_lo = Vec::with_capacity(levels);
    let mut ci_hi = Vec::with_capacity(levels);
    let mut edf = Vec::with_capacity(levels);
    for (j, &v) in (1..=levels).zip(&estimates) {
        let eta = classical_edf(len, j) * efficiency;
        let (lo, hi) = chi2_interval(v.as_f64(), eta, cfg.alpha);
        ci_lo.push(F::lit(lo));
        ci_hi.push(F::lit(hi));
        edf.push(eta);
    }
    let degenerate = estimates.iter().all(|v| *v == F::zero());
    WvSeries {
        levels: (1..=levels).collect(),
        scales: (1..=levels).map(|j| (1u64 << j) as f64 / cfg.freq).collect(),
        estimates,
        ci_lo,
        ci_hi,
        counts,
        edf,
        transform: cfg.transform,
        robust: cfg.efficiency.is_some(),
        efficiency,
        alpha: cfg.alpha,
        freq: cfg.freq,
        signal_len: len,
        degenerate,
    }
}

/// `max((T - 2^j + 1) / 2^j, 1)`.
pub fn classical_edf(len: usize, j: usize) -> f64 {
    let l = (1u64 << j) as f64;
    ((len as f64 - l + 1.0) / l).max(1.0)
}

/// `[eta v / chi2_eta(1 - alpha/2), eta v / chi2_eta(alpha/2)]`.
pub fn chi2_interval(v: f64, eta: f64, alpha: f64) -> (f64, f64) {
    if v == 0.0 {
        return (0.0, 0.0);
    }
    let chi = ChiSquared::new(eta).expect("positive degrees of freedom");
    let upper_q = chi.inverse_cdf(1.0 - alpha / 2.0);
    let lower_q = chi.inverse_cdf(alpha / 2.0);
    (eta * v / upper_q, eta * v / lower_q)
}

fn level_variance<F: Scalar>(w: &[F], tuning: Option<&robust::Tuning>) -> F {
    match tuning {
        None => sum_sq(w) / F::lit(w.len() as f64),
        Some(t) => F::lit(t.scale2(w)),
    }
}

/// Estimates only, MODWT, streamed level by level without keeping the
/// decomposition. Used for bootstrap replicates where intervals are not
/// needed. `efficiency = None` or `Some(1.0)` gives the classical estimator.
pub(crate) fn wv_estimates(signal: &[f64], levels: usize, efficiency: Option<f64>) -> Result<Vec<f64>> {
    let needed = 1usize << levels;
    if signal.len() < needed {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            needed,
        });
    }
    check_finite(signal)?;
    let tuning = match efficiency {
        Some(eff) => robust::Tuning::for_efficiency(eff)?,
        None => None,
    };
    let mut out = Vec::with_capacity(levels);
    match tuning {
        None => wavelet::modwt_energies(signal, levels, |_, e, n| out.push(e / n as f64)),
        Some(t) => wavelet::modwt_levels(signal, levels, |_, w| out.push(t.scale2(w))),
    }
    Ok(out)
}

impl<F: Scalar> WvSeries<F> {
    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn to_f64(&self) -> WvSeries<f64> {
        let conv = |v: &[F]| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        WvSeries {
            levels: self.levels.clone(),
            scales: self.scales.clone(),
            estimates: conv(&self.estimates),
            ci_lo: conv(&self.ci_lo),
            ci_hi: conv(&self.ci_hi),
            counts: self.counts.clone(),
            edf: self.edf.clone(),
            transform: self.transform,
            robust: self.robust,
            efficiency: self.efficiency,
            alpha: self.alpha,
            freq: self.freq,
            signal_len: self.signal_len,
            degenerate: self.degenerate,
        }
    }

    /// Keeps the first `levels` scales.
    pub fn truncate(&mut self, levels: usize) {
        self.levels.truncate(levels);
        self.scales.truncate(levels);
        self.estimates.truncate(levels);
        self.ci_lo.truncate(levels);
        self.ci_hi.truncate(levels);
        self.counts.truncate(levels);
        self.edf.truncate(levels);
    }

    /// CSV with columns `scale,estimate,ci_lo,ci_hi,n`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scale", "estimate", "ci_lo", "ci_hi", "n"])?;
        for i in 0..self.len() {
            w.write_record([
                fmt_num(self.scales[i]),
                fmt_num(self.estimates[i].as_f64()),
                fmt_num(self.ci_lo[i].as_f64()),
                fmt_num(self.ci_hi[i].as_f64()),
                self.counts[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form, used for every numeric CSV cell.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests;
