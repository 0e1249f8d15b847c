//! Allan, modified Allan and Hadamard variances of rate-type signals.
//!
//! Cluster averages `ybar(i, m) = mean(x[i..i+m])`; for dyadic `m` they are
//! taken from the same pyramid as the Haar MODWT, which is what makes the
//! Allan/wavelet relation hold to the last bit.
//!
//! * Allan, non-overlapping: `sum_k (ybar_{k+1} - ybar_k)^2 / (2 (K - 1))`
//!   over the `K = floor(T/m)` disjoint clusters.
//! * Allan, overlapping: `Delta_i = ybar(i+m) - ybar(i)`,
//!   `sum Delta_i^2 / (2 (T - 2m + 1))`.
//! * Modified Allan: `sum_j (mean_{i=j}^{j+m-1} Delta_i)^2 / (2 (T - 3m + 2))`.
//! * Hadamard: second differences `ybar(i+2m) - 2 ybar(i+m) + ybar(i)`,
//!   squared and divided by 6 times their count (disjoint or overlapping).

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{chi2_interval, fmt_num};
use crate::scalar::{check_finite, sum_sq, Scalar};
use crate::wavelet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterStat {
    Allan,
    ModifiedAllan,
    Hadamard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub stat: ClusterStat,
    /// Overlapping windows; the modified Allan variance always overlaps.
    pub overlapping: bool,
    /// Averaging lengths in samples; dyadic up to the admissible maximum
    /// when absent.
    pub lengths: Option<Vec<usize>>,
    pub freq: f64,
    pub alpha: f64,
}

impl ClusterConfig {
    pub fn new(stat: ClusterStat) -> Self {
        ClusterConfig {
            stat,
            overlapping: stat == ClusterStat::ModifiedAllan,
            lengths: None,
            freq: 1.0,
            alpha: 0.05,
        }
    }
}

/// Allan-type variance per averaging length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterVariance<F> {
    pub stat: ClusterStat,
    pub overlapping: bool,
    /// Averaging lengths in samples.
    pub m: Vec<usize>,
    /// `m / freq`, in seconds.
    pub tau: Vec<f64>,
    pub estimates: Vec<F>,
    pub ci_lo: Vec<F>,
    pub ci_hi: Vec<F>,
    /// Number of squared differences averaged.
    pub counts: Vec<usize>,
    pub edf: Vec<f64>,
    pub freq: f64,
}

pub type AvSeries<F> = ClusterVariance<F>;
pub type HvSeries<F> = ClusterVariance<F>;

/// Number of samples per unit of `m` a statistic spans: 2 for Allan, 3 for
/// the three-cluster statistics.
fn span(stat: ClusterStat) -> usize {
    match stat {
        ClusterStat::Allan => 2,
        ClusterStat::ModifiedAllan | ClusterStat::Hadamard => 3,
    }
}

fn min_len(stat: ClusterStat, overlapping: bool, m: usize) -> usize {
    match (stat, overlapping) {
        (ClusterStat::ModifiedAllan, _) => 3 * m - 1,
        (s, _) => span(s) * m,
    }
}

/// Dyadic averaging lengths `1, 2, 4, ...` admissible for a signal of `len`
/// samples.
pub fn dyadic_lengths(len: usize, stat: ClusterStat) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = 1usize;
    while min_len(stat, true, m) <= len && m <= len / span(stat) {
        out.push(m);
        m *= 2;
    }
    out
}

pub fn avar<F: Scalar>(signal: &[F], cfg: &ClusterConfig) -> Result<AvSeries<F>> {
    if cfg.stat == ClusterStat::Hadamard {
        return Err(Error::InvalidArgument("use hvar for the Hadamard variance".into()));
    }
    cluster_variance(signal, cfg)
}

pub fn hvar<F: Scalar>(signal: &[F], cfg: &ClusterConfig) -> Result<HvSeries<F>> {
    if cfg.stat != ClusterStat::Hadamard {
        return Err(Error::InvalidArgument("hvar computes the Hadamard variance".into()));
    }
    cluster_variance(signal, cfg)
}

fn cluster_variance<F: Scalar>(signal: &[F], cfg: &ClusterConfig) -> Result<ClusterVariance<F>> {
    check_finite(signal)?;
    if !(cfg.freq > 0.0 && cfg.freq.is_finite()) {
        return Err(Error::InvalidArgument(format!("frequency must be positive, got {}", cfg.freq)));
    }
    let overlapping = cfg.overlapping || cfg.stat == ClusterStat::ModifiedAllan;
    let len = signal.len();
    let lengths = match &cfg.lengths {
        Some(l) => l.clone(),
        None => dyadic_lengths(len, cfg.stat),
    };
    if lengths.is_empty() {
        return Err(Error::SignalTooShort {
            len,
            needed: min_len(cfg.stat, overlapping, 1),
        });
    }
    for &m in &lengths {
        if m == 0 {
            return Err(Error::InvalidArgument("averaging length must be at least 1".into()));
        }
        let needed = min_len(cfg.stat, overlapping, m);
        if len < needed {
            return Err(Error::SignalTooShort { len, needed });
        }
    }

    let mut results: Vec<Option<(F, usize)>> = vec![None; lengths.len()];
    let max_k = lengths
        .iter()
        .filter(|m| m.is_power_of_two())
        .map(|m| m.trailing_zeros() as usize)
        .max();
    if let Some(max_k) = max_k {
        wavelet::dyadic_means(signal, max_k, |k, means| {
            let m = 1usize << k;
            for (slot, &mm) in results.iter_mut().zip(&lengths) {
                if mm == m {
                    *slot = Some(statistic(means, len, m, cfg.stat, overlapping));
                }
            }
        });
    }
    for (slot, &m) in results.iter_mut().zip(&lengths) {
        if slot.is_none() {
            let means = moving_means(signal, m);
            *slot = Some(statistic(&means, len, m, cfg.stat, overlapping));
        }
    }

    let stride_factor = span(cfg.stat) as f64;
    let mut out = ClusterVariance {
        stat: cfg.stat,
        overlapping,
        m: lengths.clone(),
        tau: lengths.iter().map(|&m| m as f64 / cfg.freq).collect(),
        estimates: Vec::new(),
        ci_lo: Vec::new(),
        ci_hi: Vec::new(),
        counts: Vec::new(),
        edf: Vec::new(),
        freq: cfg.freq,
    };
    for (r, &m) in results.into_iter().zip(&lengths) {
        let (v, n) = r.expect("every length evaluated");
        let stride = if overlapping { 1.0 } else { m as f64 };
        let eta = (n as f64 * stride / (stride_factor * m as f64)).max(1.0);
        let (lo, hi) = chi2_interval(v.as_f64(), eta, cfg.alpha);
        out.estimates.push(v);
        out.ci_lo.push(F::lit(lo));
        out.ci_hi.push(F::lit(hi));
        out.counts.push(n);
        out.edf.push(eta);
    }
    Ok(out)
}

/// Overlapping means of width `m` for arbitrary `m`, accumulated on the
/// centered signal.
fn moving_means<F: Scalar>(signal: &[F], m: usize) -> Vec<F> {
    let n = signal.len();
    let center = signal.iter().map(|x| x.as_f64()).sum::<f64>() / n as f64;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for x in signal {
        acc += x.as_f64() - center;
        prefix.push(acc);
    }
    (0..=n - m)
        .map(|i| F::lit(center + (prefix[i + m] - prefix[i]) / m as f64))
        .collect()
}

fn statistic<F: Scalar>(means: &[F], len: usize, m: usize, stat: ClusterStat, overlapping: bool) -> (F, usize) {
    let two = F::lit(2.0);
    match (stat, overlapping) {
        (ClusterStat::Allan, false) => {
            let k = len / m;
            let d: Vec<F> = (0..k - 1).map(|c| means[(c + 1) * m] - means[c * m]).collect();
            (sum_sq(&d) / F::lit(2.0 * d.len() as f64), d.len())
        }
        (ClusterStat::Allan, true) => {
            let d: Vec<F> = (0..=len - 2 * m).map(|i| means[i + m] - means[i]).collect();
            (sum_sq(&d) / F::lit(2.0 * d.len() as f64), d.len())
        }
        (ClusterStat::ModifiedAllan, _) => {
            let d: Vec<f64> = (0..=len - 2 * m).map(|i| (means[i + m] - means[i]).as_f64()).collect();
            let mut prefix = Vec::with_capacity(d.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for v in &d {
                acc += v;
                prefix.push(acc);
            }
            let terms: Vec<F> = (0..=len + 1 - 3 * m)
                .map(|j| F::lit((prefix[j + m] - prefix[j]) / m as f64))
                .collect();
            (sum_sq(&terms) / F::lit(2.0 * terms.len() as f64), terms.len())
        }
        (ClusterStat::Hadamard, false) => {
            let k = len / m;
            let d: Vec<F> = (0..k - 2)
                .map(|c| means[(c + 2) * m] - two * means[(c + 1) * m] + means[c * m])
                .collect();
            (sum_sq(&d) / F::lit(6.0 * d.len() as f64), d.len())
        }
        (ClusterStat::Hadamard, true) => {
            let d: Vec<F> = (0..=len - 3 * m)
                .map(|i| means[i + 2 * m] - two * means[i + m] + means[i])
                .collect();
            (sum_sq(&d) / F::lit(6.0 * d.len() as f64), d.len())
        }
    }
}

/// Haar wavelet variance restricted to the MODWT coefficients that line up
/// with disjoint clusters of length `m = 2^(j-1)`: times `t = (k+2) m - 1`.
/// Twice this equals the non-overlapping Allan variance at `m`.
pub fn haar_matched_wv<F: Scalar>(signal: &[F], levels: usize) -> Result<Vec<F>> {
    let decomp = wavelet::modwt_haar(signal, levels)?;
    Ok((1..=levels)
        .map(|j| {
            let m = 1usize << (j - 1);
            let w: Vec<F> = decomp.level(j).iter().step_by(m).copied().collect();
            sum_sq(&w) / F::lit(w.len() as f64)
        })
        .collect())
}

impl<F: Scalar> ClusterVariance<F> {
    /// CSV with columns `scale,estimate,ci_lo,ci_hi,n` (scale is `tau`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scale", "estimate", "ci_lo", "ci_hi", "n"])?;
        for i in 0..self.m.len() {
            w.write_record([
                fmt_num(self.tau[i]),
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
