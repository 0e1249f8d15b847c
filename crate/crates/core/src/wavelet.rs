//! Haar DWT and MODWT across dyadic scales `tau_j = 2^j`.
//!
//! The MODWT keeps only boundary-free coefficients: level `j` holds
//! `T - 2^j + 1` values, the first one at (0-based) time `2^j - 1`. It is
//! computed with the pyramid recursion on moving averages, which is O(T) per
//! level and free of the cancellation that cumulative sums suffer on
//! signals with a large offset.

use serde::{Deserialize, Serialize};

use crate::scalar::{check_finite, PairwiseAcc, Scalar, LEAF};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Transform {
    #[default]
    Modwt,
    Dwt,
}

/// Wavelet filter families. Only Haar is implemented; the others are
/// accepted by name so callers get a clean error instead of a parse failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum WaveletFilter {
    #[default]
    Haar,
    Daubechies(usize),
    FejerKorovkin(usize),
    BattleLemarie(usize),
    LeastAsymmetric(usize),
    MinimumBandwidth(usize),
}

impl WaveletFilter {
    fn ensure_haar(&self) -> Result<()> {
        match self {
            WaveletFilter::Haar => Ok(()),
            other => Err(Error::UnsupportedFilter(format!("{other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition<F> {
    pub transform: Transform,
    /// `coefficients[j - 1]` are the level-`j` wavelet coefficients.
    pub coefficients: Vec<Vec<F>>,
    /// DWT scaling coefficients at the coarsest level (empty for MODWT).
    pub scaling: Vec<F>,
    pub signal_len: usize,
}

impl<F: Scalar> WaveletDecomposition<F> {
    pub fn levels(&self) -> usize {
        self.coefficients.len()
    }

    pub fn level(&self, j: usize) -> &[F] {
        &self.coefficients[j - 1]
    }

    /// Haar filter width at level `j`.
    pub fn filter_len(j: usize) -> usize {
        1 << j
    }

    pub fn scale(j: usize) -> usize {
        1 << j
    }
}

/// `floor(log2 T) - 1`, which keeps at least two coefficients per window at
/// the coarsest scale.
pub fn default_levels(len: usize) -> usize {
    if len < 4 {
        return 1;
    }
    (usize::BITS - 1 - len.leading_zeros()) as usize - 1
}

fn check_len(len: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::InvalidArgument("at least one level is required".into()));
    }
    if levels >= usize::BITS as usize - 1 {
        return Err(Error::InvalidArgument(format!("{levels} levels is not representable")));
    }
    let needed = 1usize << levels;
    if len < needed {
        return Err(Error::SignalTooShort { len, needed });
    }
    Ok(())
}

pub fn decompose<F: Scalar>(
    signal: &[F],
    levels: usize,
    transform: Transform,
    filter: WaveletFilter,
) -> Result<WaveletDecomposition<F>> {
    filter.ensure_haar()?;
    match transform {
        Transform::Modwt => modwt_haar(signal, levels),
        Transform::Dwt => dwt_haar(signal, levels),
    }
}

/// Boundary-free Haar MODWT:
/// `W[j,t] = 2^-j (sum_{i<2^(j-1)} x[t-i] - sum_{2^(j-1)<=i<2^j} x[t-i])`.
pub fn modwt_haar<F: Scalar>(signal: &[F], levels: usize) -> Result<WaveletDecomposition<F>> {
    check_len(signal.len(), levels)?;
    check_finite(signal)?;
    let mut coefficients = Vec::with_capacity(levels);
    modwt_levels(signal, levels, |_, w| coefficients.push(w.to_vec()));
    Ok(WaveletDecomposition {
        transform: Transform::Modwt,
        coefficients,
        scaling: Vec::new(),
        signal_len: signal.len(),
    })
}

/// Streams MODWT levels to `visit(j, coefficients)` without keeping them
/// all in memory. Callers must have validated the input.
pub(crate) fn modwt_levels<F: Scalar>(signal: &[F], levels: usize, mut visit: impl FnMut(usize, &[F])) {
    let half = F::lit(0.5);
    let mut means: Vec<F> = signal.to_vec();
    let mut w: Vec<F> = Vec::with_capacity(signal.len());
    for j in 1..=levels {
        let h = 1usize << (j - 1);
        let n = means.len() - h;
        w.clear();
        w.extend((0..n).map(|i| (means[i + h] - means[i]) * half));
        visit(j, &w);
        if j < levels {
            for i in 0..n {
                means[i] = (means[i + h] + means[i]) * half;
            }
            means.truncate(n);
        }
    }
}

/// Sum of squared MODWT coefficients per level, computed while the
/// scaling averages are updated so no level is materialized. Reports
/// `visit(j, sum_sq, count)`; the sums equal `sum_sq` over the coefficients
/// of [`modwt_levels`] bit for bit.
pub(crate) fn modwt_energies<F: Scalar>(signal: &[F], levels: usize, mut visit: impl FnMut(usize, F, usize)) {
    let half = F::lit(0.5);
    let mut means: Vec<F> = signal.to_vec();
    for j in 1..=levels {
        let h = 1usize << (j - 1);
        let n = means.len() - h;
        let update = j < levels;
        let mut acc = PairwiseAcc::default();
        let mut i = 0;
        while i < n {
            let end = (i + LEAF).min(n);
            let mut leaf = F::zero();
            for k in i..end {
                let (a, b) = (means[k], means[k + h]);
                let d = (b - a) * half;
                leaf = leaf + d * d;
                if update {
                    means[k] = (b + a) * half;
                }
            }
            acc.push_leaf(leaf);
            i = end;
        }
        visit(j, acc.total(), n);
        means.truncate(n);
    }
}

/// Moving averages of every dyadic width up to `2^levels`, streamed as
/// `visit(k, means)` where `means[i]` is the mean of `x[i..i + 2^k]`.
/// These are the Haar MODWT scaling averages, so Allan-type statistics
/// computed from them line up exactly with the wavelet coefficients.
pub(crate) fn dyadic_means<F: Scalar>(signal: &[F], max_k: usize, mut visit: impl FnMut(usize, &[F])) {
    let half = F::lit(0.5);
    let mut means: Vec<F> = signal.to_vec();
    visit(0, &means);
    for k in 1..=max_k {
        let h = 1usize << (k - 1);
        if means.len() <= h {
            break;
        }
        let n = means.len() - h;
        for i in 0..n {
            means[i] = (means[i + h] + means[i]) * half;
        }
        means.truncate(n);
        visit(k, &means);
    }
}

/// Orthonormal Haar DWT. Level `j` has `floor(T / 2^j)` coefficients;
/// trailing samples that do not fill a full level-`J` block are ignored, so
/// energy is preserved exactly when `2^J` divides `T`.
pub fn dwt_haar<F: Scalar>(signal: &[F], levels: usize) -> Result<WaveletDecomposition<F>> {
    check_len(signal.len(), levels)?;
    check_finite(signal)?;
    let inv_sqrt2 = F::lit(std::f64::consts::FRAC_1_SQRT_2);
    let mut approx: Vec<F> = signal.to_vec();
    let mut coefficients = Vec::with_capacity(levels);
    for _ in 0..levels {
        let n = approx.len() / 2;
        let mut d = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        for k in 0..n {
            let (x0, x1) = (approx[2 * k], approx[2 * k + 1]);
            d.push((x1 - x0) * inv_sqrt2);
            a.push((x1 + x0) * inv_sqrt2);
        }
        coefficients.push(d);
        approx = a;
    }
    Ok(WaveletDecomposition {
        transform: Transform::Dwt,
        coefficients,
        scaling: approx,
        signal_len: signal.len(),
    })
}
