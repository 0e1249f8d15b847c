use std::fmt;

use serde::{Deserialize, Serialize};

use super::WvSeries;
use crate::scalar::Scalar;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Agree,
    RobustPreferable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Agree => f.write_str("agree"),
            Verdict::RobustPreferable => f.write_str("robust analysis preferable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scales: Vec<f64>,
    /// `b / a` per scale (1 where both are zero).
    pub ratios: Vec<f64>,
    pub overlap: Vec<bool>,
    pub disjoint_scales: usize,
    pub verdict: Verdict,
}

/// Compares two WV series on the same scale grid (typically classical
/// against robust). Two or more scales with disjoint intervals call for the
/// robust analysis.
pub fn compare_wvar<F: Scalar>(a: &WvSeries<F>, b: &WvSeries<F>) -> Result<ComparisonReport> {
    if a.levels != b.levels || a.scales != b.scales {
        return Err(Error::MismatchedScales);
    }
    let mut ratios = Vec::with_capacity(a.len());
    let mut overlap = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let (x, y) = (a.estimates[i].as_f64(), b.estimates[i].as_f64());
        ratios.push(if x == 0.0 && y == 0.0 { 1.0 } else { y / x });
        overlap.push(a.ci_lo[i] <= b.ci_hi[i] && b.ci_lo[i] <= a.ci_hi[i]);
    }
    let disjoint_scales = overlap.iter().filter(|o| !**o).count();
    Ok(ComparisonReport {
        scales: a.scales.clone(),
        ratios,
        overlap,
        disjoint_scales,
        verdict: if disjoint_scales >= 2 {
            Verdict::RobustPreferable
        } else {
            Verdict::Agree
        },
    })
}
