//! Composite latent-process models and their textual grammar.
//!
//! A model is a sum of independent elementary processes, written as
//! `3*GM()+WN()+QN()+RW()`. Named arguments give starting values
//! (`AR1(phi=0.9,sigma2=0.1)`); `name:=value` pins a parameter so the
//! estimator leaves it untouched.

mod parse;
mod reparam;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use parse::parse_model;
pub use reparam::{ar1_to_gm, gm_to_ar1};

/// Elementary process kinds of the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessKind {
    /// Gauss-Markov, parametrized by (beta, sigma2_gm).
    Gm,
    /// First-order autoregression (phi, sigma2).
    Ar1,
    /// White noise (sigma2).
    Wn,
    /// Quantization noise (q2).
    Qn,
    /// Random walk (gamma2).
    Rw,
    /// Deterministic drift (omega).
    Dr,
    Ar(usize),
    Ma(usize),
    Arma(usize, usize),
}

impl ProcessKind {
    pub fn label(&self) -> String {
        match self {
            ProcessKind::Gm => "GM".into(),
            ProcessKind::Ar1 => "AR1".into(),
            ProcessKind::Wn => "WN".into(),
            ProcessKind::Qn => "QN".into(),
            ProcessKind::Rw => "RW".into(),
            ProcessKind::Dr => "DR".into(),
            ProcessKind::Ar(p) => format!("AR({p})"),
            ProcessKind::Ma(q) => format!("MA({q})"),
            ProcessKind::Arma(p, q) => format!("ARMA({p},{q})"),
        }
    }

    /// GM and AR1 are the only kinds that may appear more than once.
    pub fn repeatable(&self) -> bool {
        matches!(self, ProcessKind::Gm | ProcessKind::Ar1)
    }

    /// Kind identity ignoring ARMA orders, used for the once-only rule.
    fn family(&self) -> &'static str {
        match self {
            ProcessKind::Gm => "GM",
            ProcessKind::Ar1 => "AR1",
            ProcessKind::Wn => "WN",
            ProcessKind::Qn => "QN",
            ProcessKind::Rw => "RW",
            ProcessKind::Dr => "DR",
            ProcessKind::Ar(_) => "AR",
            ProcessKind::Ma(_) => "MA",
            ProcessKind::Arma(..) => "ARMA",
        }
    }

    /// Parameter names and bounds in layout order.
    pub fn param_layout(&self) -> Vec<(String, Bounds)> {
        let pos = Bounds::Positive;
        match *self {
            ProcessKind::Gm => vec![("beta".into(), pos), ("sigma2_gm".into(), pos)],
            ProcessKind::Ar1 => vec![("phi".into(), Bounds::UnitInterval), ("sigma2".into(), pos)],
            ProcessKind::Wn => vec![("sigma2".into(), pos)],
            ProcessKind::Qn => vec![("q2".into(), pos)],
            ProcessKind::Rw => vec![("gamma2".into(), pos)],
            ProcessKind::Dr => vec![("omega".into(), Bounds::Real)],
            ProcessKind::Ar(p) => coefficient_layout("ar", p, Bounds::Stationary),
            ProcessKind::Ma(q) => coefficient_layout("ma", q, Bounds::Invertible),
            ProcessKind::Arma(p, q) => {
                let mut v = coefficient_layout("ar", p, Bounds::Stationary);
                v.pop();
                v.extend(coefficient_layout("ma", q, Bounds::Invertible));
                v
            }
        }
    }

    pub fn n_params(&self) -> usize {
        match *self {
            ProcessKind::Gm | ProcessKind::Ar1 => 2,
            ProcessKind::Wn | ProcessKind::Qn | ProcessKind::Rw | ProcessKind::Dr => 1,
            ProcessKind::Ar(p) => p + 1,
            ProcessKind::Ma(q) => q + 1,
            ProcessKind::Arma(p, q) => p + q + 1,
        }
    }
}

fn coefficient_layout(prefix: &str, n: usize, bounds: Bounds) -> Vec<(String, Bounds)> {
    let mut v: Vec<(String, Bounds)> = (1..=n).map(|i| (format!("{prefix}{i}"), bounds)).collect();
    v.push(("sigma2".into(), Bounds::Positive));
    v
}

/// Admissible region of a single parameter. `Stationary` and `Invertible`
/// are joint constraints over a coefficient group; individually they only
/// require finiteness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bounds {
    Positive,
    UnitInterval,
    Real,
    Stationary,
    Invertible,
}

impl Bounds {
    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match self {
            Bounds::Positive => x > 0.0,
            Bounds::UnitInterval => x > -1.0 && x < 1.0,
            Bounds::Real | Bounds::Stationary | Bounds::Invertible => true,
        }
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bounds::Positive => write!(f, "(0, inf)"),
            Bounds::UnitInterval => write!(f, "(-1, 1)"),
            Bounds::Real => write!(f, "(-inf, inf)"),
            Bounds::Stationary => write!(f, "stationary region"),
            Bounds::Invertible => write!(f, "invertible region"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub bounds: Bounds,
    /// Starting value supplied in the model string.
    pub start: Option<f64>,
    /// Pinned: the estimator keeps `start` and reports a zero-width interval.
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessBlock {
    pub kind: ProcessKind,
    pub params: Vec<ParamSpec>,
}

impl ParamSpec {
    /// True for parameters that scale with the signal variance (every
    /// positive parameter except the GM correlation rate).
    pub fn is_variance(&self) -> bool {
        self.bounds == Bounds::Positive && self.name != "beta"
    }
}

impl ProcessBlock {
    pub fn new(kind: ProcessKind) -> Self {
        let params = kind
            .param_layout()
            .into_iter()
            .map(|(name, bounds)| ParamSpec {
                name,
                bounds,
                start: None,
                fixed: false,
            })
            .collect();
        ProcessBlock { kind, params }
    }

    fn has_starts(&self) -> bool {
        self.params.iter().any(|p| p.start.is_some())
    }
}

/// Parsed composite model. `theta` holds natural-space values once known
/// (after a fit, or when built from explicit values); its layout is the
/// concatenation of block parameters in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModel {
    pub blocks: Vec<ProcessBlock>,
    pub freq: f64,
    pub theta: Option<Vec<f64>>,
}

impl LatentModel {
    pub fn new(blocks: Vec<ProcessBlock>, freq: f64) -> Result<Self> {
        if !(freq > 0.0 && freq.is_finite()) {
            return Err(Error::InvalidArgument(format!("frequency must be positive, got {freq}")));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("model has no processes".into()));
        }
        let mut seen: Vec<&str> = Vec::new();
        for b in &blocks {
            if !b.kind.repeatable() {
                let fam = b.kind.family();
                if seen.contains(&fam) {
                    return Err(Error::DuplicateProcess(fam.into()));
                }
                seen.push(fam);
            }
            if let ProcessKind::Arma(0, 0) = b.kind {
                return Err(Error::InvalidArgument("ARMA(0,0) is white noise; use WN()".into()));
            }
            if let ProcessKind::Ar(0) | ProcessKind::Ma(0) = b.kind {
                return Err(Error::InvalidArgument("AR/MA order must be at least 1".into()));
            }
            for p in &b.params {
                if let Some(v) = p.start {
                    if !p.bounds.contains(v) {
                        return Err(Error::OutOfBounds {
                            name: p.name.clone(),
                            value: v,
                            bounds: p.bounds.to_string(),
                        });
                    }
                }
                if p.fixed && p.start.is_none() {
                    return Err(Error::InvalidArgument(format!(
                        "pinned parameter `{}` needs a value",
                        p.name
                    )));
                }
            }
        }
        Ok(LatentModel {
            blocks,
            freq,
            theta: None,
        })
    }

    /// Total number of parameters, pinned ones included.
    pub fn n_params(&self) -> usize {
        self.blocks.iter().map(|b| b.params.len()).sum()
    }

    /// Number of free (estimated) parameters, the `p` of the estimator.
    pub fn n_free(&self) -> usize {
        self.params().filter(|p| !p.fixed).count()
    }

    pub fn params(&self) -> impl Iterator<Item = &ParamSpec> {
        self.blocks.iter().flat_map(|b| b.params.iter())
    }

    pub fn free_indices(&self) -> Vec<usize> {
        self.params()
            .enumerate()
            .filter(|(_, p)| !p.fixed)
            .map(|(i, _)| i)
            .collect()
    }

    /// Index of the first parameter of each block in the flat layout.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = off;
                off += b.params.len();
                o
            })
            .collect()
    }

    /// Flat parameter labels, e.g. `beta[1]` for the first GM block.
    pub fn param_labels(&self) -> Vec<String> {
        let mut counts = std::collections::HashMap::new();
        let mut out = Vec::new();
        for b in &self.blocks {
            let n = counts.entry(b.kind.family()).or_insert(0usize);
            *n += 1;
            for p in &b.params {
                if b.kind.repeatable() {
                    out.push(format!("{}[{}]", p.name, n));
                } else {
                    out.push(format!("{}.{}", b.kind.family(), p.name));
                }
            }
        }
        out
    }

    /// Starting values in layout order (None where not supplied).
    pub fn starts(&self) -> Vec<Option<f64>> {
        self.params().map(|p| p.start).collect()
    }

    pub fn bounds(&self) -> Vec<Bounds> {
        self.params().map(|p| p.bounds).collect()
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        self.check_theta(&theta)?;
        let mut m = self.clone();
        m.theta = Some(theta);
        Ok(m)
    }

    pub fn theta(&self) -> Result<&[f64]> {
        self.theta
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("model has no parameter values".into()))
    }

    /// Checks length, per-parameter bounds and the joint ARMA constraints.
    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                theta.len()
            )));
        }
        for (p, &v) in self.params().zip(theta) {
            if !p.bounds.contains(v) {
                return Err(Error::OutOfBounds {
                    name: p.name.clone(),
                    value: v,
                    bounds: p.bounds.to_string(),
                });
            }
        }
        for (b, off) in self.blocks.iter().zip(self.block_offsets()) {
            let (p, q) = match b.kind {
                ProcessKind::Ar(p) => (p, 0),
                ProcessKind::Ma(q) => (0, q),
                ProcessKind::Arma(p, q) => (p, q),
                _ => continue,
            };
            let ar = &theta[off..off + p];
            let ma = &theta[off + p..off + p + q];
            if crate::implied::arma::ar_to_pacf(ar).is_none() {
                return Err(Error::OutOfBounds {
                    name: format!("{}.ar", b.kind.label()),
                    value: f64::NAN,
                    bounds: Bounds::Stationary.to_string(),
                });
            }
            let neg: Vec<f64> = ma.iter().map(|x| -x).collect();
            if crate::implied::arma::ar_to_pacf(&neg).is_none() {
                return Err(Error::OutOfBounds {
                    name: format!("{}.ma", b.kind.label()),
                    value: f64::NAN,
                    bounds: Bounds::Invertible.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_model(&m.render(), m.freq)` rebuilds the
    /// same blocks. Consecutive identical GM/AR1 blocks are folded into `k*`.
    pub fn render(&self) -> String {
        let mut terms: Vec<String> = Vec::new();
        let mut i = 0;
        while i < self.blocks.len() {
            let b = &self.blocks[i];
            let mut k = 1;
            if b.kind.repeatable() {
                while i + k < self.blocks.len() && self.blocks[i + k] == *b {
                    k += 1;
                }
            }
            let body = render_block(b);
            terms.push(if k > 1 { format!("{k}*{body}") } else { body });
            i += k;
        }
        terms.join("+")
    }

    /// Render with the values of `theta` written as starting values.
    pub fn render_with_values(&self, theta: &[f64]) -> String {
        let mut m = self.clone();
        let mut it = theta.iter();
        for b in &mut m.blocks {
            let coeffs = matches!(b.kind, ProcessKind::Ar(_) | ProcessKind::Ma(_) | ProcessKind::Arma(..));
            for p in &mut b.params {
                let v = *it.next().expect("theta length");
                if !coeffs || p.name == "sigma2" {
                    p.start = Some(v);
                }
            }
        }
        m.render()
    }

    /// Structural description without starting values: used to compare
    /// candidate models.
    pub fn structure(&self) -> Vec<ProcessKind> {
        self.blocks.iter().map(|b| b.kind).collect()
    }
}

fn render_block(b: &ProcessBlock) -> String {
    let head = match b.kind {
        ProcessKind::Ar(p) => format!("AR({p}"),
        ProcessKind::Ma(q) => format!("MA({q}"),
        ProcessKind::Arma(p, q) => format!("ARMA({p},{q}"),
        other => format!("{}(", other.label()),
    };
    let ordered = matches!(b.kind, ProcessKind::Ar(_) | ProcessKind::Ma(_) | ProcessKind::Arma(..));
    let mut args: Vec<String> = Vec::new();
    if b.has_starts() {
        for p in &b.params {
            if let Some(v) = p.start {
                let op = if p.fixed { ":=" } else { "=" };
                args.push(format!("{}{}{:?}", p.name, op, v));
            }
        }
    }
    let sep = if ordered && !args.is_empty() { "," } else { "" };
    format!("{head}{sep}{})", args.join(","))
}

impl fmt::Display for LatentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
