//! Map between the bounded parameter space and the unconstrained space the
//! simplex search runs in. Only free parameters get coordinates; pinned ones
//! are copied from the model.

use crate::implied::arma::{ar_to_pacf, pacf_to_ar};
use crate::model::{Bounds, LatentModel, ProcessKind};

#[derive(Debug, Clone)]
enum Map {
    /// `x = exp(z)`
    Log(usize),
    /// `x = tanh(z / 2)`, a logit rescaled to (-1, 1)
    Tanh(usize),
    Id(usize),
    /// A fully free AR or MA coefficient group through its partial
    /// autocorrelations, each `tanh(z / 2)`. MA groups are stored negated.
    Pacf { idx: Vec<usize>, negate: bool },
}

#[derive(Debug, Clone)]
pub(crate) struct Codec {
    template: Vec<f64>,
    maps: Vec<Map>,
    dim: usize,
}

impl Codec {
    /// `template` supplies the values of pinned parameters (free entries are
    /// overwritten on decode).
    pub fn new(model: &LatentModel, template: &[f64]) -> Codec {
        let mut maps = Vec::new();
        for (b, off) in model.blocks.iter().zip(model.block_offsets()) {
            let (p, q) = match b.kind {
                ProcessKind::Ar(p) => (p, 0),
                ProcessKind::Ma(q) => (0, q),
                ProcessKind::Arma(p, q) => (p, q),
                _ => (0, 0),
            };
            let mut groups = vec![(off, p, false), (off + p, q, true)];
            groups.retain(|g| g.1 > 0);
            let mut grouped = vec![false; b.params.len()];
            for (start, n, negate) in groups {
                let free = b.params[start - off..start - off + n].iter().all(|s| !s.fixed);
                if free {
                    maps.push(Map::Pacf {
                        idx: (start..start + n).collect(),
                        negate,
                    });
                    grouped[start - off..start - off + n].iter_mut().for_each(|g| *g = true);
                }
            }
            for (k, spec) in b.params.iter().enumerate() {
                if spec.fixed || grouped[k] {
                    continue;
                }
                let i = off + k;
                maps.push(match spec.bounds {
                    Bounds::Positive => Map::Log(i),
                    Bounds::UnitInterval => Map::Tanh(i),
                    // partially pinned ARMA groups are searched directly; the
                    // joint constraint is enforced by rejecting the point
                    Bounds::Real | Bounds::Stationary | Bounds::Invertible => Map::Id(i),
                });
            }
        }
        let dim = maps
            .iter()
            .map(|m| match m {
                Map::Pacf { idx, .. } => idx.len(),
                _ => 1,
            })
            .sum();
        Codec {
            template: template.to_vec(),
            maps,
            dim,
        }
    }

    #[cfg(test)]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encode(&self, theta: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.dim);
        for m in &self.maps {
            match m {
                Map::Log(i) => z.push(theta[*i].ln()),
                Map::Tanh(i) => z.push(2.0 * theta[*i].atanh()),
                Map::Id(i) => z.push(theta[*i]),
                Map::Pacf { idx, negate } => {
                    let coeffs: Vec<f64> = idx.iter().map(|&i| if *negate { -theta[i] } else { theta[i] }).collect();
                    let pacf = ar_to_pacf(&coeffs).unwrap_or_else(|| vec![0.0; idx.len()]);
                    z.extend(pacf.iter().map(|r| 2.0 * r.atanh()));
                }
            }
        }
        z
    }

    /// None when the point maps outside the admissible region numerically
    /// (overflow, or a correlation rounding to +-1).
    pub fn decode(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut theta = self.template.clone();
        let mut k = 0;
        for m in &self.maps {
            match m {
                Map::Log(i) => {
                    theta[*i] = z[k].exp();
                    k += 1;
                }
                Map::Tanh(i) => {
                    theta[*i] = (z[k] / 2.0).tanh();
                    k += 1;
                }
                Map::Id(i) => {
                    theta[*i] = z[k];
                    k += 1;
                }
                Map::Pacf { idx, negate } => {
                    let pacf: Vec<f64> = z[k..k + idx.len()].iter().map(|v| (v / 2.0).tanh()).collect();
                    if pacf.iter().any(|r| r.abs() >= 1.0) {
                        return None;
                    }
                    for (&i, c) in idx.iter().zip(pacf_to_ar(&pacf)) {
                        theta[i] = if *negate { -c } else { c };
                    }
                    k += idx.len();
                }
            }
        }
        let ok = theta.iter().all(|v| v.is_finite())
            && self.maps.iter().all(|m| match m {
                Map::Log(i) => theta[*i] > 0.0,
                Map::Tanh(i) => theta[*i].abs() < 1.0,
                _ => true,
            });
        ok.then_some(theta)
    }
}
