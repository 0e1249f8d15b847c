//! Model selection with the Wavelet Information Criterion
//! `WIC = A + B`, where `A` is the apparent loss of a fit and `B` the
//! bootstrap estimate of `2 tr cov[nu_hat, Omega nu(theta_hat)]`.
//!
//! Candidates are compared under one weighting matrix, taken from the fit
//! of the largest candidate.

mod table;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::bootstrap::{bootstrap_ensemble, replicate_seeds};
use crate::estimator::inference::gof_from_parts;
use crate::estimator::{
    fit_levels, fit_with_ensemble, from_rows, initial_guess, minimize, refine, Minimum, summarize, weight_root, FitOptions, FitResult,
    GuessConfig, Problem, STREAM_BOOTSTRAP, STREAM_GUESS, STREAM_RESTART,
};
use crate::implied::implied_values;
use crate::model::{Bounds, LatentModel, ProcessBlock, ProcessKind};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::wv::{wvar_with, WvConfig};
use crate::{Error, Result};

pub use table::{RankingRow, RankingTable, RANKING_COLUMNS};

/// Seed stream of the replicates behind a standalone [`wic`] call.
const STREAM_WIC: u64 = 4;

/// How the optimism term `B` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WicMethod {
    /// Each candidate is bootstrapped at its own estimate.
    Bootstrap,
    /// One bootstrap of the largest candidate is shared by every candidate.
    Fast,
}

impl std::fmt::Display for WicMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WicMethod::Bootstrap => "bootstrap",
            WicMethod::Fast => "fast",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOptions {
    /// Options of the fits; `fit.bootstrap` is also the number of replicates
    /// behind `B`.
    pub fit: FitOptions,
    /// None selects the bootstrap method for [`rank_models`] and the fast one
    /// for [`auto_rank`].
    pub method: Option<WicMethod>,
    /// Largest number of candidates [`auto_rank`] will enumerate.
    pub cap: usize,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions {
            fit: FitOptions::default(),
            method: None,
            cap: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WicTerms {
    pub a: f64,
    pub b: f64,
    pub wic: f64,
    /// Monte Carlo standard error of `b`.
    pub b_se: f64,
    /// Replicates whose refit failed.
    pub dropped: usize,
}

/// WIC of a single fit, with `replicates` signals simulated at the estimate
/// and refitted under the fit's weighting matrix.
pub fn wic(fit: &FitResult, replicates: usize, seed: u64) -> Result<WicTerms> {
    if replicates < 2 {
        return Err(Error::InvalidArgument("the bootstrap needs at least two replicates".into()));
    }
    let omega = from_rows(&fit.omega);
    let levels = fit.wv.len();
    let seeds = replicate_seeds(derive_seed(seed, STREAM_WIC), replicates);
    let ensemble = bootstrap_ensemble(
        &fit.model,
        &fit.theta,
        fit.signal.len,
        levels,
        fit.options.wv_efficiency(),
        &seeds,
    )?;
    let a = Problem {
        model: &fit.model,
        nu_hat: &fit.wv.estimates,
        omega: &omega,
    }
    .objective(&fit.theta);
    let b = optimism(&fit.model, &fit.theta, &fit.start, &ensemble, &omega)?;
    Ok(WicTerms {
        a,
        b: b.value,
        wic: a + b.value,
        b_se: b.se,
        dropped: b.dropped,
    })
}

struct Optimism {
    value: f64,
    se: f64,
    dropped: usize,
}

/// `2/(H-1) sum_h (nu_h - mean)' Omega (nu(theta_h) - mean_fit)`, with
/// `theta_h` refitted to replicate `h` from `theta`. Blocks that vanish at
/// `theta` are also given a start from `base`, so a replicate can use them.
fn optimism(model: &LatentModel, theta: &[f64], base: &[f64], ensemble: &[Vec<f64>], omega: &DMatrix<f64>) -> Result<Optimism> {
    let total = ensemble.len();
    let levels = omega.nrows();
    let root = weight_root(omega);
    let second = revived(model, theta, base, levels);
    let fitted: Vec<Option<Vec<f64>>> = ensemble
        .par_iter()
        .map(|nu_hat| {
            let problem = Problem {
                model,
                nu_hat,
                omega,
            };
            let mut m = refine(&problem, theta, &root).ok()?;
            if let Some(Ok(m2)) = second.as_ref().map(|s| refine(&problem, s, &root)) {
                if m2.objective < m.objective {
                    m = m2;
                }
            }
            if !m.objective.is_finite() {
                return None;
            }
            let mut nu = vec![0.0; levels];
            implied_values(model, &m.theta, levels, &mut nu).ok()?;
            Some(nu)
        })
        .collect();
    let kept: Vec<(&Vec<f64>, &Vec<f64>)> = ensemble
        .iter()
        .zip(&fitted)
        .filter_map(|(e, f)| f.as_ref().map(|f| (e, f)))
        .collect();
    let dropped = total - kept.len();
    let n = kept.len();
    if dropped * 5 > total || n < 2 {
        return Err(Error::BootstrapFailure { dropped, total });
    }
    let mean = |rows: &mut dyn Iterator<Item = &Vec<f64>>| {
        let mut m = vec![0.0; levels];
        for r in rows {
            for (a, v) in m.iter_mut().zip(r) {
                *a += v;
            }
        }
        m.iter_mut().for_each(|a| *a /= n as f64);
        m
    };
    let mean_hat = mean(&mut kept.iter().map(|k| k.0));
    let mean_fit = mean(&mut kept.iter().map(|k| k.1));
    let terms: Vec<f64> = kept
        .iter()
        .map(|(e, f)| {
            let mut s = 0.0;
            for a in 0..levels {
                let mut row = 0.0;
                for b in 0..levels {
                    row += omega[(a, b)] * (f[b] - mean_fit[b]);
                }
                s += (e[a] - mean_hat[a]) * row;
            }
            s
        })
        .collect();
    let scale = 2.0 / (n as f64 - 1.0);
    let sum: f64 = terms.iter().sum();
    let avg = sum / n as f64;
    let var = terms.iter().map(|t| (t - avg).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Ok(Optimism {
        value: scale * sum,
        se: scale * n as f64 * (var / n as f64).sqrt(),
        dropped,
    })
}

/// Kind-preserving injective maps from the blocks of `small` into those of
/// `big`, as `map[block of small] = block of big`. Blocks of one kind keep
/// their relative order, so each subset is listed once.
fn block_maps(small: &LatentModel, big: &LatentModel, limit: usize) -> Vec<Vec<usize>> {
    fn walk(small: &LatentModel, big: &LatentModel, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        let b = cur.len();
        if b == small.blocks.len() {
            out.push(cur.clone());
            return;
        }
        let kind = small.blocks[b].kind;
        // after the previous block of the same kind
        let from = (0..b)
            .rev()
            .find(|&i| small.blocks[i].kind == kind)
            .map_or(0, |i| cur[i] + 1);
        for k in from..big.blocks.len() {
            if big.blocks[k].kind == kind && !cur.contains(&k) {
                cur.push(k);
                walk(small, big, cur, out, limit);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(small, big, &mut Vec::new(), &mut out, limit);
    out
}

/// Places a fit of `sub` into the layout of `sup`, once per block map.
/// Blocks of `sup` without a counterpart keep `base` with their variances
/// shrunk towards zero, so each point reproduces the fit of `sub` almost
/// exactly.
fn embeddings(sub: &LatentModel, sub_theta: &[f64], sup: &LatentModel, base: &[f64]) -> Vec<Vec<f64>> {
    let sup_off = sup.block_offsets();
    let sub_off = sub.block_offsets();
    block_maps(sub, sup, 16)
        .into_iter()
        .map(|map| {
            let mut theta = base.to_vec();
            for (k, b) in sup.blocks.iter().enumerate() {
                let src = map.iter().position(|&m| m == k);
                for (i, spec) in b.params.iter().enumerate() {
                    if spec.fixed {
                        continue;
                    }
                    let t = &mut theta[sup_off[k] + i];
                    match src {
                        Some(s) => *t = sub_theta[sub_off[s] + i],
                        None if spec.is_variance() => *t *= 1e-12,
                        None if spec.bounds == Bounds::Real => *t *= 1e-6,
                        None => {}
                    }
                }
            }
            theta
        })
        .collect()
}

/// Restrictions of a fit of `sup` to the blocks of `sub`, once per block
/// map. Pinned values of `sub` come from `base`.
fn restrictions(sup: &LatentModel, sup_theta: &[f64], sub: &LatentModel, base: &[f64]) -> Vec<Vec<f64>> {
    let sup_off = sup.block_offsets();
    let sub_off = sub.block_offsets();
    block_maps(sub, sup, 16)
        .into_iter()
        .map(|map| {
            let mut theta = base.to_vec();
            for (s, b) in sub.blocks.iter().enumerate() {
                for (i, spec) in b.params.iter().enumerate() {
                    if !spec.fixed {
                        theta[sub_off[s] + i] = sup_theta[sup_off[map[s]] + i];
                    }
                }
            }
            theta
        })
        .collect()
}

/// `theta` with every block that contributes nothing to the implied WV
/// replaced by its values in `base`; None when no block is dormant.
fn revived(model: &LatentModel, theta: &[f64], base: &[f64], levels: usize) -> Option<Vec<f64>> {
    let mut total = vec![0.0; levels];
    implied_values(model, theta, levels, &mut total).ok()?;
    let mut out = theta.to_vec();
    let mut any = false;
    for (b, off) in model.blocks.iter().zip(model.block_offsets()) {
        let n = b.params.len();
        let single = LatentModel::new(vec![b.clone()], model.freq).ok()?;
        let mut part = vec![0.0; levels];
        implied_values(&single, &theta[off..off + n], levels, &mut part).ok()?;
        let share = part.iter().zip(&total).map(|(p, t)| p.abs() / t.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        if share < 1e-6 {
            out[off..off + n].copy_from_slice(&base[off..off + n]);
            any = true;
        }
    }
    any.then_some(out)
}

/// Fits and ranks `candidates` by WIC.
pub fn rank_models<F: Scalar>(signal: &[F], candidates: &[LatentModel], opts: &RankOptions) -> Result<RankingTable> {
    rank_with(signal, candidates, opts, opts.method.unwrap_or(WicMethod::Bootstrap))
}

/// [`rank_models`] with the fast method: one bootstrap of the largest
/// candidate serves every candidate.
pub fn wic_fast<F: Scalar>(signal: &[F], candidates: &[LatentModel], opts: &RankOptions) -> Result<RankingTable> {
    rank_with(signal, candidates, opts, WicMethod::Fast)
}

/// Ranks every sub-model of `full` (see [`enumerate_submodels`]).
pub fn auto_rank<F: Scalar>(signal: &[F], full: &LatentModel, opts: &RankOptions) -> Result<RankingTable> {
    let candidates = enumerate_submodels(full, opts.cap)?;
    rank_with(signal, &candidates, opts, opts.method.unwrap_or(WicMethod::Fast))
}

/// All non-empty sub-models of `full`: each GM and AR1 multiplicity from 0
/// to its count in `full`, crossed with the inclusion of every other block.
/// Orders of AR/MA/ARMA blocks are kept as declared.
pub fn enumerate_submodels(full: &LatentModel, cap: usize) -> Result<Vec<LatentModel>> {
    let mut groups: Vec<(ProcessKind, Vec<usize>)> = Vec::new();
    for (i, b) in full.blocks.iter().enumerate() {
        match groups.iter_mut().find(|g| b.kind.repeatable() && g.0 == b.kind) {
            Some(g) => g.1.push(i),
            None => groups.push((b.kind, vec![i])),
        }
    }
    let choices: Vec<usize> = groups.iter().map(|g| g.1.len() + 1).collect();
    let count = choices.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c)).unwrap_or(usize::MAX) - 1;
    if count > cap {
        return Err(Error::TooManyCandidates { count, cap });
    }
    let mut out = Vec::with_capacity(count);
    let mut pick = vec![0usize; groups.len()];
    loop {
        // odometer over the multiplicities, last group fastest
        let mut k = groups.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < choices[k] {
                break;
            }
            pick[k] = 0;
        }
        let mut keep = vec![false; full.blocks.len()];
        for (g, &m) in groups.iter().zip(&pick) {
            for &i in &g.1[..m] {
                keep[i] = true;
            }
        }
        let blocks: Vec<ProcessBlock> = full
            .blocks
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(b, _)| b.clone())
            .collect();
        out.push(LatentModel::new(blocks, full.freq)?);
    }
}

fn rank_with<F: Scalar>(signal: &[F], candidates: &[LatentModel], opts: &RankOptions, method: WicMethod) -> Result<RankingTable> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate models".into()));
    }
    let fo = &opts.fit;
    let len = signal.len();

    // the largest candidate that fits supplies Omega, V and the ensemble
    let mut by_size: Vec<usize> = (0..candidates.len()).collect();
    by_size.sort_by_key(|&i| std::cmp::Reverse(candidates[i].n_free()));
    let mut first_err = None;
    let mut source = None;
    for &i in &by_size {
        match fit_with_ensemble(signal, &candidates[i], fo) {
            Ok(r) => {
                source = Some((i, r));
                break;
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((src, (src_fit, src_ensemble))) = source else {
        return Err(first_err.expect("at least one candidate"));
    };
    let omega = from_rows(&src_fit.omega);
    let v = from_rows(&src_fit.v_hat);
    let levels = src_fit.wv.len();
    let wv = wvar_with(
        signal,
        &WvConfig {
            levels: Some(levels),
            alpha: fo.alpha,
            freq: candidates[src].freq,
            efficiency: fo.wv_efficiency(),
            ..WvConfig::default()
        },
    )?
    .to_f64();
    let summary = summarize(signal);
    let guess_cfg = GuessConfig {
        draws: fo.guesses,
        seed: derive_seed(fo.seed, STREAM_GUESS),
    };
    let restart_seed = derive_seed(fo.seed, STREAM_RESTART);
    let seeds = replicate_seeds(derive_seed(fo.seed, STREAM_BOOTSTRAP), fo.bootstrap);

    let objective_of = |model: &LatentModel, theta: &[f64]| {
        Problem {
            model,
            nu_hat: &wv.estimates,
            omega: &omega,
        }
        .objective(theta)
    };

    // ascending size so every candidate can start from its fitted sub-models
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| candidates[i].n_free());
    let mut guesses: Vec<Option<Vec<f64>>> = vec![None; candidates.len()];
    let mut fits: Vec<std::result::Result<Minimum, Error>> = Vec::with_capacity(candidates.len());
    for model in candidates {
        fits.push(Err(Error::InvalidArgument(format!("{} was not fitted", model.render()))));
    }
    for &i in &order {
        let model = &candidates[i];
        let res = (|| -> Result<Minimum> {
            fit_levels(len, model, Some(levels))?;
            let guess = initial_guess(model, &wv, summary, &guess_cfg)?;
            let mut starts = vec![guess.clone()];
            if i == src {
                starts.insert(0, src_fit.theta.clone());
            }
            for &k in &order {
                if k == i || candidates[k].n_free() >= model.n_free() {
                    continue;
                }
                if let Ok(f) = &fits[k] {
                    starts.extend(embeddings(&candidates[k], &f.theta, model, &guess));
                }
            }
            guesses[i] = Some(guess);
            let restarts = if i == src { 0 } else { fo.restarts };
            let problem = Problem {
                model,
                nu_hat: &wv.estimates,
                omega: &omega,
            };
            minimize(&problem, &starts, restarts, restart_seed)
        })();
        fits[i] = res;
    }

    // exchange points between nested candidates until no fit improves
    for _ in 0..3 {
        let mut changed = false;
        let passes = [order.clone(), order.iter().rev().cloned().collect::<Vec<_>>()];
        for (pass, seq) in passes.iter().enumerate() {
            for &i in seq {
                let (Ok(cur), Some(base)) = (&fits[i], &guesses[i]) else {
                    continue;
                };
                let model = &candidates[i];
                let mut starts = Vec::new();
                for (k, other) in candidates.iter().enumerate() {
                    let Ok(f) = &fits[k] else { continue };
                    if pass == 0 && other.n_free() < model.n_free() {
                        starts.extend(embeddings(other, &f.theta, model, base));
                    } else if pass == 1 && other.n_free() > model.n_free() {
                        starts.extend(restrictions(other, &f.theta, model, base));
                    }
                }
                let tol = 1e-10 * cur.objective.abs().max(1e-300);
                if !starts.iter().any(|s| objective_of(model, s) < cur.objective - tol) {
                    continue;
                }
                starts.insert(0, cur.theta.clone());
                let problem = Problem {
                    model,
                    nu_hat: &wv.estimates,
                    omega: &omega,
                };
                if let Ok(m) = minimize(&problem, &starts, 0, restart_seed) {
                    if m.objective < cur.objective - tol {
                        fits[i] = Ok(m);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut rows = Vec::with_capacity(candidates.len());
    for (i, model) in candidates.iter().enumerate() {
        let p = model.n_free();
        let name = model.render();
        let fit = match &fits[i] {
            Ok(f) => f,
            Err(e) => {
                rows.push(RankingRow::failed(name, p, e));
                continue;
            }
        };
        let base = guesses[i].as_deref().expect("guess of a fitted candidate");
        let mut implied = vec![0.0; levels];
        if let Err(e) = implied_values(model, &fit.theta, levels, &mut implied) {
            rows.push(RankingRow::failed(name, p, &e));
            continue;
        }
        let ensemble_own;
        let ensemble: &[Vec<f64>] = if method == WicMethod::Fast || i == src {
            &src_ensemble
        } else {
            match bootstrap_ensemble(model, &fit.theta, len, levels, fo.wv_efficiency(), &seeds) {
                Ok(e) => {
                    ensemble_own = e;
                    &ensemble_own
                }
                Err(e) => {
                    rows.push(RankingRow::failed(name, p, &e));
                    continue;
                }
            }
        };
        let b = match optimism(model, &fit.theta, base, ensemble, &omega) {
            Ok(b) => b,
            Err(e) => {
                rows.push(RankingRow::failed(name, p, &e));
                continue;
            }
        };
        let d: Vec<f64> = wv.estimates.iter().zip(&implied).map(|(a, b)| a - b).collect();
        let gof_p = if levels > p && !src_fit.omega_fallback {
            gof_from_parts(&d, &v, fo.bootstrap, p).ok().map(|g| g.p_value)
        } else {
            None
        };
        rows.push(RankingRow {
            model: name,
            p,
            wic: Some(fit.objective + b.value),
            a: Some(fit.objective),
            b: Some(b.value),
            b_se: Some(b.se),
            objective: Some(fit.objective),
            gof_p,
            dropped: b.dropped,
            b_negative: b.value < 0.0,
            omega_source: i == src,
            theta: fit.theta.clone(),
            labels: model.param_labels(),
            error: None,
        });
    }
    Ok(RankingTable::sorted(rows, method, levels, fo.bootstrap, fo.seed))
}

#[cfg(test)]
mod tests;
