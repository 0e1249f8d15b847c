//! Nelder-Mead simplex search and a Levenberg-Marquardt polish for
//! least-squares objectives.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct NmOptions {
    /// Initial simplex edge along each axis.
    pub step: f64,
    pub max_evals: usize,
    /// Converged when the simplex diameter drops below `xtol` and the spread
    /// of values below `ftol * |f_best|` (or the diameter alone below
    /// `xtol * 1e-3`).
    pub xtol: f64,
    pub ftol: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            step: 0.5,
            max_evals: 20_000,
            xtol: 1e-7,
            ftol: 1e-11,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Non-finite values count as `+inf`, so the
/// result is never worse than the start.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NmOptions) -> NmResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if n == 0 {
        let v = eval(x0, &mut evals);
        return NmResult {
            x: vec![],
            f: v,
            converged: true,
        };
    }
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p, &mut evals)).collect();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();
    while evals < opts.max_evals {
        // stable sort keeps the older vertex first among ties
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];
        let diam = pts
            .iter()
            .map(|p| p.iter().zip(&pts[best]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = vals[worst] - vals[best];
        if vals[best].is_finite()
            && ((diam <= opts.xtol && spread <= opts.ftol * vals[best].abs()) || diam <= opts.xtol * 1e-3)
        {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < vals[best] {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[worst] {
            let xc = along(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < vals[worst].min(fr) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            let shrunk: Vec<f64> = anchor
                .iter()
                .zip(&pts[i])
                .map(|(a, p)| a + sigma * (p - a))
                .collect();
            vals[i] = eval(&shrunk, &mut evals);
            pts[i] = shrunk;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    NmResult {
        x: pts[best].clone(),
        f: vals[best],
        converged,
    }
}

/// Levenberg-Marquardt on a residual vector, with a forward-difference
/// Jacobian. `resid` returns None outside the domain. Never worse than the
/// start; None when the start itself is outside the domain.
pub(crate) fn levenberg_marquardt<R>(mut resid: R, z0: &[f64], max_iter: usize) -> Option<NmResult>
where
    R: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let n = z0.len();
    let norm2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut z = z0.to_vec();
    let mut r = resid(&z)?;
    let mut f = norm2(&r);
    if !f.is_finite() {
        return None;
    }
    let m = r.len();
    let mut lambda = 1e-3;
    let mut converged = n == 0;
    for _ in 0..max_iter {
        if n == 0 || f == 0.0 {
            converged = true;
            break;
        }
        let mut jac = DMatrix::zeros(m, n);
        for k in 0..n {
            let h = 1e-7 * z[k].abs().max(1.0);
            let mut zh = z.clone();
            zh[k] += h;
            let (rh, sign) = match resid(&zh) {
                Some(rh) => (rh, 1.0),
                None => {
                    zh[k] = z[k] - h;
                    (resid(&zh)?, -1.0)
                }
            };
            for i in 0..m {
                jac[(i, k)] = sign * (rh[i] - r[i]) / h;
            }
        }
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let mut stepped = false;
        while lambda < 1e12 {
            let mut damped = a.clone();
            for k in 0..n {
                damped[(k, k)] += lambda * a[(k, k)].max(1e-12);
            }
            let Some(delta) = damped.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 4.0;
                continue;
            };
            let zn: Vec<f64> = z.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            if let Some(rn) = resid(&zn) {
                let fn_ = norm2(&rn);
                if fn_.is_finite() && fn_ < f {
                    let small = delta.amax() < 1e-10 || f - fn_ <= 1e-14 * f;
                    z = zn;
                    r = rn;
                    f = fn_;
                    lambda = (lambda / 3.0).max(1e-12);
                    stepped = true;
                    converged = small;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !stepped || converged {
            converged = true;
            break;
        }
    }
    Some(NmResult { x: z, f, converged })
}
