//! ARMA helpers: autocovariances, psi weights and the partial
//! autocorrelation parametrization of the stationary region.
//!
//! Sign convention: `X_t = sum phi_i X_{t-i} + e_t + sum theta_j e_{t-j}`.

use nalgebra::{DMatrix, DVector};

/// Maps AR coefficients to partial autocorrelations by the step-down
/// Durbin-Levinson recursion. `None` when the polynomial is not stationary.
pub fn ar_to_pacf(phi: &[f64]) -> Option<Vec<f64>> {
    let p = phi.len();
    let mut a = phi.to_vec();
    let mut pacf = vec![0.0; p];
    for k in (1..=p).rev() {
        let r = a[k - 1];
        if !r.is_finite() || r.abs() >= 1.0 {
            return None;
        }
        pacf[k - 1] = r;
        let d = 1.0 - r * r;
        let prev: Vec<f64> = (0..k - 1).map(|i| (a[i] + r * a[k - 2 - i]) / d).collect();
        a[..k - 1].copy_from_slice(&prev);
    }
    Some(pacf)
}

/// Inverse of [`ar_to_pacf`]; any vector in (-1, 1)^p yields a stationary AR.
pub fn pacf_to_ar(pacf: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let next: Vec<f64> = (0..k).map(|i| a[i] - r * a[k - 1 - i]).collect();
        a = next;
        a.push(r);
    }
    a
}

/// MA(infinity) weights psi_0..psi_n.
pub fn psi_weights(ar: &[f64], ma: &[f64], n: usize) -> Vec<f64> {
    let mut psi = vec![0.0; n + 1];
    psi[0] = 1.0;
    for j in 1..=n {
        let mut v = if j <= ma.len() { ma[j - 1] } else { 0.0 };
        for i in 1..=ar.len().min(j) {
            v += ar[i - 1] * psi[j - i];
        }
        psi[j] = v;
    }
    psi
}

/// Autocovariances gamma(0..=max_lag) of a stationary ARMA with innovation
/// variance `sigma2`.
pub fn arma_autocov(ar: &[f64], ma: &[f64], sigma2: f64, max_lag: usize) -> Vec<f64> {
    let p = ar.len();
    let q = ma.len();
    let psi = psi_weights(ar, ma, q);
    let theta = |j: usize| if j == 0 { 1.0 } else { ma[j - 1] };
    // sum_{j=k}^{q} theta_j psi_{j-k}
    let rhs = |k: usize| -> f64 {
        if k > q {
            0.0
        } else {
            (k..=q).map(|j| theta(j) * psi[j - k]).sum::<f64>() * sigma2
        }
    };
    let mut gamma = vec![0.0; max_lag.max(p) + 1];
    if p == 0 {
        for (k, g) in gamma.iter_mut().enumerate() {
            *g = rhs(k);
        }
    } else {
        // gamma(k) - sum_i phi_i gamma(|k - i|) = rhs(k) for k = 0..=p
        let mut m = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut b = DVector::<f64>::zeros(p + 1);
        for k in 0..=p {
            m[(k, k)] += 1.0;
            for i in 1..=p {
                let lag = k.abs_diff(i);
                m[(k, lag)] -= ar[i - 1];
            }
            b[k] = rhs(k);
        }
        let sol = m.lu().solve(&b).expect("stationary ARMA gives a regular system");
        gamma[..=p].copy_from_slice(sol.as_slice());
        for k in p + 1..gamma.len() {
            let mut v = rhs(k);
            for i in 1..=p {
                v += ar[i - 1] * gamma[k - i];
            }
            gamma[k] = v;
        }
    }
    gamma.truncate(max_lag + 1);
    gamma
}

/// Lag after which the psi weights have decayed below `tol` relative to the
/// largest one, capped at `cap`. Used to size simulation burn-in.
pub fn psi_decay_lag(ar: &[f64], ma: &[f64], tol: f64, cap: usize) -> usize {
    let psi = psi_weights(ar, ma, cap);
    let max = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let window = ar.len().max(ma.len()).max(1);
    let mut run = 0;
    for (j, v) in psi.iter().enumerate() {
        if v.abs() < tol * max {
            run += 1;
            if run >= window {
                return j;
            }
        } else {
            run = 0;
        }
    }
    cap
}
