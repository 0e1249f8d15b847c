use crate::{Error, Result};

/// Discretizes a Gauss-Markov process sampled at `freq` Hz into the
/// equivalent AR1: `phi = exp(-beta/freq)`, `sigma2 = sigma2_gm (1 - phi^2)`.
pub fn gm_to_ar1(beta: f64, sigma2_gm: f64, freq: f64) -> Result<(f64, f64)> {
    if !(beta.is_finite() && sigma2_gm.is_finite() && freq.is_finite()) {
        return Err(Error::InvalidArgument("non-finite GM parameters".into()));
    }
    if beta <= 0.0 || sigma2_gm <= 0.0 || freq <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "GM needs beta > 0, sigma2_gm > 0 and freq > 0 (got {beta}, {sigma2_gm}, {freq})"
        )));
    }
    let dt = 1.0 / freq;
    let phi = (-beta * dt).exp();
    let sigma2 = sigma2_gm * -(-2.0 * beta * dt).exp_m1();
    Ok((phi, sigma2))
}

/// Inverse of [`gm_to_ar1`]; only defined for `phi` in (0, 1).
pub fn ar1_to_gm(phi: f64, sigma2: f64, freq: f64) -> Result<(f64, f64)> {
    if !(phi.is_finite() && sigma2.is_finite() && freq.is_finite()) {
        return Err(Error::InvalidArgument("non-finite AR1 parameters".into()));
    }
    if phi <= 0.0 || phi >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "phi = {phi} has no Gauss-Markov counterpart (needs 0 < phi < 1)"
        )));
    }
    if sigma2 <= 0.0 || freq <= 0.0 {
        return Err(Error::InvalidArgument("sigma2 and freq must be positive".into()));
    }
    let beta = -freq * phi.ln();
    let sigma2_gm = sigma2 / ((1.0 - phi) * (1.0 + phi));
    Ok((beta, sigma2_gm))
}
