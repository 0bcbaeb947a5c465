//! Posterior expectations, including the Laplace approximation of the shape
//! posteriors and the Taylor correction for `⟨ln Γ(s)⟩`.

use crate::distributions::ShapeFamily;
use crate::error::{Error, Result};
use crate::special::{digamma, inv_digamma, log_gamma, tetragamma, trigamma};

use super::priors::HyperPriors;
use super::state::{ExpectationCache, ShapeExpectations, VBState};

/// Mode and precision of the Laplace approximation of the shape density
/// `∝ a^{±s-1} r^{s c} / Γ(s)^b`.
///
/// The mode solves `b Ψ(s) = ±ln a + c ln r` and the precision is
/// `b Ψ₁(mode)`.
pub fn laplace_shape(family: ShapeFamily, log_a: f64, b: f64, c: f64, log_r: f64) -> Result<(f64, f64)> {
    let signed = match family {
        ShapeFamily::Gamma => log_a,
        ShapeFamily::InverseGamma => -log_a,
    };
    let arg = (signed + c * log_r) / b;
    let mode = inv_digamma(arg)?;
    Ok((mode, b * trigamma(mode)?))
}

/// Second-order approximation of `⟨ln Γ(s)⟩` around the Laplace mode `mu`:
/// `ln Γ(μ) + 1/b + Ψ₂(μ) μ / (Ψ₁(μ) b)`.
pub fn expected_log_gamma(mu: f64, b: f64) -> Result<f64> {
    Ok(log_gamma(mu)? + 1.0 / b + tetragamma(mu)? * mu / (trigamma(mu)? * b))
}

/// Every posterior expectation needed by the responsibilities and the
/// free energy.
pub fn expectations(state: &VBState, priors: &HyperPriors) -> Result<ExpectationCache> {
    let dump = |e: Error| Error::Numeric(format!("{e}; state: {state:?}"));
    let lambda_sum: f64 = state.lambda_hat.iter().sum();
    let psi_sum = digamma(lambda_sum).map_err(dump)?;
    let mut e_log_pi = [0.0; 3];
    for (e, &l) in e_log_pi.iter_mut().zip(&state.lambda_hat) {
        *e = digamma(l).map_err(dump)? - psi_sum;
    }
    let shape = |k: usize| -> Result<ShapeExpectations> {
        let post = state.shape(k);
        let family = priors.shape(k).family;
        let e_r = post.d_hat / post.e_hat;
        let e_log_r = digamma(post.d_hat)? - post.e_hat.ln();
        let (e_s, s_precision) = laplace_shape(family, post.log_a_hat, post.b_hat, post.c_hat, e_log_r)?;
        Ok(ShapeExpectations {
            e_r,
            e_log_r,
            e_s,
            e_log_gamma_s: expected_log_gamma(e_s, post.b_hat)?,
            s_precision,
        })
    };
    Ok(ExpectationCache {
        e_pi: state.lambda_hat.map(|l| l / lambda_sum),
        e_log_pi,
        e_mu: state.m_hat,
        e_mu2: state.m_hat * state.m_hat + 1.0 / state.tau_hat,
        e_tau: state.b_hat * state.c_hat,
        e_log_tau: digamma(state.c_hat).map_err(dump)? + state.b_hat.ln(),
        positive: shape(1).map_err(dump)?,
        negative: shape(2).map_err(dump)?,
    })
}
