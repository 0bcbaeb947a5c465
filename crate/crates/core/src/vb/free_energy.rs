//! Negative free energy (variational lower bound) used as the convergence
//! monitor.

use serde::{Deserialize, Serialize};

use crate::distributions::{ShapeFamily, HALF_LN_2PI};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::responsibilities::Responsibilities;
use crate::special::{digamma, log_gamma};

use super::priors::HyperPriors;
use super::state::{ExpectationCache, SufficientStats, VBState};
use super::updates::accumulate_stats;

/// The individual terms of the bound; `total()` combines them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyTerms {
    /// `⟨ln p(x, Z | θ)⟩` under q(Z) q(θ).
    pub expected_log_joint: f64,
    /// `H[q(Z)]`.
    pub entropy: f64,
    pub kl_pi: f64,
    pub kl_mu: f64,
    pub kl_tau: f64,
    /// Index 0 unused.
    pub kl_shape: [f64; 3],
    pub kl_rate: [f64; 3],
}

impl FreeEnergyTerms {
    pub fn total(&self) -> f64 {
        self.expected_log_joint + self.entropy
            - self.kl_pi
            - self.kl_mu
            - self.kl_tau
            - self.kl_shape[1]
            - self.kl_shape[2]
            - self.kl_rate[1]
            - self.kl_rate[2]
    }
}

/// `KL(Dir(posterior) || Dir(prior))`.
pub fn kl_dirichlet(posterior: &[f64; 3], prior: &[f64; 3]) -> Result<f64> {
    let sq: f64 = posterior.iter().sum();
    let sp: f64 = prior.iter().sum();
    let psi_sq = digamma(sq)?;
    let mut kl = log_gamma(sq)? - log_gamma(sp)?;
    for k in 0..3 {
        kl += log_gamma(prior[k])? - log_gamma(posterior[k])?
            + (posterior[k] - prior[k]) * (digamma(posterior[k])? - psi_sq);
    }
    Ok(kl)
}

/// `KL(N(mean_q, 1/prec_q) || N(mean_p, 1/prec_p))`.
pub fn kl_gaussian(mean_q: f64, prec_q: f64, mean_p: f64, prec_p: f64) -> f64 {
    let d = mean_q - mean_p;
    0.5 * ((prec_q / prec_p).ln() + prec_p / prec_q + prec_p * d * d - 1.0)
}

/// `KL(Gamma(shape_q, scale_q) || Gamma(shape_p, scale_p))`.
pub fn kl_gamma_scale(shape_q: f64, scale_q: f64, shape_p: f64, scale_p: f64) -> Result<f64> {
    Ok((shape_q - shape_p) * digamma(shape_q)? - log_gamma(shape_q)?
        + log_gamma(shape_p)?
        + shape_p * (scale_p.ln() - scale_q.ln())
        + shape_q * (scale_q - scale_p) / scale_p)
}

/// `KL(Gamma(shape_q, rate_q) || Gamma(shape_p, rate_p))`.
pub fn kl_gamma_rate(shape_q: f64, rate_q: f64, shape_p: f64, rate_p: f64) -> Result<f64> {
    kl_gamma_scale(shape_q, 1.0 / rate_q, shape_p, 1.0 / rate_p)
}

/// Terms of the bound from precomputed statistics of the responsibilities.
///
/// `KL[s]` is approximated by the KL between the Laplace Gaussians of the
/// shape posterior and of the shape prior.
pub fn free_energy_terms(
    stats: &SufficientStats,
    priors: &HyperPriors,
    state: &VBState,
    e: &ExpectationCache,
) -> Result<FreeEnergyTerms> {
    let n1 = stats.counts[0];
    let quad = stats.sum_x2 - 2.0 * e.e_mu * stats.sum_x[0] + n1 * e.e_mu2;
    let mut joint = n1 * (e.e_log_pi[0] + 0.5 * e.e_log_tau - HALF_LN_2PI) - 0.5 * e.e_tau * quad;

    let mut kl_shape = [0.0; 3];
    let mut kl_rate = [0.0; 3];
    for k in 1..3 {
        let p = priors.shape(k);
        let q = state.shape(k);
        let ek = e.shape(k);
        let nk = stats.counts[k];
        joint += nk * (e.e_log_pi[k] + ek.e_s * ek.e_log_r - ek.e_log_gamma_s);
        joint += match p.family {
            ShapeFamily::Gamma => {
                (ek.e_s - 1.0) * stats.sum_log_x[k] - ek.e_r * stats.sum_x[k]
            }
            ShapeFamily::InverseGamma => {
                -(ek.e_s + 1.0) * stats.sum_log_x[k] - ek.e_r * stats.sum_inv_x[k]
            }
        };
        let (prior_mode, prior_prec) = p.shape_laplace()?;
        kl_shape[k] = kl_gaussian(ek.e_s, ek.s_precision, prior_mode, prior_prec);
        kl_rate[k] = kl_gamma_rate(q.d_hat, q.e_hat, p.d0, p.e0)?;
    }

    Ok(FreeEnergyTerms {
        expected_log_joint: joint,
        entropy: stats.entropy,
        kl_pi: kl_dirichlet(&state.lambda_hat, &[priors.lambda0; 3])?,
        kl_mu: kl_gaussian(state.m_hat, state.tau_hat, priors.m0, priors.tau0),
        kl_tau: kl_gamma_scale(state.c_hat, state.b_hat, priors.c0_tau, priors.b0_tau)?,
        kl_shape,
        kl_rate,
    })
}

pub(crate) fn free_energy_from_stats(
    stats: &SufficientStats,
    priors: &HyperPriors,
    state: &VBState,
    e: &ExpectationCache,
) -> Result<f64> {
    let f = free_energy_terms(stats, priors, state, e)?.total();
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::Numeric(format!("negative free energy is {f}; state: {state:?}")))
    }
}

/// Negative free energy of `(data, gamma)` under the posterior `state`.
pub fn negative_free_energy(
    data: &[f64],
    gamma: &Responsibilities,
    priors: &HyperPriors,
    state: &VBState,
    expectations: &ExpectationCache,
    exec: Execution,
) -> Result<f64> {
    if data.len() != gamma.len() {
        return Err(Error::InvalidInput(format!(
            "{} responsibility rows for {} samples",
            gamma.len(),
            data.len()
        )));
    }
    let stats = accumulate_stats(data, gamma, exec);
    free_energy_from_stats(&stats, priors, state, expectations)
}
