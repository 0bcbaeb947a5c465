use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distributions::ShapeFamily;
use crate::error::{Error, Result};
use crate::init;
use crate::par::Execution;
use crate::responsibilities::Responsibilities;

use super::expectations::expectations;
use super::free_energy::free_energy_from_stats;
use super::priors::{default_hyperpriors, HyperPriors};
use super::state::{ExpectationCache, VBState};
use super::updates::{
    accumulate_stats, update_mu, update_pi, update_r, update_responsibilities, update_shape,
    update_tau, validate_state,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VbFitConfig {
    pub max_iterations: usize,
    /// Stop when `|ΔF| / (1 + |F|)` falls below this.
    pub tolerance: f64,
    /// Seed for the k-means initialization.
    pub seed: u64,
    /// Defaults to [`default_hyperpriors`] for the fitted family.
    pub priors: Option<HyperPriors>,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for VbFitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-6,
            seed: 0,
            priors: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VBFitResult {
    pub priors: HyperPriors,
    pub state: VBState,
    pub expectations: ExpectationCache,
    pub responsibilities: Responsibilities,
    /// Negative free energy after each iteration.
    pub nfe_trace: Vec<f64>,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub converged: bool,
    /// Rows forced onto the noise component in the final responsibilities.
    pub warnings: usize,
}

/// Variational Gauss/Gamma mixture.
pub fn fit_bggm(data: &[f64], cfg: &VbFitConfig) -> Result<VBFitResult> {
    fit_vb(data, ShapeFamily::Gamma, cfg)
}

/// Variational Gauss/inverse-Gamma mixture.
pub fn fit_bgim(data: &[f64], cfg: &VbFitConfig) -> Result<VBFitResult> {
    fit_vb(data, ShapeFamily::InverseGamma, cfg)
}

/// Runs the variational iteration for the given activation family.
///
/// Responsibilities start from the k-means initialization. Every iteration
/// then updates π, μ₁, τ₁, r and s from the current responsibilities,
/// refreshes the expectations, evaluates the free energy and finally
/// recomputes the responsibilities for the next round.
pub fn fit_vb(data: &[f64], family: ShapeFamily, cfg: &VbFitConfig) -> Result<VBFitResult> {
    if cfg.max_iterations == 0 || !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidParams(
            "max_iterations must be >= 1 and tolerance > 0".into(),
        ));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("data contains non-finite values".into()));
    }
    let start = Instant::now();
    let exec = cfg.execution;
    let priors = match cfg.priors {
        Some(p) => p,
        None => default_hyperpriors(family, family)?,
    };
    if priors.positive.family != family || priors.negative.family != family {
        return Err(Error::InvalidParams(format!(
            "hyper-priors do not describe {family:?} components"
        )));
    }

    let km = init::kmeans_1d(data, 3, cfg.seed)?;
    let (init_params, mut gamma) = init::init_mixture(data, &km, family, exec)?;
    let mut cache = ExpectationCache::from_point(&init_params)?;
    let mut stats = accumulate_stats(data, &gamma, exec);
    let mut warnings = 0;
    let mut state = VBState::from_priors(&priors);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        if iterations > 0 {
            let (g, s, w) = update_responsibilities(data, &priors, &cache, exec);
            gamma = g;
            stats = s;
            warnings = w;
        }
        state.lambda_hat = update_pi(&stats, &priors);
        let (m_hat, tau_hat) = update_mu(&stats, &priors, cache.e_tau);
        state.m_hat = m_hat;
        state.tau_hat = tau_hat;
        let (c_hat, b_hat) = update_tau(&stats, &priors, m_hat, m_hat * m_hat + 1.0 / tau_hat);
        state.c_hat = c_hat;
        state.b_hat = b_hat;
        for k in 1..3 {
            let (d_hat, e_hat) = update_r(&stats, &priors, k, cache.shape(k).e_s);
            let (log_a_hat, b_s, c_s) = update_shape(&stats, &priors, k);
            let post = state.shape_mut(k);
            post.d_hat = d_hat;
            post.e_hat = e_hat;
            post.log_a_hat = log_a_hat;
            post.b_hat = b_s;
            post.c_hat = c_s;
        }
        validate_state(&state)?;
        cache = expectations(&state, &priors)?;
        let f = free_energy_from_stats(&stats, &priors, &state, &cache)?;
        iterations += 1;
        let prev = trace.last().copied();
        trace.push(f);
        if let Some(prev) = prev {
            if (f - prev).abs() / (1.0 + f.abs()) < cfg.tolerance {
                converged = true;
                break;
            }
        }
    }

    Ok(VBFitResult {
        priors,
        state,
        expectations: cache,
        responsibilities: gamma,
        nfe_trace: trace,
        iterations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        converged,
        warnings,
    })
}
