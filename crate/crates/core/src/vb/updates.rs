//! Responsibilities and the conjugate posterior updates.

use crate::distributions::HALF_LN_2PI;
use crate::error::Result;
use crate::par::{self, Execution};
use crate::responsibilities::{normalize_log_row, Responsibilities};

use super::priors::HyperPriors;
use super::state::{ExpectationCache, ShapeExpectations, SufficientStats};
use crate::distributions::ShapeFamily;

/// Per-component constants of `log ρ_nk` that do not depend on `x_n`.
#[derive(Debug, Clone, Copy)]
struct ActivationTerm {
    family: ShapeFamily,
    offset: f64,
    e_s: f64,
    e_r: f64,
}

impl ActivationTerm {
    fn new(family: ShapeFamily, e_log_pi: f64, e: &ShapeExpectations) -> Self {
        Self {
            family,
            offset: e_log_pi + e.e_s * e.e_log_r - e.e_log_gamma_s,
            e_s: e.e_s,
            e_r: e.e_r,
        }
    }

    /// `log ρ` at a mirrored value `t > 0`.
    #[inline]
    fn log_rho(&self, t: f64) -> f64 {
        match self.family {
            ShapeFamily::Gamma => self.offset + (self.e_s - 1.0) * t.ln() - self.e_r * t,
            ShapeFamily::InverseGamma => self.offset - (self.e_s + 1.0) * t.ln() - self.e_r / t,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LogRho {
    gauss_offset: f64,
    e_tau: f64,
    e_mu: f64,
    e_mu2: f64,
    pos: ActivationTerm,
    neg: ActivationTerm,
}

impl LogRho {
    pub(crate) fn new(priors: &HyperPriors, e: &ExpectationCache) -> Self {
        Self {
            gauss_offset: e.e_log_pi[0] + 0.5 * e.e_log_tau - HALF_LN_2PI,
            e_tau: e.e_tau,
            e_mu: e.e_mu,
            e_mu2: e.e_mu2,
            pos: ActivationTerm::new(priors.positive.family, e.e_log_pi[1], &e.positive),
            neg: ActivationTerm::new(priors.negative.family, e.e_log_pi[2], &e.negative),
        }
    }

    /// Unnormalized log responsibilities of one sample; `-inf` outside the
    /// support of an activation component.
    #[inline]
    pub(crate) fn eval(&self, x: f64) -> [f64; 3] {
        let quad = x * x - 2.0 * x * self.e_mu + self.e_mu2;
        let g = self.gauss_offset - 0.5 * quad * self.e_tau;
        if x > 0.0 {
            [g, self.pos.log_rho(x), f64::NEG_INFINITY]
        } else if x < 0.0 {
            [g, f64::NEG_INFINITY, self.neg.log_rho(-x)]
        } else {
            [g, f64::NEG_INFINITY, f64::NEG_INFINITY]
        }
    }
}

/// New responsibilities from the current expectations, with the weighted
/// statistics of the data under them and the number of rows that had to be
/// forced onto the noise component.
pub fn update_responsibilities(
    data: &[f64],
    priors: &HyperPriors,
    expectations: &ExpectationCache,
    exec: Execution,
) -> (Responsibilities, SufficientStats, usize) {
    let rho = LogRho::new(priors, expectations);
    let mut gamma = Responsibilities::zeroed(data.len());
    let partials = par::zip_chunks_mut(exec, data, gamma.rows_mut(), |xs, rows| {
        let mut stats = SufficientStats::default();
        let mut warnings = 0usize;
        for (&x, row) in xs.iter().zip(rows.iter_mut()) {
            *row = match normalize_log_row(rho.eval(x)) {
                Some((g, _)) => g,
                None => {
                    warnings += 1;
                    [1.0, 0.0, 0.0]
                }
            };
            stats.add_sample(x, row);
        }
        (stats, warnings)
    });
    let (stats, warnings) = partials
        .iter()
        .fold((SufficientStats::default(), 0), |(s, w), (p, v)| (s.merge(p), w + v));
    (gamma, stats, warnings)
}

/// Weighted statistics of `data` under fixed responsibilities.
pub fn accumulate_stats(data: &[f64], gamma: &Responsibilities, exec: Execution) -> SufficientStats {
    par::zip_chunks(exec, data, gamma.rows(), |xs, rows| {
        let mut s = SufficientStats::default();
        for (&x, g) in xs.iter().zip(rows) {
            s.add_sample(x, g);
        }
        s
    })
    .iter()
    .fold(SufficientStats::default(), |a, b| a.merge(b))
}

/// Dirichlet posterior `λ̂_k = λ0 + N_k`.
pub fn update_pi(stats: &SufficientStats, priors: &HyperPriors) -> [f64; 3] {
    stats.counts.map(|n| priors.lambda0 + n)
}

/// Posterior of the noise mean: returns `(m̂, τ̂)`.
pub fn update_mu(stats: &SufficientStats, priors: &HyperPriors, e_tau: f64) -> (f64, f64) {
    let tau_hat = priors.tau0 + e_tau * stats.counts[0];
    let m_hat = (priors.tau0 * priors.m0 + e_tau * stats.sum_x[0]) / tau_hat;
    (m_hat, tau_hat)
}

/// Posterior of the noise precision (shape, scale): returns `(ĉ, b̂)`.
pub fn update_tau(stats: &SufficientStats, priors: &HyperPriors, e_mu: f64, e_mu2: f64) -> (f64, f64) {
    let n1 = stats.counts[0];
    let quad = (stats.sum_x2 + n1 * e_mu2 - 2.0 * e_mu * stats.sum_x[0]).max(0.0);
    let b_hat = 1.0 / (1.0 / priors.b0_tau + 0.5 * quad);
    let c_hat = priors.c0_tau + 0.5 * n1;
    (c_hat, b_hat)
}

/// Posterior Gamma(d̂, rate ê) of the rate/scale of activation component `k`
/// (1 or 2), given the current shape expectation.
pub fn update_r(stats: &SufficientStats, priors: &HyperPriors, k: usize, e_s: f64) -> (f64, f64) {
    let p = priors.shape(k);
    let d_hat = p.d0 + e_s * stats.counts[k];
    let e_hat = p.e0 + stats.rate_statistic(k, p.family);
    (d_hat, e_hat)
}

/// Posterior shape functional of component `k`: returns `(log â, b̂, ĉ)`.
pub fn update_shape(stats: &SufficientStats, priors: &HyperPriors, k: usize) -> (f64, f64, f64) {
    let p = priors.shape(k);
    (
        p.log_a0 + stats.sum_log_x[k],
        p.b0 + stats.counts[k],
        p.c0 + stats.counts[k],
    )
}

/// Checks the invariants a state must satisfy after an update.
pub(crate) fn validate_state(state: &super::state::VBState) -> Result<()> {
    use super::state::check_positive;
    for (k, l) in state.lambda_hat.iter().enumerate() {
        check_positive(&format!("lambda_hat[{k}]"), *l)?;
    }
    check_positive("tau_hat", state.tau_hat)?;
    check_positive("c_hat", state.c_hat)?;
    check_positive("b_hat", state.b_hat)?;
    for s in [&state.positive, &state.negative] {
        check_positive("d_hat", s.d_hat)?;
        check_positive("e_hat", s.e_hat)?;
        check_positive("b_hat_s", s.b_hat)?;
        check_positive("c_hat_s", s.c_hat)?;
    }
    Ok(())
}
