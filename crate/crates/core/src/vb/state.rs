use serde::{Deserialize, Serialize};

use crate::distributions::{MixtureParams, ShapeFamily};
use crate::error::Result;
use crate::special::log_gamma;

use super::priors::{HyperPriors, ShapeHyperPriors};

/// Posterior of one activation component: Gamma(d̂, rate ê) over `r` and the
/// shape functional with parameters (log â, b̂, ĉ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePosterior {
    pub d_hat: f64,
    pub e_hat: f64,
    pub log_a_hat: f64,
    pub b_hat: f64,
    pub c_hat: f64,
}

impl ShapePosterior {
    pub fn from_prior(p: &ShapeHyperPriors) -> Self {
        Self {
            d_hat: p.d0,
            e_hat: p.e0,
            log_a_hat: p.log_a0,
            b_hat: p.b0,
            c_hat: p.c0,
        }
    }
}

/// Hyper-posterior parameters of every variational factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VBState {
    pub lambda_hat: [f64; 3],
    pub m_hat: f64,
    pub tau_hat: f64,
    /// Shape and scale of the noise-precision posterior.
    pub c_hat: f64,
    pub b_hat: f64,
    pub positive: ShapePosterior,
    pub negative: ShapePosterior,
}

impl VBState {
    pub fn from_priors(p: &HyperPriors) -> Self {
        Self {
            lambda_hat: [p.lambda0; 3],
            m_hat: p.m0,
            tau_hat: p.tau0,
            c_hat: p.c0_tau,
            b_hat: p.b0_tau,
            positive: ShapePosterior::from_prior(&p.positive),
            negative: ShapePosterior::from_prior(&p.negative),
        }
    }

    pub fn shape(&self, k: usize) -> &ShapePosterior {
        match k {
            1 => &self.positive,
            2 => &self.negative,
            _ => panic!("component {k} has no shape posterior"),
        }
    }

    pub fn shape_mut(&mut self, k: usize) -> &mut ShapePosterior {
        match k {
            1 => &mut self.positive,
            2 => &mut self.negative,
            _ => panic!("component {k} has no shape posterior"),
        }
    }
}

/// Posterior expectations needed by an activation component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeExpectations {
    pub e_r: f64,
    pub e_log_r: f64,
    pub e_s: f64,
    pub e_log_gamma_s: f64,
    /// Precision of the Laplace approximation of q(s).
    pub s_precision: f64,
}

impl ShapeExpectations {
    /// Expectations of a point mass at `(shape, rate)`.
    pub fn point(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self {
            e_r: rate,
            e_log_r: rate.ln(),
            e_s: shape,
            e_log_gamma_s: log_gamma(shape)?,
            s_precision: f64::INFINITY,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCache {
    pub e_pi: [f64; 3],
    pub e_log_pi: [f64; 3],
    pub e_mu: f64,
    pub e_mu2: f64,
    pub e_tau: f64,
    pub e_log_tau: f64,
    pub positive: ShapeExpectations,
    pub negative: ShapeExpectations,
}

impl ExpectationCache {
    /// Expectations of point masses at `params`; seeds the first iteration.
    pub fn from_point(params: &MixtureParams) -> Result<Self> {
        Ok(Self {
            e_pi: params.pi,
            e_log_pi: params.pi.map(|p| p.max(f64::MIN_POSITIVE).ln()),
            e_mu: params.gauss.mu,
            e_mu2: params.gauss.mu * params.gauss.mu,
            e_tau: params.gauss.tau,
            e_log_tau: params.gauss.tau.ln(),
            positive: ShapeExpectations::point(params.positive.shape, params.positive.rate)?,
            negative: ShapeExpectations::point(params.negative.shape, params.negative.rate)?,
        })
    }

    pub fn shape(&self, k: usize) -> &ShapeExpectations {
        match k {
            1 => &self.positive,
            2 => &self.negative,
            _ => panic!("component {k} has no shape expectations"),
        }
    }
}

/// Responsibility-weighted statistics of the data.
///
/// Index 0 is the noise component, 1 the positive and 2 the negative
/// activation component. Statistics of components 1 and 2 are accumulated on
/// the mirrored value `x̃ = |x|` over their own support; index 0 of the
/// activation-only arrays is unused.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    /// Soft counts `N_k`.
    pub counts: [f64; 3],
    /// `Σ γ_n1 x_n`, `Σ γ_nk x̃_n`.
    pub sum_x: [f64; 3],
    /// `Σ γ_n1 x_n²`.
    pub sum_x2: f64,
    /// `Σ γ_nk / x̃_n`.
    pub sum_inv_x: [f64; 3],
    /// `Σ γ_nk ln x̃_n`.
    pub sum_log_x: [f64; 3],
    /// `-Σ γ_nk ln γ_nk`.
    pub entropy: f64,
}

impl SufficientStats {
    pub(crate) fn merge(mut self, o: &Self) -> Self {
        for k in 0..3 {
            self.counts[k] += o.counts[k];
            self.sum_x[k] += o.sum_x[k];
            self.sum_inv_x[k] += o.sum_inv_x[k];
            self.sum_log_x[k] += o.sum_log_x[k];
        }
        self.sum_x2 += o.sum_x2;
        self.entropy += o.entropy;
        self
    }

    /// The statistic conjugate to the rate/scale of component `k`: `Σ γ x̃`
    /// for Gamma components, `Σ γ / x̃` for inverse-Gamma components.
    pub fn rate_statistic(&self, k: usize, family: ShapeFamily) -> f64 {
        match family {
            ShapeFamily::Gamma => self.sum_x[k],
            ShapeFamily::InverseGamma => self.sum_inv_x[k],
        }
    }

    #[inline]
    pub(crate) fn add_sample(&mut self, x: f64, g: &[f64; 3]) {
        self.counts[0] += g[0];
        self.sum_x[0] += g[0] * x;
        self.sum_x2 += g[0] * x * x;
        let (k, t) = if x > 0.0 {
            (1, x)
        } else if x < 0.0 {
            (2, -x)
        } else {
            (0, 0.0)
        };
        if k != 0 {
            let w = g[k];
            self.counts[k] += w;
            self.sum_x[k] += w * t;
            self.sum_inv_x[k] += w / t;
            self.sum_log_x[k] += w * t.ln();
        }
        for &v in g {
            if v > 0.0 {
                self.entropy -= v * v.ln();
            }
        }
    }
}

pub(crate) fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(crate::error::Error::Numeric(format!("{what} = {v} is not positive and finite")))
    }
}
