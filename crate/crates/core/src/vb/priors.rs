use serde::{Deserialize, Serialize};

use crate::distributions::{mom, ShapeFamily};
use crate::error::Result;
use crate::special::{digamma, trigamma};

use super::expectations::laplace_shape;

/// Prior mean and variance of the activation components.
pub const DEFAULT_ACTIVATION_MOMENT: f64 = 10.0;

/// Hyper-parameters of one activation component: a Gamma(d0, rate e0) prior
/// on its rate/scale `r` and the unnormalized conjugate shape prior
/// `p(s) ∝ a0^{±s-1} r^{s c0} / Γ(s)^{b0}` (`+` for Gamma, `-` for inverse-Gamma).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeHyperPriors {
    pub family: ShapeFamily,
    pub d0: f64,
    pub e0: f64,
    pub log_a0: f64,
    pub b0: f64,
    pub c0: f64,
    /// Log of the reference rate/scale `r0` the shape prior was built around.
    /// Its Laplace approximation is evaluated at this value.
    pub log_r0: f64,
}

impl ShapeHyperPriors {
    /// Prior for a component whose prior mean and variance are both `moment`.
    pub fn from_moment(family: ShapeFamily, moment: f64) -> Result<Self> {
        let p = mom(family, moment, moment)?;
        let (s0, r0) = (p.shape, p.rate);
        let b0 = 1.0 / (s0 * trigamma(s0)?);
        let c0 = b0;
        let log_a0 = match family {
            ShapeFamily::Gamma => b0 * digamma(s0)? - c0 * r0.ln(),
            ShapeFamily::InverseGamma => -b0 * digamma(s0)? + c0 * r0.ln(),
        };
        Ok(Self {
            family,
            d0: r0,
            e0: 1.0,
            log_a0,
            b0,
            c0,
            log_r0: r0.ln(),
        })
    }

    /// Mode and precision of the Laplace approximation of the shape prior.
    pub fn shape_laplace(&self) -> Result<(f64, f64)> {
        laplace_shape(self.family, self.log_a0, self.b0, self.c0, self.log_r0)
    }
}

/// All hyper-parameters of the variational model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPriors {
    /// Symmetric Dirichlet concentration.
    pub lambda0: f64,
    /// Gaussian prior on the noise mean: mean and precision.
    pub m0: f64,
    pub tau0: f64,
    /// Gamma prior on the noise precision: shape and scale.
    pub c0_tau: f64,
    pub b0_tau: f64,
    pub positive: ShapeHyperPriors,
    pub negative: ShapeHyperPriors,
}

impl HyperPriors {
    pub fn shape(&self, k: usize) -> &ShapeHyperPriors {
        match k {
            1 => &self.positive,
            2 => &self.negative,
            _ => panic!("component {k} has no shape prior"),
        }
    }
}

/// The fixed default hyper-parameters: near-zero noise mean, flat prior on
/// the noise variance, activation components with prior mean and variance
/// 10, and `λ0 = 5`.
pub fn default_hyperpriors(positive: ShapeFamily, negative: ShapeFamily) -> Result<HyperPriors> {
    Ok(HyperPriors {
        lambda0: 5.0,
        m0: 0.0,
        tau0: 1.0,
        c0_tau: 0.01,
        b0_tau: 100.0,
        positive: ShapeHyperPriors::from_moment(positive, DEFAULT_ACTIVATION_MOMENT)?,
        negative: ShapeHyperPriors::from_moment(negative, DEFAULT_ACTIVATION_MOMENT)?,
    })
}
