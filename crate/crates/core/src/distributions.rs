//! Component densities, samplers and method-of-moments estimators.
//!
//! Gamma components are parametrized by shape and *rate*, inverse-Gamma
//! components by shape and *scale*. Both come in a positive-support form and a
//! negative-support mirror whose density at `x` is the positive twin's at `-x`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::log_gamma;

pub(crate) const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    Positive,
    Negative,
}

impl Support {
    /// Maps `x` onto the positive half-line if it lies strictly inside this
    /// support. Zero belongs to neither side.
    #[inline]
    pub fn mirror(self, x: f64) -> Option<f64> {
        match self {
            Support::Positive if x > 0.0 => Some(x),
            Support::Negative if x < 0.0 => Some(-x),
            _ => None,
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Support::Positive => 1.0,
            Support::Negative => -1.0,
        }
    }
}

/// Family of the activation components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFamily {
    Gamma,
    InverseGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentFamily {
    Gaussian,
    Gamma(Support),
    InverseGamma(Support),
}

impl ComponentFamily {
    pub fn shape_family(self) -> Option<ShapeFamily> {
        match self {
            ComponentFamily::Gaussian => None,
            ComponentFamily::Gamma(_) => Some(ShapeFamily::Gamma),
            ComponentFamily::InverseGamma(_) => Some(ShapeFamily::InverseGamma),
        }
    }

    pub fn support(self) -> Option<Support> {
        match self {
            ComponentFamily::Gaussian => None,
            ComponentFamily::Gamma(s) | ComponentFamily::InverseGamma(s) => Some(s),
        }
    }
}

/// Gaussian component parametrized by mean and precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub tau: f64,
}

impl GaussianParams {
    pub fn new(mu: f64, tau: f64) -> Result<Self> {
        if !mu.is_finite() || !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParams(format!(
                "gaussian needs finite mean and positive precision, got mu={mu}, tau={tau}"
            )));
        }
        Ok(Self { mu, tau })
    }

    pub fn from_mean_variance(mean: f64, variance: f64) -> Result<Self> {
        Self::new(mean, 1.0 / variance)
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.tau
    }

    #[inline]
    pub(crate) fn log_normalizer(&self) -> f64 {
        0.5 * self.tau.ln() - HALF_LN_2PI
    }

    #[inline]
    pub(crate) fn log_pdf_with(&self, log_norm: f64, x: f64) -> f64 {
        let d = x - self.mu;
        log_norm - 0.5 * self.tau * d * d
    }
}

/// Gamma or inverse-Gamma component with an explicit support side.
///
/// `rate` is the rate for Gamma components and the scale for inverse-Gamma
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeRateParams {
    pub shape: f64,
    pub rate: f64,
    pub family: ShapeFamily,
    pub support: Support,
}

impl ShapeRateParams {
    pub fn new(shape: f64, rate: f64, family: ShapeFamily, support: Support) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0 && rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParams(format!(
                "shape and rate must be positive and finite, got s={shape}, r={rate}"
            )));
        }
        Ok(Self {
            shape,
            rate,
            family,
            support,
        })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(shape, rate, ShapeFamily::Gamma, Support::Positive)
    }

    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(shape, scale, ShapeFamily::InverseGamma, Support::Positive)
    }

    pub fn with_support(self, support: Support) -> Self {
        Self { support, ..self }
    }

    pub fn component_family(&self) -> ComponentFamily {
        match self.family {
            ShapeFamily::Gamma => ComponentFamily::Gamma(self.support),
            ShapeFamily::InverseGamma => ComponentFamily::InverseGamma(self.support),
        }
    }

    /// `s ln r - ln Γ(s)`, shared by both families.
    pub(crate) fn log_normalizer(&self) -> Result<f64> {
        Ok(self.shape * self.rate.ln() - log_gamma(self.shape)?)
    }

    #[inline]
    pub(crate) fn log_pdf_with(&self, log_norm: f64, x: f64) -> f64 {
        match self.support.mirror(x) {
            None => f64::NEG_INFINITY,
            Some(t) => match self.family {
                ShapeFamily::Gamma => log_norm + (self.shape - 1.0) * t.ln() - self.rate * t,
                ShapeFamily::InverseGamma => {
                    log_norm - (self.shape + 1.0) * t.ln() - self.rate / t
                }
            },
        }
    }

    /// Mean of the mirrored (positive-side) distribution; `inf` when undefined.
    pub fn abs_mean(&self) -> f64 {
        match self.family {
            ShapeFamily::Gamma => self.shape / self.rate,
            ShapeFamily::InverseGamma if self.shape > 1.0 => self.rate / (self.shape - 1.0),
            ShapeFamily::InverseGamma => f64::INFINITY,
        }
    }
}

/// Common interface of the three component kinds.
pub trait Component {
    /// Natural log density; `-inf` outside the support.
    fn log_pdf(&self, x: f64) -> Result<f64>;

    fn mean(&self) -> f64;

    /// `inf` when the variance does not exist.
    fn variance(&self) -> f64;

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64>;
}

fn finite_x(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "log_pdf",
            value: x,
        })
    }
}

impl Component for GaussianParams {
    fn log_pdf(&self, x: f64) -> Result<f64> {
        finite_x(x)?;
        Ok(self.log_pdf_with(self.log_normalizer(), x))
    }

    fn mean(&self) -> f64 {
        self.mu
    }

    fn variance(&self) -> f64 {
        1.0 / self.tau
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let sd = self.tau.sqrt().recip();
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                self.mu + sd * z
            })
            .collect()
    }
}

impl Component for ShapeRateParams {
    fn log_pdf(&self, x: f64) -> Result<f64> {
        finite_x(x)?;
        Ok(self.log_pdf_with(self.log_normalizer()?, x))
    }

    fn mean(&self) -> f64 {
        self.support.sign() * self.abs_mean()
    }

    fn variance(&self) -> f64 {
        let (s, r) = (self.shape, self.rate);
        match self.family {
            ShapeFamily::Gamma => s / (r * r),
            ShapeFamily::InverseGamma if s > 2.0 => r * r / ((s - 1.0) * (s - 1.0) * (s - 2.0)),
            ShapeFamily::InverseGamma => f64::INFINITY,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let sign = self.support.sign();
        // If G ~ Gamma(s, rate r) then 1/G ~ InverseGamma(s, scale r).
        let g = Gamma::new(self.shape, 1.0 / self.rate).expect("validated shape and rate");
        (0..n)
            .map(|_| {
                let v: f64 = g.sample(rng);
                match self.family {
                    ShapeFamily::Gamma => sign * v,
                    ShapeFamily::InverseGamma => sign / v,
                }
            })
            .collect()
    }
}

fn check_moments(mean: f64, variance: f64) -> Result<()> {
    if mean.is_finite() && variance.is_finite() && mean > 0.0 && variance > 0.0 {
        Ok(())
    } else {
        Err(Error::Estimation { mean, variance })
    }
}

/// Gamma parameters matching a given mean and variance: `s = m²/v`, `r = m/v`.
pub fn mom_gamma(mean: f64, variance: f64) -> Result<ShapeRateParams> {
    check_moments(mean, variance)?;
    ShapeRateParams::gamma(mean * mean / variance, mean / variance)
}

/// Inverse-Gamma parameters matching a given mean and variance:
/// `s = m²/v + 2`, `r = m (m²/v + 1)`.
pub fn mom_invgamma(mean: f64, variance: f64) -> Result<ShapeRateParams> {
    check_moments(mean, variance)?;
    let ratio = mean * mean / variance;
    ShapeRateParams::inverse_gamma(ratio + 2.0, mean * (ratio + 1.0))
}

pub fn mom(family: ShapeFamily, mean: f64, variance: f64) -> Result<ShapeRateParams> {
    match family {
        ShapeFamily::Gamma => mom_gamma(mean, variance),
        ShapeFamily::InverseGamma => mom_invgamma(mean, variance),
    }
}

/// Point estimate of a three-component mixture: Gaussian noise, a positive and
/// a negative activation component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub pi: [f64; 3],
    pub gauss: GaussianParams,
    pub positive: ShapeRateParams,
    pub negative: ShapeRateParams,
}

impl MixtureParams {
    pub fn new(
        pi: [f64; 3],
        gauss: GaussianParams,
        positive: ShapeRateParams,
        negative: ShapeRateParams,
    ) -> Result<Self> {
        let p = Self {
            pi,
            gauss,
            positive,
            negative,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.pi.iter().sum();
        if self.pi.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "mixing proportions {:?} are not on the simplex",
                self.pi
            )));
        }
        if self.positive.support != Support::Positive || self.negative.support != Support::Negative
        {
            return Err(Error::InvalidParams(
                "component 2 must have positive support and component 3 negative support".into(),
            ));
        }
        Ok(())
    }

    /// Per-component log densities, precomputed for repeated evaluation.
    pub(crate) fn log_densities(&self) -> Result<MixtureLogDensity> {
        Ok(MixtureLogDensity {
            log_pi: self.pi.map(f64::ln),
            gauss_norm: self.gauss.log_normalizer(),
            pos_norm: self.positive.log_normalizer()?,
            neg_norm: self.negative.log_normalizer()?,
            params: *self,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MixtureLogDensity {
    log_pi: [f64; 3],
    gauss_norm: f64,
    pos_norm: f64,
    neg_norm: f64,
    params: MixtureParams,
}

impl MixtureLogDensity {
    /// `ln π_k + ln p_k(x)` for the three components.
    #[inline]
    pub(crate) fn weighted(&self, x: f64) -> [f64; 3] {
        let p = &self.params;
        [
            self.log_pi[0] + p.gauss.log_pdf_with(self.gauss_norm, x),
            if self.log_pi[1] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                self.log_pi[1] + p.positive.log_pdf_with(self.pos_norm, x)
            },
            if self.log_pi[2] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                self.log_pi[2] + p.negative.log_pdf_with(self.neg_norm, x)
            },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_exponential_density() {
        let g = ShapeRateParams::gamma(1.0, 1.0).unwrap();
        assert_relative_eq!(g.log_pdf(1.0).unwrap(), -1.0, max_relative = 1e-14);
    }

    #[test]
    fn outside_support_is_neg_infinity() {
        let g = ShapeRateParams::gamma(2.0, 3.0).unwrap();
        assert_eq!(g.log_pdf(-0.5).unwrap(), f64::NEG_INFINITY);
        assert_eq!(g.log_pdf(0.0).unwrap(), f64::NEG_INFINITY);
        let small = ShapeRateParams::gamma(0.5, 1.0).unwrap();
        assert_eq!(small.log_pdf(0.0).unwrap(), f64::NEG_INFINITY);
        let ig = ShapeRateParams::inverse_gamma(3.0, 2.0).unwrap();
        assert_eq!(ig.log_pdf(0.0).unwrap(), f64::NEG_INFINITY);
        let neg = ig.with_support(Support::Negative);
        assert_eq!(neg.log_pdf(0.3).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn negative_mirror_matches_positive_twin() {
        let ig = ShapeRateParams::inverse_gamma(3.0, 2.0).unwrap();
        let neg = ig.with_support(Support::Negative);
        assert_eq!(neg.log_pdf(-0.7).unwrap(), ig.log_pdf(0.7).unwrap());
        let g = ShapeRateParams::gamma(2.5, 0.7).unwrap();
        let gn = g.with_support(Support::Negative);
        for t in [0.01, 0.5, 3.0, 40.0] {
            assert_eq!(gn.log_pdf(-t).unwrap(), g.log_pdf(t).unwrap());
        }
    }

    #[test]
    fn log_pdf_rejects_non_finite_input() {
        let g = GaussianParams::new(0.0, 1.0).unwrap();
        assert!(g.log_pdf(f64::NAN).is_err());
        assert!(ShapeRateParams::gamma(1.0, 1.0).unwrap().log_pdf(f64::INFINITY).is_err());
    }

    #[test]
    fn method_of_moments_examples() {
        let g = mom_gamma(10.0, 10.0).unwrap();
        assert_eq!((g.shape, g.rate), (10.0, 1.0));
        let g = mom_gamma(1.0, 4.0).unwrap();
        assert_eq!((g.shape, g.rate), (0.25, 0.25));
        let g = mom_gamma(3.5 / 2.0, 3.5 / 4.0).unwrap();
        assert_relative_eq!(g.shape, 3.5, max_relative = 1e-12);
        assert_relative_eq!(g.rate, 2.0, max_relative = 1e-12);

        let ig = mom_invgamma(10.0, 10.0).unwrap();
        assert_eq!((ig.shape, ig.rate), (12.0, 110.0));
        let ig = mom_invgamma(1.0, 1.0).unwrap();
        assert_eq!((ig.shape, ig.rate), (3.0, 2.0));
        let ig = mom_invgamma(2.0, 4.0 / 3.0).unwrap();
        assert_relative_eq!(ig.shape, 5.0, max_relative = 1e-12);
        assert_relative_eq!(ig.rate, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn method_of_moments_rejects_bad_moments() {
        assert!(matches!(mom_gamma(0.0, 1.0), Err(Error::Estimation { .. })));
        assert!(matches!(mom_gamma(1.0, -1.0), Err(Error::Estimation { .. })));
        assert!(matches!(mom_invgamma(-2.0, 1.0), Err(Error::Estimation { .. })));
        assert!(mom_invgamma(1.0, 0.0).is_err());
    }

    #[test]
    fn sample_moments_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let check = |xs: &[f64], mean: f64, var: f64, mean_tol: f64| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
            assert!((m - mean).abs() <= mean_tol, "mean {m} vs {mean}");
            assert!((v - var).abs() <= 0.02 * var, "variance {v} vs {var}");
        };
        let gauss = GaussianParams::new(0.0, 1.0).unwrap();
        check(&gauss.sample(n, &mut rng), 0.0, 1.0, 0.01);
        let g = ShapeRateParams::gamma(10.0, 1.0).unwrap();
        check(&g.sample(n, &mut rng), 10.0, 10.0, 0.2);
        let ig = ShapeRateParams::inverse_gamma(12.0, 110.0).unwrap();
        check(&ig.sample(n, &mut rng), 10.0, ig.variance(), 0.2);
        let neg = g.with_support(Support::Negative);
        let xs = neg.sample(1000, &mut rng);
        assert!(xs.iter().all(|&x| x < 0.0));
    }

    #[test]
    fn mixture_validation() {
        let gauss = GaussianParams::new(0.0, 1.0).unwrap();
        let pos = ShapeRateParams::gamma(2.0, 1.0).unwrap();
        let neg = pos.with_support(Support::Negative);
        assert!(MixtureParams::new([0.8, 0.1, 0.1], gauss, pos, neg).is_ok());
        assert!(MixtureParams::new([0.8, 0.1, 0.2], gauss, pos, neg).is_err());
        assert!(MixtureParams::new([0.8, 0.1, 0.1], gauss, neg, pos).is_err());
    }
}
