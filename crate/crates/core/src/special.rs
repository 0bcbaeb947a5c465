//! Scalar special functions: log-gamma, the polygamma family up to order two,
//! and the inverse of the digamma function.
//!
//! All functions shift small arguments upwards with the standard recurrences
//! until `x >= SHIFT_THRESHOLD` and then evaluate an asymptotic series. This
//! gives close to full double precision over `[1e-300, inf)` without tables.

use crate::error::{Error, Result};

/// Smallest argument accepted by the functions in this module.
pub const MIN_ARGUMENT: f64 = 1e-300;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SHIFT_THRESHOLD: f64 = 10.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// A strictly positive, finite real number.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PositiveReal(f64);

impl PositiveReal {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                what: "positive real",
                value,
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<PositiveReal> for f64 {
    fn from(p: PositiveReal) -> f64 {
        p.0
    }
}

#[inline]
fn check(what: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x >= MIN_ARGUMENT {
        Ok(())
    } else {
        Err(Error::Domain { what, value: x })
    }
}

/// Natural logarithm of the Gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check("log_gamma", x)?;
    let mut x = x;
    let mut prod = 1.0;
    while x < SHIFT_THRESHOLD {
        prod *= x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Stirling series, Bernoulli coefficients B_2k / (2k (2k-1)).
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    Ok((x - 0.5) * x.ln() - x + HALF_LN_2PI + series - prod.ln())
}

/// Digamma function `Ψ(x) = d/dx ln Γ(x)`.
pub fn digamma(x: f64) -> Result<f64> {
    check("digamma", x)?;
    Ok(digamma_unchecked(x))
}

fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < SHIFT_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 / x - series
}

/// Trigamma function `Ψ₁(x) = dΨ(x)/dx`; strictly positive.
pub fn trigamma(x: f64) -> Result<f64> {
    check("trigamma", x)?;
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_THRESHOLD {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + inv2 / 2.0
        + inv2
            * inv
            * (1.0 / 6.0
                - inv2
                    * (1.0 / 30.0
                        - inv2
                            * (1.0 / 42.0
                                - inv2
                                    * (1.0 / 30.0
                                        - inv2
                                            * (5.0 / 66.0
                                                - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
    Ok(acc + series)
}

/// Tetragamma function `Ψ₂(x) = dΨ₁(x)/dx`; strictly negative.
pub fn tetragamma(x: f64) -> Result<f64> {
    check("tetragamma", x)?;
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_THRESHOLD {
        acc -= 2.0 / (x * x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = -inv2
        - inv2 * inv
        - inv2
            * inv2
            * (0.5
                - inv2
                    * (1.0 / 6.0
                        - inv2
                            * (1.0 / 6.0
                                - inv2
                                    * (3.0 / 10.0
                                        - inv2
                                            * (5.0 / 6.0
                                                - inv2 * (691.0 / 210.0 - inv2 * 35.0 / 2.0))))));
    Ok(acc + series)
}

/// Inverse of the digamma function: the unique `x > 0` with `Ψ(x) = y`.
///
/// Newton iteration from the usual asymptotic starting point; converges in a
/// handful of steps across the whole range of `y`.
pub fn inv_digamma(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::Domain {
            what: "inv_digamma",
            value: y,
        });
    }
    let mut x = if y >= -2.22 {
        y.exp() + 0.5
    } else {
        -1.0 / (y + EULER_GAMMA)
    };
    if !x.is_finite() {
        return Err(Error::Numeric(format!(
            "inv_digamma: argument {y} maps outside the representable range"
        )));
    }
    for _ in 0..50 {
        let f = digamma(x)? - y;
        if f.abs() < 1e-12 {
            break;
        }
        let mut next = x - f / trigamma(x)?;
        if next <= 0.0 {
            next = 0.5 * x;
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_gamma_known_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-14);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-14);
        assert_relative_eq!(log_gamma(5.0).unwrap(), 24f64.ln(), max_relative = 1e-13);
        assert_relative_eq!(
            log_gamma(0.5).unwrap(),
            0.5 * std::f64::consts::PI.ln(),
            max_relative = 1e-13
        );
        // Γ(171) ≈ 170! is still finite in log space.
        let ln_fact_170: f64 = (1..=170).map(|k| (k as f64).ln()).sum();
        assert_relative_eq!(log_gamma(171.0).unwrap(), ln_fact_170, max_relative = 1e-13);
    }

    #[test]
    fn digamma_known_values() {
        assert_relative_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, max_relative = 1e-13);
        assert_relative_eq!(digamma(10.0).unwrap(), 2.251_752_589_066_721, max_relative = 1e-13);
        // Ψ(1/2) = -γ - 2 ln 2
        assert_relative_eq!(
            digamma(0.5).unwrap(),
            -EULER_GAMMA - 2.0 * 2f64.ln(),
            max_relative = 1e-13
        );
        let x = 3.7;
        assert_relative_eq!(
            digamma(x + 1.0).unwrap(),
            digamma(x).unwrap() + 1.0 / x,
            max_relative = 1e-13
        );
    }

    #[test]
    fn trigamma_known_values() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert_relative_eq!(trigamma(1.0).unwrap(), pi2_6, max_relative = 1e-13);
        assert_relative_eq!(trigamma(10.0).unwrap(), 0.105_166_335_681_685_75, max_relative = 1e-12);
        let x = 2.5;
        assert_relative_eq!(
            trigamma(x + 1.0).unwrap(),
            trigamma(x).unwrap() - 1.0 / (x * x),
            max_relative = 1e-13
        );
    }

    #[test]
    fn tetragamma_known_values() {
        // -2 ζ(3)
        assert_relative_eq!(tetragamma(1.0).unwrap(), -2.404_113_806_319_188_5, max_relative = 1e-13);
        let x = 4.0;
        assert_relative_eq!(
            tetragamma(x + 1.0).unwrap(),
            tetragamma(x).unwrap() + 2.0 / (x * x * x),
            max_relative = 1e-13
        );
        let h = 1e-4;
        let fd = (trigamma(5.0 + h).unwrap() - trigamma(5.0 - h).unwrap()) / (2.0 * h);
        let t = tetragamma(5.0).unwrap();
        assert!(t < 0.0);
        assert_relative_eq!(t, fd, max_relative = 1e-6);
    }

    #[test]
    fn inverse_digamma_round_trips() {
        for x in [10.0, 0.1, 1.0, 1e-3, 250.0] {
            let y = digamma(x).unwrap();
            let back = inv_digamma(y).unwrap();
            assert_relative_eq!(back, x, max_relative = 1e-9);
            assert!((digamma(back).unwrap() - y).abs() < 1e-10);
        }
        assert!((inv_digamma(-0.577_215_664_9).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn domain_errors() {
        for bad in [0.0, -1.0, 1e-301, f64::NAN, f64::INFINITY] {
            assert!(log_gamma(bad).is_err());
            assert!(digamma(bad).is_err());
            assert!(trigamma(bad).is_err());
            assert!(tetragamma(bad).is_err());
        }
        assert!(inv_digamma(f64::NAN).is_err());
        assert!(inv_digamma(f64::NEG_INFINITY).is_err());
        assert!(inv_digamma(1e4).is_err());
        assert!(PositiveReal::new(0.0).is_err());
        assert_eq!(PositiveReal::new(2.0).unwrap().get(), 2.0);
    }
}
