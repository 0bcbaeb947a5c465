//! Maximum-likelihood EM for Gauss/Gamma (GGM) and Gauss/inverse-Gamma (GIM)
//! mixtures with moment-matching M-steps.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distributions::{mom, GaussianParams, MixtureParams, ShapeFamily, ShapeRateParams};
use crate::error::{Error, Result};
use crate::init;
use crate::par::{self, Execution};
use crate::responsibilities::{normalize_log_row, Responsibilities};

/// Floor on weighted variances before moment matching.
pub const VARIANCE_FLOOR: f64 = 1e-10;
/// Shapes from moment matching are clamped to this range.
pub const SHAPE_RANGE: (f64, f64) = (1e-3, 1e6);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlFitConfig {
    pub max_iterations: usize,
    /// Stop when the relative change of the log-likelihood drops below this.
    pub rel_tolerance: f64,
    /// Components with less soft mass than this keep their previous parameters.
    pub min_component_mass: f64,
    /// Seed for the k-means initialization.
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for MlFitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            rel_tolerance: 1e-6,
            min_component_mass: 1.0,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl MlFitConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParams(
                "max_iterations must be >= 1 and rel_tolerance > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlFitResult {
    pub params: MixtureParams,
    pub responsibilities: Responsibilities,
    /// Observed-data log-likelihood, starting with the initial parameters.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub converged: bool,
    /// Samples with zero density under every component, forced to noise.
    pub warnings: usize,
}

#[derive(Debug, Clone)]
pub struct EStep {
    pub responsibilities: Responsibilities,
    pub loglik: f64,
    pub warnings: usize,
}

/// Responsibilities `γ_k(x_n) ∝ π_k p_k(x_n)` and the observed-data
/// log-likelihood. A sample with zero density under every component is
/// assigned to the Gaussian, excluded from the log-likelihood and counted in
/// `warnings`.
pub fn e_step(data: &[f64], params: &MixtureParams, exec: Execution) -> Result<EStep> {
    let dens = params.log_densities()?;
    let mut gamma = Responsibilities::zeroed(data.len());
    let partials = par::zip_chunks_mut(exec, data, gamma.rows_mut(), |xs, rows| {
        let mut ll = 0.0;
        let mut warnings = 0usize;
        for (x, row) in xs.iter().zip(rows.iter_mut()) {
            match normalize_log_row(dens.weighted(*x)) {
                Some((g, lse)) => {
                    *row = g;
                    ll += lse;
                }
                None => {
                    *row = [1.0, 0.0, 0.0];
                    warnings += 1;
                }
            }
        }
        (ll, warnings)
    });
    let (loglik, warnings) = partials
        .into_iter()
        .fold((0.0, 0), |(a, w), (b, v)| (a + b, w + v));
    Ok(EStep {
        responsibilities: gamma,
        loglik,
        warnings,
    })
}

/// Observed-data log-likelihood of `params`.
pub fn log_likelihood(data: &[f64], params: &MixtureParams, exec: Execution) -> Result<f64> {
    Ok(e_step(data, params, exec)?.loglik)
}

#[derive(Debug, Clone, Copy, Default)]
struct WeightedMoments {
    mass: [f64; 3],
    sum: [f64; 3],
}

/// Moment-matching M-step.
///
/// The Gaussian takes the weighted mean and variance of the data. Components
/// 2 and 3 take the weighted mean and variance of `x` on `x > 0` and of `-x`
/// on `x < 0` respectively, converted to shape/rate with the method of
/// moments. A component whose soft mass is below `min_component_mass` keeps
/// its previous parameters.
pub fn m_step(
    data: &[f64],
    gamma: &Responsibilities,
    family: ShapeFamily,
    previous: &MixtureParams,
    min_component_mass: f64,
    exec: Execution,
) -> Result<MixtureParams> {
    if gamma.len() != data.len() {
        return Err(Error::InvalidInput(format!(
            "{} responsibility rows for {} samples",
            gamma.len(),
            data.len()
        )));
    }
    let n = data.len() as f64;
    let first = par::zip_chunks(exec, data, gamma.rows(), |xs, rows| {
        let mut m = WeightedMoments::default();
        for (&x, g) in xs.iter().zip(rows) {
            m.mass[0] += g[0];
            m.sum[0] += g[0] * x;
            if x > 0.0 {
                m.mass[1] += g[1];
                m.sum[1] += g[1] * x;
            } else if x < 0.0 {
                m.mass[2] += g[2];
                m.sum[2] -= g[2] * x;
            }
        }
        m
    });
    let m = first.into_iter().fold(WeightedMoments::default(), |mut a, b| {
        for k in 0..3 {
            a.mass[k] += b.mass[k];
            a.sum[k] += b.sum[k];
        }
        a
    });
    let mean: [f64; 3] = std::array::from_fn(|k| {
        if m.mass[k] > 0.0 {
            m.sum[k] / m.mass[k]
        } else {
            0.0
        }
    });
    let second = par::zip_chunks(exec, data, gamma.rows(), |xs, rows| {
        let mut ss = [0.0; 3];
        for (&x, g) in xs.iter().zip(rows) {
            let d = x - mean[0];
            ss[0] += g[0] * d * d;
            if x > 0.0 {
                let d = x - mean[1];
                ss[1] += g[1] * d * d;
            } else if x < 0.0 {
                let d = -x - mean[2];
                ss[2] += g[2] * d * d;
            }
        }
        ss
    });
    let ss = second
        .into_iter()
        .fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let var: [f64; 3] = std::array::from_fn(|k| {
        if m.mass[k] > 0.0 {
            (ss[k] / m.mass[k]).max(VARIANCE_FLOOR)
        } else {
            VARIANCE_FLOOR
        }
    });

    let mut next = *previous;
    if m.mass[0] >= min_component_mass {
        next.gauss = GaussianParams::from_mean_variance(mean[0], var[0])?;
    }
    if m.mass[1] >= min_component_mass {
        next.positive = moment_match(family, mean[1], var[1])?;
    }
    if m.mass[2] >= min_component_mass {
        next.negative = moment_match(family, mean[2], var[2])?
            .with_support(crate::distributions::Support::Negative);
    }
    let total: f64 = m.mass.iter().sum();
    let denom = if total > 0.0 { total } else { n };
    next.pi = m.mass.map(|mk| mk / denom);
    Ok(next)
}

/// Method of moments with the shape clamped to [`SHAPE_RANGE`]; when the clamp
/// binds the rate is recomputed so the mean is preserved.
pub(crate) fn moment_match(family: ShapeFamily, mean: f64, var: f64) -> Result<ShapeRateParams> {
    let mut p = mom(family, mean, var)?;
    let clamped = p.shape.clamp(SHAPE_RANGE.0, SHAPE_RANGE.1);
    if clamped != p.shape {
        p.shape = clamped;
        p.rate = match family {
            ShapeFamily::Gamma => clamped / mean,
            ShapeFamily::InverseGamma => mean * (clamped - 1.0),
        };
    }
    Ok(p)
}

fn check_init(init: &MixtureParams, family: ShapeFamily) -> Result<()> {
    init.validate()?;
    if init.positive.family != family || init.negative.family != family {
        return Err(Error::InvalidParams(format!(
            "initial activation components must be {family:?}"
        )));
    }
    Ok(())
}

fn fit(
    data: &[f64],
    init: &MixtureParams,
    family: ShapeFamily,
    cfg: &MlFitConfig,
) -> Result<MlFitResult> {
    cfg.validate()?;
    check_init(init, family)?;
    if data.is_empty() {
        return Err(Error::InvalidInput("empty data".into()));
    }
    let start = Instant::now();
    let exec = cfg.execution;
    let mut params = *init;
    let mut e = e_step(data, &params, exec)?;
    let mut trace = vec![e.loglik];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        params = m_step(
            data,
            &e.responsibilities,
            family,
            &params,
            cfg.min_component_mass,
            exec,
        )?;
        let prev = e.loglik;
        e = e_step(data, &params, exec)?;
        if !e.loglik.is_finite() {
            return Err(Error::Numeric(format!(
                "log-likelihood became {} at iteration {}",
                e.loglik,
                iterations + 1
            )));
        }
        trace.push(e.loglik);
        iterations += 1;
        if (e.loglik - prev).abs() / prev.abs().max(f64::MIN_POSITIVE) < cfg.rel_tolerance {
            converged = true;
            break;
        }
    }
    Ok(MlFitResult {
        params,
        responsibilities: e.responsibilities,
        loglik_trace: trace,
        iterations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        converged,
        warnings: e.warnings,
    })
}

/// Gauss/Gamma mixture by moment-matched EM.
pub fn fit_ggm(data: &[f64], init: &MixtureParams, cfg: &MlFitConfig) -> Result<MlFitResult> {
    fit(data, init, ShapeFamily::Gamma, cfg)
}

/// Gauss/inverse-Gamma mixture by moment-matched EM.
pub fn fit_gim(data: &[f64], init: &MixtureParams, cfg: &MlFitConfig) -> Result<MlFitResult> {
    fit(data, init, ShapeFamily::InverseGamma, cfg)
}

/// k-means initialization followed by [`fit_ggm`] or [`fit_gim`]. The
/// reported wall time includes the initialization.
pub fn fit_ml_auto(data: &[f64], family: ShapeFamily, cfg: &MlFitConfig) -> Result<MlFitResult> {
    let start = Instant::now();
    let km = init::kmeans_1d(data, 3, cfg.seed)?;
    let (init, _) = init::init_mixture(data, &km, family, cfg.execution)?;
    let mut res = fit(data, &init, family, cfg)?;
    res.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(res)
}
