use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::ShapeFamily;
use crate::error::{Error, Result};
use crate::mlem::{self, MlFitConfig, MlFitResult};
use crate::par::Execution;
use crate::responsibilities::Responsibilities;
use crate::vb::{self, VBFitResult, VbFitConfig};

/// The four learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Bggm,
    Bgim,
    Ggm,
    Gim,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Bggm, Model::Bgim, Model::Ggm, Model::Gim];

    pub fn family(self) -> ShapeFamily {
        match self {
            Model::Bggm | Model::Ggm => ShapeFamily::Gamma,
            Model::Bgim | Model::Gim => ShapeFamily::InverseGamma,
        }
    }

    pub fn is_variational(self) -> bool {
        matches!(self, Model::Bggm | Model::Bgim)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Bggm => "bggm",
            Model::Bgim => "bgim",
            Model::Ggm => "ggm",
            Model::Gim => "gim",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bggm" => Ok(Model::Bggm),
            "bgim" => Ok(Model::Bgim),
            "ggm" => Ok(Model::Ggm),
            "gim" => Ok(Model::Gim),
            other => Err(Error::InvalidInput(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum FitDetail {
    Variational(VBFitResult),
    MaximumLikelihood(MlFitResult),
}

/// Result of any of the four learners.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutcome {
    pub model: Model,
    pub detail: FitDetail,
}

impl FitOutcome {
    pub fn responsibilities(&self) -> &Responsibilities {
        match &self.detail {
            FitDetail::Variational(r) => &r.responsibilities,
            FitDetail::MaximumLikelihood(r) => &r.responsibilities,
        }
    }

    /// Point estimate of the mixing proportions (posterior mean for the
    /// variational learners).
    pub fn mixing_proportions(&self) -> [f64; 3] {
        match &self.detail {
            FitDetail::Variational(r) => r.expectations.e_pi,
            FitDetail::MaximumLikelihood(r) => r.params.pi,
        }
    }

    pub fn iterations(&self) -> usize {
        match &self.detail {
            FitDetail::Variational(r) => r.iterations,
            FitDetail::MaximumLikelihood(r) => r.iterations,
        }
    }

    pub fn converged(&self) -> bool {
        match &self.detail {
            FitDetail::Variational(r) => r.converged,
            FitDetail::MaximumLikelihood(r) => r.converged,
        }
    }

    pub fn wall_time_seconds(&self) -> f64 {
        match &self.detail {
            FitDetail::Variational(r) => r.wall_time_seconds,
            FitDetail::MaximumLikelihood(r) => r.wall_time_seconds,
        }
    }

    /// Free-energy trace for variational fits, log-likelihood trace otherwise.
    pub fn trace(&self) -> &[f64] {
        match &self.detail {
            FitDetail::Variational(r) => &r.nfe_trace,
            FitDetail::MaximumLikelihood(r) => &r.loglik_trace,
        }
    }
}

/// Fits `model` with its default configuration, k-means seeded by `seed`.
pub fn fit_model(model: Model, data: &[f64], seed: u64, exec: Execution) -> Result<FitOutcome> {
    let detail = if model.is_variational() {
        let cfg = VbFitConfig {
            seed,
            execution: exec,
            ..VbFitConfig::default()
        };
        FitDetail::Variational(vb::fit_vb(data, model.family(), &cfg)?)
    } else {
        let cfg = MlFitConfig {
            seed,
            execution: exec,
            ..MlFitConfig::default()
        };
        FitDetail::MaximumLikelihood(mlem::fit_ml_auto(data, model.family(), &cfg)?)
    };
    Ok(FitOutcome { model, detail })
}
