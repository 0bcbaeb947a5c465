//! Three-component mixture models for separating Gaussian noise from positive
//! and negative activations modelled as Gamma or inverse-Gamma distributions.
//!
//! Four learners are provided: moment-matched maximum-likelihood EM for
//! Gauss/Gamma ([`mlem::fit_ggm`]) and Gauss/inverse-Gamma
//! ([`mlem::fit_gim`]) mixtures, and their analytical variational Bayes
//! counterparts ([`vb::fit_bggm`], [`vb::fit_bgim`]). The [`eval`] and
//! [`experiments`] modules reproduce the synthetic benchmark protocol.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod init;
pub mod io;
pub mod mlem;
pub mod model;
pub mod par;
pub mod responsibilities;
pub mod special;
pub mod vb;

pub use distributions::{
    ComponentFamily, GaussianParams, MixtureParams, ShapeFamily, ShapeRateParams, Support,
};
pub use error::{Error, Result};
pub use model::{fit_model, FitOutcome, Model};
pub use par::Execution;
pub use responsibilities::Responsibilities;
