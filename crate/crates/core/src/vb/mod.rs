//! Analytical variational Bayes for Gauss/Gamma (bGGM) and Gauss/inverse-Gamma
//! (bGIM) mixtures.
//!
//! Conjugate factors cover the mixing proportions (Dirichlet), the noise mean
//! (Gaussian) and precision (Gamma) and the activation rates/scales (Gamma).
//! Activation shapes use unnormalized conjugate priors; their posterior
//! expectations come from a Laplace approximation around the mode and a
//! Taylor correction for `⟨ln Γ(s)⟩`.
//!
//! For inverse-Gamma components the statistic conjugate to the scale is
//! `Σ γ_nk / x̃_n`, so `ê_k = e0 + Σ γ_nk / x̃_n` there and `e0 + Σ γ_nk x̃_n`
//! for Gamma components.

mod expectations;
mod fit;
mod free_energy;
mod priors;
mod state;
mod updates;

pub use expectations::{expectations, expected_log_gamma, laplace_shape};
pub use fit::{fit_bggm, fit_bgim, fit_vb, VBFitResult, VbFitConfig};
pub use free_energy::{
    free_energy_terms, kl_dirichlet, kl_gamma_rate, kl_gamma_scale, kl_gaussian,
    negative_free_energy, FreeEnergyTerms,
};
pub use priors::{default_hyperpriors, HyperPriors, ShapeHyperPriors, DEFAULT_ACTIVATION_MOMENT};
pub use state::{ExpectationCache, ShapeExpectations, ShapePosterior, SufficientStats, VBState};
pub use updates::{
    accumulate_stats, update_mu, update_pi, update_r, update_responsibilities, update_shape,
    update_tau,
};
