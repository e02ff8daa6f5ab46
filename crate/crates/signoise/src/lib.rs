//! Bayesian analysis of ensemble hindcast skill with a signal-plus-noise model.
//!
//! The observable `y_t` and the `R` ensemble members `x_{t,r}` of a hindcast for
//! year `t` are modelled as noisy views of one latent signal `s_t`:
//!
//! ```text
//! y_t     = mu_y + s_t        + eps_t,    eps_t  ~ N(0, sigma_eps^2)
//! x_{t,r} = mu_x + beta * s_t + eta_{t,r}, eta_{t,r} ~ N(0, sigma_eta^2)
//! s_t ~ N(0, sigma_s^2)
//! ```
//!
//! with everything mutually independent. All skill measures of interest
//! (correlation, signal-to-noise ratios, ratio of predictable components)
//! are deterministic functions of the six parameters, so quantifying
//! parameter uncertainty by Bayesian inference yields their full posterior
//! distributions instead of plug-in point values.
//!
//! The crate provides:
//!
//! - [`model`]: the model itself (joint moments, likelihood, population
//!   correlation, conditional predictive law, derived skill diagnostics).
//! - [`moments`]: summary statistics and closed-form moment estimators.
//! - [`prior`]: conjugate prior specification and prior-predictive sampling.
//! - [`gibbs`]: a deterministic-scan Gibbs sampler with exact conjugate
//!   full conditionals, including a leave-one-out variant for prediction.
//! - [`diagnostics`]: split-Rhat and effective-sample-size convergence checks.
//! - [`verification`]: posterior correlation analyses, probability reports,
//!   and a perfect-model (member-as-pseudo-observation) check.
//! - [`prediction`]: recalibrated predictive distributions and Ignorance
//!   scoring against regression and climatology baselines.
//! - [`design`]: skill distributions under alternative (N, R) hindcast designs.
//! - [`sensitivity`]: prior-sensitivity scans over the signal-variance prior.
//! - [`surrogate`]: moment-matched synthetic dataset generation.
//! - [`data`] / [`report`]: dataset I/O and deterministic JSON/CSV reporting.
//!
//! Every stochastic entry point takes an explicit seed and draws from
//! non-overlapping substreams of a counter-based generator ([`rng`]), so
//! results are reproducible bit-for-bit for a given seed and input.

pub mod data;
pub mod design;
pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod model;
pub mod moments;
pub mod prediction;
pub mod prior;
pub mod report;
pub mod rng;
pub mod sensitivity;
pub mod stats;
pub mod surrogate;
pub mod verification;

pub use data::HindcastDataset;
pub use error::{Error, Result};
pub use gibbs::{ChainSet, SamplerConfig};
pub use model::{DerivedDiagnostics, JointMoments, ModelParams, SignalPath};
pub use moments::{MomentFlags, SummaryStats};
pub use prior::PriorSpec;
