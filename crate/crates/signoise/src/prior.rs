//! Prior distributions over the model parameters.
//!
//! The conjugate specification places independent Normal priors on the two
//! locations and the coupling ("mu_x, mu_y ~ N(0, 30^2), beta ~ N(1, 0.7^2)")
//! and Inverse-Gamma priors on the three *variances*:
//!
//! ```text
//!     sigma_s^2   ~ InvGamma(2, 25)      density ∝ v^(-a-1) exp(-b/v)
//!     sigma_eps^2 ~ InvGamma(3, 100)
//!     sigma_eta^2 ~ InvGamma(3, 100)
//! ```
//!
//! A uniform preset (sigma ~ U(0, 30) on the standard-deviation scale,
//! beta ~ U(-1, 2)) is kept for prior-predictive exploration only; it is not
//! conjugate and cannot drive the Gibbs sampler.

use crate::error::{Error, Result};
use crate::model::{DerivedDiagnostics, ModelParams};
use crate::rng::{domains, Philox};
use crate::stats::{inv_gamma_median, ln_gamma};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// Normal prior on a location-type parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl NormalPrior {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        crate::stats::ln_normal_pdf(x, self.mean, self.sd)
    }

    pub fn draw<G: Rng + ?Sized>(&self, rng: &mut G) -> f64 {
        self.mean + self.sd * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Inverse-Gamma prior on a variance, density ∝ v^(-shape-1) exp(-scale/v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl InvGammaPrior {
    pub fn ln_pdf(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.scale.ln() - ln_gamma(self.shape) - (self.shape + 1.0) * v.ln()
            - self.scale / v
    }

    /// Draws a variance: scale / Gamma(shape, 1).
    pub fn draw<G: Rng + ?Sized>(&self, rng: &mut G) -> f64 {
        let g = Gamma::new(self.shape, 1.0).expect("validated shape");
        self.scale / g.sample(rng)
    }

    pub fn median(&self) -> f64 {
        inv_gamma_median(self.shape, self.scale)
    }
}

/// Conjugate prior specification for all six parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub mu_x: NormalPrior,
    pub mu_y: NormalPrior,
    pub beta: NormalPrior,
    pub sigma2_s: InvGammaPrior,
    pub sigma2_eps: InvGammaPrior,
    pub sigma2_eta: InvGammaPrior,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            mu_x: NormalPrior { mean: 0.0, sd: 30.0 },
            mu_y: NormalPrior { mean: 0.0, sd: 30.0 },
            beta: NormalPrior { mean: 1.0, sd: 0.7 },
            sigma2_s: InvGammaPrior { shape: 2.0, scale: 25.0 },
            sigma2_eps: InvGammaPrior { shape: 3.0, scale: 100.0 },
            sigma2_eta: InvGammaPrior { shape: 3.0, scale: 100.0 },
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let scales = [
            self.mu_x.sd,
            self.mu_y.sd,
            self.beta.sd,
            self.sigma2_s.shape,
            self.sigma2_s.scale,
            self.sigma2_eps.shape,
            self.sigma2_eps.scale,
            self.sigma2_eta.shape,
            self.sigma2_eta.scale,
        ];
        if scales.iter().any(|&v| v <= 0.0 || !v.is_finite())
            || !self.mu_x.mean.is_finite()
            || !self.mu_y.mean.is_finite()
            || !self.beta.mean.is_finite()
        {
            return Err(Error::InvalidConfig(
                "prior scales and shapes must be finite and positive".into(),
            ));
        }
        Ok(())
    }

    /// One joint draw; fixed parameter order for reproducibility.
    pub fn draw_params<G: Rng + ?Sized>(&self, rng: &mut G) -> ModelParams {
        ModelParams {
            mu_x: self.mu_x.draw(rng),
            mu_y: self.mu_y.draw(rng),
            beta: self.beta.draw(rng),
            sigma_s: self.sigma2_s.draw(rng).sqrt(),
            sigma_eps: self.sigma2_eps.draw(rng).sqrt(),
            sigma_eta: self.sigma2_eta.draw(rng).sqrt(),
        }
    }

    /// Prior medians (means for the Normal components); used as a fallback
    /// initialization when moment estimates are degenerate.
    pub fn median_params(&self) -> ModelParams {
        ModelParams {
            mu_x: self.mu_x.mean,
            mu_y: self.mu_y.mean,
            beta: self.beta.mean,
            sigma_s: self.sigma2_s.median().sqrt(),
            sigma_eps: self.sigma2_eps.median().sqrt(),
            sigma_eta: self.sigma2_eta.median().sqrt(),
        }
    }

    /// The prior implied for data transformed by v -> a v + b on both
    /// streams: locations map affinely, variances pick up a^2, beta is
    /// untouched.
    pub fn rescaled(&self, a: f64, b: f64) -> Self {
        Self {
            mu_x: NormalPrior { mean: a * self.mu_x.mean + b, sd: a.abs() * self.mu_x.sd },
            mu_y: NormalPrior { mean: a * self.mu_y.mean + b, sd: a.abs() * self.mu_y.sd },
            beta: self.beta,
            sigma2_s: InvGammaPrior { shape: self.sigma2_s.shape, scale: a * a * self.sigma2_s.scale },
            sigma2_eps: InvGammaPrior { shape: self.sigma2_eps.shape, scale: a * a * self.sigma2_eps.scale },
            sigma2_eta: InvGammaPrior { shape: self.sigma2_eta.shape, scale: a * a * self.sigma2_eta.scale },
        }
    }
}

/// Uniform prior preset; exploration only (not conjugate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior {
    /// All three noise scales are U(0, sigma_max) on the sd scale.
    pub sigma_max: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// Locations keep the wide Normal of the conjugate preset.
    pub mu: NormalPrior,
}

impl Default for UniformPrior {
    fn default() -> Self {
        Self {
            sigma_max: 30.0,
            beta_lo: -1.0,
            beta_hi: 2.0,
            mu: NormalPrior { mean: 0.0, sd: 30.0 },
        }
    }
}

impl UniformPrior {
    pub fn draw_params<G: Rng + ?Sized>(&self, rng: &mut G) -> ModelParams {
        ModelParams {
            mu_x: self.mu.draw(rng),
            mu_y: self.mu.draw(rng),
            beta: rng.random_range(self.beta_lo..self.beta_hi),
            sigma_s: rng.random_range(0.0..self.sigma_max),
            sigma_eps: rng.random_range(0.0..self.sigma_max),
            sigma_eta: rng.random_range(0.0..self.sigma_max),
        }
    }
}

/// Either prior family, as selected by the CLI presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PriorModel {
    Conjugate(PriorSpec),
    Uniform(UniformPrior),
}

impl PriorModel {
    pub fn draw_params<G: Rng + ?Sized>(&self, rng: &mut G) -> ModelParams {
        match self {
            PriorModel::Conjugate(p) => p.draw_params(rng),
            PriorModel::Uniform(p) => p.draw_params(rng),
        }
    }
}

/// Monte-Carlo draws of the skill diagnostics under the prior alone:
/// parameters are drawn from `prior` and mapped through
/// [`ModelParams::derived_diagnostics`] at ensemble size `r`.
pub fn prior_predictive(
    prior: &PriorModel,
    r: usize,
    draws: usize,
    seed: u64,
) -> (Vec<ModelParams>, Vec<DerivedDiagnostics>) {
    let mut rng = Philox::substream(seed, domains::PRIOR_PREDICTIVE, 0);
    let mut params = Vec::with_capacity(draws);
    let mut diags = Vec::with_capacity(draws);
    for _ in 0..draws {
        let p = prior.draw_params(&mut rng);
        diags.push(p.derived_diagnostics(r));
        params.push(p);
    }
    (params, diags)
}
