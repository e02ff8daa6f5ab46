//! Core signal-plus-noise model:
//!
//! ```text
//!     y_t     = mu_y +        s_t + eps_t        eps_t ~ N(0, sigma_eps^2)
//!     x_{t,r} = mu_x + beta * s_t + eta_{t,r}    eta_{t,r} ~ N(0, sigma_eta^2)
//!     s_t ~ N(0, sigma_s^2)                      all independent
//! ```
//!
//! for years t = 1..N and ensemble members r = 1..R.  This module holds the
//! parameter and signal types, the complete-data log-likelihood, the implied
//! joint second moments, the conditional predictive law of y given the
//! ensemble mean, and the scalar skill diagnostics (correlation, SNRs,
//! predictable components, RPC) derived from the parameters.

use crate::data::HindcastDataset;
use crate::error::{Error, Result};
use crate::stats::ln_normal_pdf;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// The six model parameters.  Noise scales are standard deviations, not
/// variances; the Inverse-Gamma priors act on the squares at the prior
/// boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Ensemble location (hPa).
    pub mu_x: f64,
    /// Observation location (hPa).
    pub mu_y: f64,
    /// Signal amplification of the ensemble relative to the observations.
    pub beta: f64,
    /// Predictable-signal standard deviation (hPa).
    pub sigma_s: f64,
    /// Observation-noise standard deviation (hPa).
    pub sigma_eps: f64,
    /// Ensemble-noise standard deviation (hPa).
    pub sigma_eta: f64,
}

/// Latent predictable signal, one value per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPath {
    pub s: Vec<f64>,
}

/// Second moments of the joint distribution of (y_t, x_{t,1..R}) implied by
/// the parameters, plus the ensemble-mean variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointMoments {
    /// var(y_t) = sigma_s^2 + sigma_eps^2
    pub var_y: f64,
    /// var(x_{t,r}) = beta^2 sigma_s^2 + sigma_eta^2
    pub var_xi: f64,
    /// cov(x_{t,r}, x_{t,r'}) = beta^2 sigma_s^2 for r != r'
    pub cov_xx: f64,
    /// cov(x_{t,r}, y_t) = beta sigma_s^2
    pub cov_xy: f64,
    /// var(xbar_t) = beta^2 sigma_s^2 + sigma_eta^2 / R
    pub var_xbar: f64,
}

/// Scalar skill diagnostics derived from a parameter vector at ensemble
/// size R.  All are scale-invariant except `bias`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedDiagnostics {
    /// Population correlation of ensemble mean and observation.
    pub rho: f64,
    /// Signal-to-noise ratio of the observations, sigma_s / sigma_eps.
    pub snr_obs: f64,
    /// Signal-to-noise ratio of the model, |beta| sigma_s / sigma_eta.
    pub snr_mod: f64,
    /// Predictable component of the real world (equals rho).
    pub pc_obs: f64,
    /// Predictable component of the model,
    /// sqrt((beta^2 sigma_s^2 + sigma_eta^2/R)/(beta^2 sigma_s^2 + sigma_eta^2)).
    pub pc_mod: f64,
    /// Ratio of predictable components, |pc_obs| / pc_mod.
    pub rpc: f64,
    /// RPC of a fully exchangeable system with the same sigma_s, sigma_eps:
    /// (1 + sigma_eps^2/(R sigma_s^2))^-1.
    pub rpc_perf: f64,
    /// Forecast mean bias mu_x - mu_y (hPa).
    pub bias: f64,
}

impl ModelParams {
    /// Validating constructor: all fields finite, all scales strictly
    /// positive.  Struct literals bypass this for deliberately degenerate
    /// edge cases (zero noise limits).
    pub fn new(
        mu_x: f64,
        mu_y: f64,
        beta: f64,
        sigma_s: f64,
        sigma_eps: f64,
        sigma_eta: f64,
    ) -> Result<Self> {
        let p = Self { mu_x, mu_y, beta, sigma_s, sigma_eps, sigma_eta };
        if !(p.mu_x.is_finite()
            && p.mu_y.is_finite()
            && p.beta.is_finite()
            && p.sigma_s.is_finite()
            && p.sigma_eps.is_finite()
            && p.sigma_eta.is_finite())
        {
            return Err(Error::InvalidData("non-finite model parameter".into()));
        }
        if p.sigma_s <= 0.0 || p.sigma_eps <= 0.0 || p.sigma_eta <= 0.0 {
            return Err(Error::InvalidData(
                "scale parameters must be strictly positive".into(),
            ));
        }
        Ok(p)
    }

    /// Joint second moments of (y_t, x_{t,.}) and the ensemble mean at
    /// ensemble size `r`.
    pub fn joint_moments(&self, r: usize) -> JointMoments {
        let s2 = self.sigma_s * self.sigma_s;
        let b2s2 = self.beta * self.beta * s2;
        JointMoments {
            var_y: s2 + self.sigma_eps * self.sigma_eps,
            var_xi: b2s2 + self.sigma_eta * self.sigma_eta,
            cov_xx: b2s2,
            cov_xy: self.beta * s2,
            var_xbar: b2s2 + self.sigma_eta * self.sigma_eta / r as f64,
        }
    }

    /// Population correlation between the ensemble mean and the observation,
    ///
    /// ```text
    ///     rho = beta sigma_s^2 / sqrt((beta^2 sigma_s^2 + sigma_eta^2/R)
    ///                                 (sigma_s^2 + sigma_eps^2))
    /// ```
    ///
    /// Errors with [`Error::DegenerateModel`] when either variance in the
    /// denominator vanishes.
    pub fn population_correlation(&self, r: usize) -> Result<f64> {
        let m = self.joint_moments(r);
        let denom2 = m.var_xbar * m.var_y;
        if denom2 <= 0.0 {
            return Err(Error::DegenerateModel(format!(
                "correlation undefined: var_xbar = {}, var_y = {}",
                m.var_xbar, m.var_y
            )));
        }
        Ok((m.cov_xy / denom2.sqrt()).clamp(-1.0, 1.0))
    }

    /// Conditional distribution of y_t given the ensemble mean xbar_t:
    ///
    /// ```text
    ///     mean = mu_y + [beta sigma_s^2 / (beta^2 sigma_s^2 + sigma_eta^2/R)] (xbar - mu_x)
    ///     var  = sigma_eps^2 + sigma_s^2 sigma_eta^2 / (R beta^2 sigma_s^2 + sigma_eta^2)
    /// ```
    pub fn conditional_predictive(&self, xbar: f64, r: usize) -> Result<(f64, f64)> {
        let s2 = self.sigma_s * self.sigma_s;
        let denom = self.beta * self.beta * s2 + self.sigma_eta * self.sigma_eta / r as f64;
        if denom <= 0.0 {
            return Err(Error::DegenerateModel(
                "ensemble mean has zero variance; conditional law undefined".into(),
            ));
        }
        let mean = self.mu_y + self.beta * s2 / denom * (xbar - self.mu_x);
        let var = self.sigma_eps * self.sigma_eps
            + s2 * self.sigma_eta * self.sigma_eta / (r as f64 * denom);
        Ok((mean, var))
    }

    /// All scalar diagnostics at ensemble size `r`.
    ///
    /// Total on the closed parameter space: zero noise scales produce the
    /// documented limits instead of errors — `sigma_eps = 0` gives
    /// `snr_obs = INFINITY` (likewise `sigma_eta` and `snr_mod`), and a
    /// fully degenerate correlation denominator yields `rho = 0`.
    pub fn derived_diagnostics(&self, r: usize) -> DerivedDiagnostics {
        let m = self.joint_moments(r);
        let denom2 = m.var_xbar * m.var_y;
        let rho = if denom2 > 0.0 {
            (m.cov_xy / denom2.sqrt()).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let snr_obs = if self.sigma_s == 0.0 {
            0.0
        } else if self.sigma_eps == 0.0 {
            f64::INFINITY
        } else {
            self.sigma_s / self.sigma_eps
        };
        let signal_mod = self.beta.abs() * self.sigma_s;
        let snr_mod = if signal_mod == 0.0 {
            0.0
        } else if self.sigma_eta == 0.0 {
            f64::INFINITY
        } else {
            signal_mod / self.sigma_eta
        };
        // pc_mod -> 1 in the noise-free limit sigma_eta -> 0
        let pc_mod = if m.var_xi > 0.0 { (m.var_xbar / m.var_xi).sqrt() } else { 1.0 };
        let rpc = rho.abs() / pc_mod;
        let s2 = self.sigma_s * self.sigma_s;
        let rpc_perf = if s2 == 0.0 {
            0.0
        } else {
            let rs2 = r as f64 * s2;
            rs2 / (rs2 + self.sigma_eps * self.sigma_eps)
        };
        DerivedDiagnostics {
            rho,
            snr_obs,
            snr_mod,
            pc_obs: rho,
            pc_mod,
            rpc,
            rpc_perf,
            bias: self.mu_x - self.mu_y,
        }
    }

    /// Draws a fresh dataset (and its latent signal) of `n_years` x
    /// `r_members` from the model.  Year labels run 1..=N.
    pub fn simulate<G: Rng + ?Sized>(
        &self,
        n_years: usize,
        r_members: usize,
        rng: &mut G,
    ) -> (HindcastDataset, SignalPath) {
        let mut s = Vec::with_capacity(n_years);
        let mut obs = Vec::with_capacity(n_years);
        let mut ens = Vec::with_capacity(n_years);
        for _ in 0..n_years {
            let st = self.sigma_s * rng.sample::<f64, _>(StandardNormal);
            obs.push(self.mu_y + st + self.sigma_eps * rng.sample::<f64, _>(StandardNormal));
            let mut row = Vec::with_capacity(r_members);
            for _ in 0..r_members {
                row.push(
                    self.mu_x
                        + self.beta * st
                        + self.sigma_eta * rng.sample::<f64, _>(StandardNormal),
                );
            }
            ens.push(row);
            s.push(st);
        }
        let years = (1..=n_years as i32).collect();
        (
            HindcastDataset { years, obs, ens },
            SignalPath { s },
        )
    }

    /// Draws a replicate ensemble for a *given* signal path:
    /// x_{t,r} = mu_x + beta s_t + eta_{t,r} with fresh noise.
    pub fn replicate_ensemble<G: Rng + ?Sized>(
        &self,
        signal: &SignalPath,
        r_members: usize,
        rng: &mut G,
    ) -> Vec<Vec<f64>> {
        signal
            .s
            .iter()
            .map(|&st| {
                (0..r_members)
                    .map(|_| {
                        self.mu_x
                            + self.beta * st
                            + self.sigma_eta * rng.sample::<f64, _>(StandardNormal)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Complete-data log-likelihood: Normal log-densities of each y_t around
/// mu_y + s_t (scale sigma_eps) plus of each x_{t,r} around mu_x + beta s_t
/// (scale sigma_eta), summed over all years and members.  The latent-signal
/// prior density is *not* included.
pub fn log_likelihood(
    data: &HindcastDataset,
    params: &ModelParams,
    signal: &SignalPath,
) -> Result<f64> {
    if signal.s.len() != data.n_years() {
        return Err(Error::DimensionMismatch(format!(
            "signal length {} vs {} years of data",
            signal.s.len(),
            data.n_years()
        )));
    }
    if params.sigma_eps <= 0.0 || params.sigma_eta <= 0.0 {
        return Err(Error::DegenerateModel(
            "likelihood requires positive noise scales".into(),
        ));
    }
    let mut ll = 0.0;
    for (t, &st) in signal.s.iter().enumerate() {
        ll += ln_normal_pdf(data.obs[t], params.mu_y + st, params.sigma_eps);
        let fc = params.mu_x + params.beta * st;
        for &x in &data.ens[t] {
            ll += ln_normal_pdf(x, fc, params.sigma_eta);
        }
    }
    Ok(ll)
}
