//! Sufficient summary statistics and method-of-moments point estimation.
//!
//! All second moments use the 1/N (population) divisor.  Equating the model
//! moments
//!
//! ```text
//!     E xbar_t = mu_x                 var xbar_t = beta^2 sigma_s^2 + sigma_eta^2 / R
//!     E y_t    = mu_y                 var y_t    = sigma_s^2 + sigma_eps^2
//!     cov(xbar_t, y_t) = beta sigma_s^2
//!     within-ensemble variance       = sigma_eta^2
//! ```
//!
//! with their sample counterparts and solving gives the estimators
//! implemented by [`moment_estimate`].

use crate::data::HindcastDataset;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use serde::{Deserialize, Serialize};

/// Variance floor used when an estimating equation produces a non-positive
/// variance; the corresponding flag is raised.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Sample moments of a hindcast dataset, 1/N divisors throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    /// Number of years the statistics were computed from.
    pub n_years: usize,
    /// Ensemble size.
    pub r_members: usize,
    /// Mean of the ensemble means (hPa).
    pub m_x: f64,
    /// Mean observation (hPa).
    pub m_y: f64,
    /// Variance of the ensemble means ((hPa)^2).
    pub v_xbar: f64,
    /// Variance of the observations ((hPa)^2).
    pub v_y: f64,
    /// Covariance of ensemble means and observations ((hPa)^2).
    pub s_xbary: f64,
    /// Average within-ensemble variance, 1/(NR) divisor ((hPa)^2).
    pub v_within: f64,
    /// Variance across members of the per-member time means ((hPa)^2).
    pub member_mean_var: f64,
}

/// Which estimating equations had to be clamped to [`VARIANCE_FLOOR`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentFlags {
    /// sigma_s^2 estimate was non-positive (beta took the sign opposite the
    /// covariance).
    pub sigma_s_clamped: bool,
    /// sigma_eps^2 estimate was non-positive (v_y < sigma_s^2 estimate).
    pub sigma_eps_clamped: bool,
    /// within-ensemble variance was zero (constant ensemble rows).
    pub sigma_eta_clamped: bool,
}

impl MomentFlags {
    /// True when any estimating equation was clamped.
    pub fn any(&self) -> bool {
        self.sigma_s_clamped || self.sigma_eps_clamped || self.sigma_eta_clamped
    }
}

/// Computes all sample moments of the dataset.
pub fn summarize(data: &HindcastDataset) -> SummaryStats {
    let n = data.n_years();
    let r = data.r_members();
    let nf = n as f64;
    let xbar = data.ensemble_means();
    let m_x = xbar.iter().sum::<f64>() / nf;
    let m_y = data.obs.iter().sum::<f64>() / nf;
    let mut v_xbar = 0.0;
    let mut v_y = 0.0;
    let mut s_xbary = 0.0;
    let mut v_within = 0.0;
    for t in 0..n {
        let dx = xbar[t] - m_x;
        let dy = data.obs[t] - m_y;
        v_xbar += dx * dx;
        v_y += dy * dy;
        s_xbary += dx * dy;
        for &x in &data.ens[t] {
            v_within += (x - xbar[t]) * (x - xbar[t]);
        }
    }
    // per-member time means of the deviations from the ensemble mean
    let mut member_mean_var = 0.0;
    for j in 0..r {
        let dev = data
            .ens
            .iter()
            .enumerate()
            .map(|(t, row)| row[j] - xbar[t])
            .sum::<f64>()
            / nf;
        member_mean_var += dev * dev;
    }
    member_mean_var /= r as f64;
    SummaryStats {
        n_years: n,
        r_members: r,
        m_x,
        m_y,
        v_xbar: v_xbar / nf,
        v_y: v_y / nf,
        s_xbary: s_xbary / nf,
        v_within: v_within / (nf * r as f64),
        member_mean_var,
    }
}

/// Solves the estimating equations for the six model parameters.
///
/// ```text
///     mu_x = m_x            sigma_eta^2 = v_within
///     mu_y = m_y            beta        = (v_xbar - v_within/R) / s_xbary
///     sigma_s^2   = s_xbary / beta
///     sigma_eps^2 = v_y - sigma_s^2
/// ```
///
/// Non-positive variance solutions are clamped to [`VARIANCE_FLOOR`] with
/// the matching flag raised; `s_xbary = 0` leaves beta undefined and is an
/// error.
pub fn moment_estimate(stats: &SummaryStats, r: usize) -> Result<(ModelParams, MomentFlags)> {
    if r < 2 {
        return Err(Error::Estimation(
            "moment estimation needs at least 2 ensemble members".into(),
        ));
    }
    if stats.s_xbary == 0.0 {
        return Err(Error::Estimation(
            "zero ensemble-mean/observation covariance leaves beta undefined".into(),
        ));
    }
    let mut flags = MomentFlags::default();
    let mut sigma2_eta = stats.v_within;
    if sigma2_eta <= 0.0 {
        sigma2_eta = VARIANCE_FLOOR;
        flags.sigma_eta_clamped = true;
    }
    let beta = (stats.v_xbar - stats.v_within / r as f64) / stats.s_xbary;
    let mut sigma2_s = stats.s_xbary / beta;
    if !sigma2_s.is_finite() || sigma2_s <= 0.0 {
        sigma2_s = VARIANCE_FLOOR;
        flags.sigma_s_clamped = true;
    }
    let mut sigma2_eps = stats.v_y - sigma2_s;
    if sigma2_eps <= 0.0 {
        sigma2_eps = VARIANCE_FLOOR;
        flags.sigma_eps_clamped = true;
    }
    let params = ModelParams {
        mu_x: stats.m_x,
        mu_y: stats.m_y,
        beta,
        sigma_s: sigma2_s.sqrt(),
        sigma_eps: sigma2_eps.sqrt(),
        sigma_eta: sigma2_eta.sqrt(),
    };
    Ok((params, flags))
}
