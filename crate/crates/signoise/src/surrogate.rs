//! Construction of synthetic hindcasts whose sample moments hit prescribed
//! targets exactly.
//!
//! The sampler's posterior depends on the data only through the summary
//! statistics (means, second moments of ensemble means and observations,
//! within-ensemble variance, and per-member mean spread), so a dataset
//! matching a published statistics table reproduces the corresponding
//! posterior exactly even though the raw series differ.
//!
//! Construction: draw Gaussian noise, then project it onto the constraint
//! set — center, whiten by the empirical Cholesky factor, recolor with the
//! target Cholesky factor, and rescale the within-ensemble deviations so
//! both the total within-variance and the per-member mean variance match.

use crate::data::HindcastDataset;
use crate::error::{Error, Result};
use crate::moments::SummaryStats;
use crate::rng::{domains, Philox};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Targets for a surrogate dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub stats: SummaryStats,
    /// Label of the first year; years run consecutively.
    pub start_year: i32,
}

impl SurrogateSpec {
    /// The bundled reference targets: the winter-NAO hindcast summary
    /// statistics (N = 20 years from 1992, R = 24 members).  The per-member
    /// mean variance is not part of the published table; it defaults to
    /// v_within / N, the expected value under the model.
    pub fn reference() -> Self {
        Self {
            stats: SummaryStats {
                n_years: 20,
                r_members: 24,
                m_x: 23.42,
                m_y: 20.94,
                v_xbar: 5.24,
                v_y: 67.12,
                s_xbary: 11.55,
                v_within: 62.17,
                member_mean_var: 62.17 / 20.0,
            },
            start_year: 1992,
        }
    }

    /// Checks the targets are realizable:
    /// the (xbar, y) covariance matrix must be positive semidefinite and
    /// the member-mean variance cannot exceed the total within-variance.
    pub fn validate(&self) -> Result<()> {
        let s = &self.stats;
        if s.n_years < 3 || s.r_members < 2 {
            return Err(Error::Unsatisfiable(
                "surrogate needs at least 3 years and 2 members".into(),
            ));
        }
        let finite = [s.m_x, s.m_y, s.v_xbar, s.v_y, s.s_xbary, s.v_within, s.member_mean_var];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unsatisfiable("non-finite target statistic".into()));
        }
        if s.v_xbar < 0.0 || s.v_y < 0.0 || s.v_within < 0.0 || s.member_mean_var < 0.0 {
            return Err(Error::Unsatisfiable("negative target variance".into()));
        }
        if s.s_xbary * s.s_xbary > s.v_xbar * s.v_y * (1.0 + 1e-12) {
            return Err(Error::Unsatisfiable(format!(
                "covariance target {} exceeds the variance bound {}",
                s.s_xbary,
                (s.v_xbar * s.v_y).sqrt()
            )));
        }
        if s.member_mean_var > s.v_within * (1.0 + 1e-12) {
            return Err(Error::Unsatisfiable(
                "member-mean variance target exceeds the within-ensemble variance".into(),
            ));
        }
        Ok(())
    }

    /// Generates a dataset matching the targets to floating-point accuracy.
    pub fn generate(&self, seed: u64) -> Result<HindcastDataset> {
        self.validate()?;
        let s = &self.stats;
        let n = s.n_years;
        let r = s.r_members;
        let nf = n as f64;
        let rf = r as f64;
        let mut rng = Philox::substream(seed, domains::SURROGATE, 0);

        // --- (xbar, y) block: center, whiten, recolor -------------------
        let mut a1: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut a2: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        center(&mut a1);
        center(&mut a2);
        let c11 = dot(&a1, &a1) / nf;
        let c21 = dot(&a2, &a1) / nf;
        let c22 = dot(&a2, &a2) / nf;
        // empirical Cholesky (lower): a.s. non-singular for n >= 3
        let l11 = c11.sqrt();
        if l11 <= 1e-300 {
            return Err(Error::Unsatisfiable("degenerate noise draw".into()));
        }
        let l21 = c21 / l11;
        let l22 = (c22 - l21 * l21).max(0.0).sqrt();
        if l22 <= 1e-300 {
            return Err(Error::Unsatisfiable("degenerate noise draw".into()));
        }
        // target Cholesky; zero target variances collapse the factor
        let t11 = s.v_xbar.sqrt();
        let t21 = if t11 > 0.0 { s.s_xbary / t11 } else { 0.0 };
        let t22 = (s.v_y - t21 * t21).max(0.0).sqrt();
        let mut xbar = Vec::with_capacity(n);
        let mut obs = Vec::with_capacity(n);
        for t in 0..n {
            let z1 = a1[t] / l11;
            let z2 = (a2[t] - l21 * z1) / l22;
            xbar.push(s.m_x + t11 * z1);
            obs.push(s.m_y + t21 * z1 + t22 * z2);
        }

        // --- within-ensemble deviations ---------------------------------
        // row-center a noise matrix, split off per-member means, and scale
        // the two pieces to hit v_within and member_mean_var exactly
        let mut dev: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..r).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        for row in &mut dev {
            center(row);
        }
        let col_means: Vec<f64> = (0..r)
            .map(|j| dev.iter().map(|row| row[j]).sum::<f64>() / nf)
            .collect();
        for row in &mut dev {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= col_means[j];
            }
        }
        let sum_c2: f64 = col_means.iter().map(|c| c * c).sum();
        let sum_e2: f64 = dev.iter().flatten().map(|e| e * e).sum();
        if (s.member_mean_var > 0.0 && sum_c2 <= 1e-300)
            || (s.v_within > s.member_mean_var && sum_e2 <= 1e-300)
        {
            return Err(Error::Unsatisfiable("degenerate noise draw".into()));
        }
        let alpha = if sum_c2 > 0.0 { (s.member_mean_var * rf / sum_c2).sqrt() } else { 0.0 };
        let gamma = if sum_e2 > 0.0 {
            ((nf * rf * (s.v_within - s.member_mean_var)).max(0.0) / sum_e2).sqrt()
        } else {
            0.0
        };
        let ens: Vec<Vec<f64>> = (0..n)
            .map(|t| {
                (0..r)
                    .map(|j| xbar[t] + gamma * dev[t][j] + alpha * col_means[j])
                    .collect()
            })
            .collect();
        let years = (self.start_year..self.start_year + n as i32).collect();
        HindcastDataset::from_parts(years, obs, ens)
    }
}

fn center(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v {
        *x -= m;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
