//! Recalibrated probabilistic prediction and out-of-sample scoring.
//!
//! The posterior predictive for a held-out year is an equal-weight mixture
//! of Normals, one component per retained draw: y ~ N(mu_y + s_t, sigma_eps)
//! with (mu_y, s_t, sigma_eps) varying over draws.  It is compared against
//! two non-Bayesian reference forecasts fitted to the training years only:
//! linear regression of the observations on the ensemble mean, and the
//! climatological distribution of the observations.  All three are scored
//! by Ignorance, -log2 of the predictive density at the verifying value, so
//! differences are in bits: one bit means the verification was on average
//! twice as probable under one forecast as under the other.

use crate::data::HindcastDataset;
use crate::error::{Error, Result};
use crate::gibbs::{sample_posterior_loo, ChainSet, SamplerConfig};
use crate::moments::{summarize, SummaryStats};
use crate::prior::PriorSpec;
use crate::stats;
use serde::Serialize;

/// Ignorance scores larger than this are reported as exactly this value and
/// flagged, so a single absurd tail evaluation cannot dominate a mean score.
pub const IGNORANCE_CAP: f64 = 60.0;

/// An equal-weight mixture of Normal distributions predicting one year.
#[derive(Debug, Clone, Serialize)]
pub struct PredictiveDistribution {
    pub target_year: i32,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl PredictiveDistribution {
    pub fn new(target_year: i32, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        if means.is_empty() || means.len() != sds.len() {
            return Err(Error::InvalidConfig(format!(
                "predictive mixture needs matching non-empty components, got {} means and {} sds",
                means.len(),
                sds.len()
            )));
        }
        for (m, s) in means.iter().zip(&sds) {
            if !m.is_finite() || !s.is_finite() || *s <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "invalid mixture component N({m}, {s}^2)"
                )));
            }
        }
        Ok(PredictiveDistribution { target_year, means, sds })
    }

    /// Single-Normal convenience constructor.
    pub fn single(target_year: i32, mean: f64, var: f64) -> Result<Self> {
        if var <= 0.0 || var.is_nan() {
            return Err(Error::DegenerateModel(format!(
                "predictive variance must be positive, got {var}"
            )));
        }
        Self::new(target_year, vec![mean], vec![var.sqrt()])
    }

    pub fn n_components(&self) -> usize {
        self.means.len()
    }

    /// Natural log of the mixture density (computed by log-mean-exp, so
    /// far-tail evaluations underflow gracefully).
    pub fn log_pdf(&self, y: f64) -> f64 {
        let lps: Vec<f64> = self
            .means
            .iter()
            .zip(&self.sds)
            .map(|(m, s)| stats::ln_normal_pdf(y, *m, *s))
            .collect();
        stats::log_mean_exp(&lps)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let total: f64 = self
            .means
            .iter()
            .zip(&self.sds)
            .map(|(m, s)| stats::std_normal_cdf((y - m) / s))
            .sum();
        total / self.means.len() as f64
    }

    pub fn mean(&self) -> f64 {
        stats::mean(&self.means)
    }

    /// Mixture variance: average component variance plus variance of the
    /// component means.
    pub fn variance(&self) -> f64 {
        let mm = self.mean();
        let n = self.means.len() as f64;
        let within: f64 = self.sds.iter().map(|s| s * s).sum::<f64>() / n;
        let between: f64 =
            self.means.iter().map(|m| (m - mm).powi(2)).sum::<f64>() / n;
        within + between
    }

    /// Quantile by bracketed Newton iteration on the mixture CDF.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0 < q && q < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "quantile level must lie strictly inside (0, 1), got {q}"
            )));
        }
        let max_sd = self.sds.iter().cloned().fold(0.0f64, f64::max);
        let mut lo =
            self.means.iter().cloned().fold(f64::INFINITY, f64::min) - 40.0 * max_sd;
        let mut hi =
            self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 40.0 * max_sd;
        let mut x = self.mean();
        for _ in 0..200 {
            let f = self.cdf(x) - q;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.pdf(x);
            let mut next = if d > 0.0 { x - f / d } else { 0.5 * (lo + hi) };
            if !(lo < next && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-12 * x.abs().max(1.0) {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}

/// An Ignorance score in bits, flagged when the cap was applied.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ignorance {
    pub bits: f64,
    pub capped: bool,
}

/// -log2 of the predictive density at the verifying observation.
pub fn ignorance(dist: &PredictiveDistribution, y: f64) -> Ignorance {
    let bits = -dist.log_pdf(y) / std::f64::consts::LN_2;
    if bits.is_finite() && bits <= IGNORANCE_CAP {
        Ignorance { bits, capped: false }
    } else {
        Ignorance { bits: IGNORANCE_CAP, capped: true }
    }
}

/// Posterior predictive for the held-out year of a leave-one-out fit: one
/// mixture component per retained draw, centered on that draw's held-out
/// signal.  The sample set must carry leave-one-out provenance.
pub fn posterior_predictive(
    chains: &ChainSet,
    target_year: i32,
) -> Result<PredictiveDistribution> {
    let holdout = chains.provenance.holdout_year.ok_or_else(|| {
        Error::InvalidConfig(
            "posterior predictive needs a leave-one-out sample set (no held-out year in provenance)"
                .into(),
        )
    })?;
    let mut means = Vec::with_capacity(chains.total_draws());
    let mut sds = Vec::with_capacity(chains.total_draws());
    for d in chains.iter_draws() {
        means.push(d.params.mu_y + d.signal.s[holdout]);
        sds.push(d.params.sigma_eps);
    }
    PredictiveDistribution::new(target_year, means, sds)
}

/// Ordinary least squares of observations on ensemble means over the
/// training years, predicting the target year from its ensemble mean.  The
/// predictive is N(m_y + b(xbar - m_x), v_y(1 - r^2)).
pub fn regression_benchmark(
    train: &SummaryStats,
    xbar: f64,
    target_year: i32,
) -> Result<PredictiveDistribution> {
    if train.n_years < 3 {
        return Err(Error::InvalidData(format!(
            "regression benchmark needs at least 3 training years, got {}",
            train.n_years
        )));
    }
    if train.v_xbar <= 0.0 || train.v_xbar.is_nan() {
        return Err(Error::DegenerateModel(
            "regression benchmark undefined: ensemble means constant over training years".into(),
        ));
    }
    if train.v_y <= 0.0 || train.v_y.is_nan() {
        return Err(Error::DegenerateModel(
            "regression benchmark undefined: observations constant over training years".into(),
        ));
    }
    let slope = train.s_xbary / train.v_xbar;
    let r2 = train.s_xbary * train.s_xbary / (train.v_xbar * train.v_y);
    let resvar = train.v_y * (1.0 - r2);
    if resvar <= 0.0 || resvar.is_nan() {
        return Err(Error::DegenerateModel(
            "regression benchmark undefined: training fit is exact (zero residual variance)"
                .into(),
        ));
    }
    let mean = train.m_y + slope * (xbar - train.m_x);
    PredictiveDistribution::single(target_year, mean, resvar)
}

/// The climatological forecast N(m_y, v_y) of the training years.
pub fn climatology_baseline(
    train: &SummaryStats,
    target_year: i32,
) -> Result<PredictiveDistribution> {
    if train.n_years < 2 {
        return Err(Error::InvalidData(format!(
            "climatology needs at least 2 training years, got {}",
            train.n_years
        )));
    }
    if train.v_y <= 0.0 || train.v_y.is_nan() {
        return Err(Error::DegenerateModel(
            "climatology undefined: observations constant over training years".into(),
        ));
    }
    PredictiveDistribution::single(target_year, train.m_y, train.v_y)
}

/// Per-method scores across all held-out years.
#[derive(Debug, Clone, Serialize)]
pub struct MethodScores {
    pub method: String,
    /// Ignorance in bits, one entry per held-out year.
    pub per_year: Vec<f64>,
    pub mean_bits: f64,
    /// sd(per-year scores) / sqrt(N).
    pub se_bits: f64,
    /// How many yearly scores hit the cap.
    pub capped: usize,
    /// Average predictive standard deviation across years.
    pub mean_predictive_sd: f64,
    /// Standard deviation of the predictive centers across years.
    pub sd_of_centers: f64,
}

/// All three predictive distributions for one held-out year.
#[derive(Debug, Clone, Serialize)]
pub struct YearPredictions {
    pub year: i32,
    pub observed: f64,
    pub posterior: PredictiveDistribution,
    pub regression: PredictiveDistribution,
    pub climatology: PredictiveDistribution,
}

/// A full leave-one-out cross-validation.
#[derive(Debug, Clone, Serialize)]
pub struct LooEvaluation {
    pub methods: Vec<MethodScores>,
    pub years: Vec<YearPredictions>,
}

impl LooEvaluation {
    pub fn method(&self, name: &str) -> Option<&MethodScores> {
        self.methods.iter().find(|m| m.method == name)
    }
}

fn drop_year(data: &HindcastDataset, t: usize) -> Result<HindcastDataset> {
    let keep = |i: &usize| *i != t;
    HindcastDataset::from_parts(
        (0..data.n_years()).filter(keep).map(|i| data.years[i]).collect(),
        (0..data.n_years()).filter(keep).map(|i| data.obs[i]).collect(),
        (0..data.n_years()).filter(keep).map(|i| data.ens[i].clone()).collect(),
    )
}

fn score_method(name: &str, dists: &[&PredictiveDistribution], obs: &[f64]) -> MethodScores {
    let scored: Vec<Ignorance> =
        dists.iter().zip(obs).map(|(d, y)| ignorance(d, *y)).collect();
    let per_year: Vec<f64> = scored.iter().map(|s| s.bits).collect();
    let centers: Vec<f64> = dists.iter().map(|d| d.mean()).collect();
    let sds: Vec<f64> = dists.iter().map(|d| d.variance().sqrt()).collect();
    MethodScores {
        method: name.to_string(),
        mean_bits: stats::mean(&per_year),
        se_bits: stats::sd(&per_year) / (per_year.len() as f64).sqrt(),
        capped: scored.iter().filter(|s| s.capped).count(),
        mean_predictive_sd: stats::mean(&sds),
        sd_of_centers: stats::sd(&centers),
        per_year,
    }
}

/// Leave-one-out evaluation of the model's recalibrated predictive against
/// the regression and climatology references.  Each year is held out in
/// turn: the model is refitted without that year's observation (its
/// ensemble stays in, exactly as in operational recalibration), while both
/// references see neither the observation nor the ensemble of the held-out
/// year.
pub fn loo_evaluate(
    data: &HindcastDataset,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
) -> Result<LooEvaluation> {
    let n = data.n_years();
    if n < 4 {
        return Err(Error::InvalidData(format!(
            "leave-one-out evaluation needs at least 4 years, got {n}"
        )));
    }
    let mut years = Vec::with_capacity(n);
    for t in 0..n {
        let fit = sample_posterior_loo(data, prior, cfg, t)?;
        let posterior = posterior_predictive(&fit, data.years[t])?;
        let train = summarize(&drop_year(data, t)?);
        let xbar = data.ens[t].iter().sum::<f64>() / data.r_members() as f64;
        let regression = regression_benchmark(&train, xbar, data.years[t])?;
        let climatology = climatology_baseline(&train, data.years[t])?;
        years.push(YearPredictions {
            year: data.years[t],
            observed: data.obs[t],
            posterior,
            regression,
            climatology,
        });
    }
    let obs: Vec<f64> = years.iter().map(|y| y.observed).collect();
    let methods = vec![
        score_method(
            "posterior",
            &years.iter().map(|y| &y.posterior).collect::<Vec<_>>(),
            &obs,
        ),
        score_method(
            "regression",
            &years.iter().map(|y| &y.regression).collect::<Vec<_>>(),
            &obs,
        ),
        score_method(
            "climatology",
            &years.iter().map(|y| &y.climatology).collect::<Vec<_>>(),
            &obs,
        ),
    ];
    Ok(LooEvaluation { methods, years })
}
