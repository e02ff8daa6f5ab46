//! Deterministic-scan Gibbs sampler for the joint posterior of the model
//! parameters and the latent signal path.
//!
//! The Normal/Inverse-Gamma priors make every full conditional closed form.
//! With likelihood weight w (1 for a normal fit, 0 to sample the prior) and
//! an observation mask m_t (0 for held-out years), the updates are
//!
//! ```text
//!     mu_y  | .  ~ N;  prec = 1/tau^2 + w n_obs / sig_eps^2
//!     mu_x  | .  ~ N;  prec = 1/tau^2 + w N R / sig_eta^2
//!     beta  | .  ~ N;  prec = 1/tau^2 + w R sum_t s_t^2 / sig_eta^2
//!     s_t   | .  ~ N;  prec = 1/sig_s^2 + w m_t/sig_eps^2 + w R beta^2/sig_eta^2
//!     sig_eps^2 | . ~ InvGamma(a + w n_obs/2, b + w SSE/2)
//!     sig_eta^2 | . ~ InvGamma(a + w N R/2,  b + w SSN/2)
//!     sig_s^2   | . ~ InvGamma(a + N/2,      b + sum_t s_t^2 / 2)
//! ```
//!
//! where SSE and SSN are the residual sums of squares of the observation and
//! ensemble equations.  The signal-variance update carries no weight: it is
//! the conjugate update against the latent path itself, which keeps the
//! weight-0 sampler stationary at the exact prior.  Held-out years keep
//! their ensemble terms everywhere; only the y-terms drop out, so the
//! held-out signal is sampled from its ensemble-informed conditional.
//!
//! Chains are independent and reproducible: chain c of a fit with seed q
//! consumes the counter-based stream (q, CHAIN, c), so results do not depend
//! on thread scheduling.

use crate::data::HindcastDataset;
use crate::error::{Error, Result};
use crate::model::{ModelParams, SignalPath};
use crate::moments::{moment_estimate, summarize};
use crate::prior::{InvGammaPrior, NormalPrior, PriorSpec};
use crate::rng::{domains, Philox};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write as _};
use std::path::Path;

/// Run-length and reproducibility settings for one posterior fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of independent chains (>= 2).
    pub chains: usize,
    /// Total sweeps per chain, including warmup.
    pub iterations: usize,
    /// Sweeps discarded from the start of each chain.
    pub warmup: usize,
    /// Keep every `thin`-th post-warmup sweep.
    pub thin: usize,
    /// Base seed; all chain streams derive from it.
    pub seed: u64,
    /// Convergence verdict threshold on split-Rhat.
    pub rhat_threshold: f64,
    /// Data-term weight in [0, 1]; 0 samples the prior.
    pub likelihood_weight: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 8,
            iterations: 20_000,
            warmup: 2_000,
            thin: 4,
            seed: 0,
            rhat_threshold: 1.01,
            likelihood_weight: 1.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::InvalidConfig("need at least 2 chains".into()));
        }
        if self.iterations <= self.warmup {
            return Err(Error::InvalidConfig(format!(
                "iterations ({}) must exceed warmup ({})",
                self.iterations, self.warmup
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.likelihood_weight) {
            return Err(Error::InvalidConfig(
                "likelihood weight must lie in [0, 1]".into(),
            ));
        }
        if self.rhat_threshold <= 1.0 || self.rhat_threshold.is_nan() {
            return Err(Error::InvalidConfig("rhat threshold must exceed 1".into()));
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn retained_per_chain(&self) -> usize {
        (self.iterations - self.warmup).div_ceil(self.thin)
    }
}

/// One retained MCMC draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    /// 1-based global sweep index that produced this draw.
    pub iter: u64,
    pub params: ModelParams,
    pub signal: SignalPath,
}

/// What produced a ChainSet; stored alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: SamplerConfig,
    pub prior: PriorSpec,
    pub dataset_hash: u64,
    /// Index of the year whose observation was held out, if any.
    pub holdout_year: Option<usize>,
}

/// Multi-chain posterior sample of (theta, s).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSet {
    /// draws[c][k] is the k-th retained draw of chain c.
    pub draws: Vec<Vec<Draw>>,
    pub n_years: usize,
    pub r_members: usize,
    pub provenance: Provenance,
}

impl ChainSet {
    /// Flattens all chains in chain order.
    pub fn iter_draws(&self) -> impl Iterator<Item = &Draw> {
        self.draws.iter().flatten()
    }

    pub fn total_draws(&self) -> usize {
        self.draws.iter().map(Vec::len).sum()
    }

    /// Per-chain series of one scalar function of the draw.
    pub fn extract<F: Fn(&Draw) -> f64>(&self, f: F) -> Vec<Vec<f64>> {
        self.draws
            .iter()
            .map(|chain| chain.iter().map(&f).collect())
            .collect()
    }

    /// The scalar parameter names, in the column order of the sample file.
    pub const PARAM_NAMES: [&'static str; 6] =
        ["mu_x", "mu_y", "beta", "sigma_s", "sigma_eps", "sigma_eta"];

    /// Per-chain series for one of [`Self::PARAM_NAMES`].
    pub fn param_series(&self, name: &str) -> Vec<Vec<f64>> {
        self.extract(|d| match name {
            "mu_x" => d.params.mu_x,
            "mu_y" => d.params.mu_y,
            "beta" => d.params.beta,
            "sigma_s" => d.params.sigma_s,
            "sigma_eps" => d.params.sigma_eps,
            "sigma_eta" => d.params.sigma_eta,
            other => panic!("unknown parameter {other}"),
        })
    }

    /// Writes the columnar sample file:
    /// `chain,iter,mu_x,mu_y,beta,sigma_s,sigma_eps,sigma_eta,s_1..s_N`
    /// preceded by `#` provenance comments.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "# r_members = {}", self.r_members)?;
        writeln!(f, "# dataset_hash = {}", self.provenance.dataset_hash)?;
        writeln!(f, "# seed = {}", self.provenance.config.seed)?;
        if let Some(h) = self.provenance.holdout_year {
            writeln!(f, "# holdout_year = {h}")?;
        }
        let mut header = String::from("chain,iter,mu_x,mu_y,beta,sigma_s,sigma_eps,sigma_eta");
        for t in 1..=self.n_years {
            header.push_str(&format!(",s_{t}"));
        }
        writeln!(f, "{header}")?;
        for (c, chain) in self.draws.iter().enumerate() {
            for d in chain {
                let p = &d.params;
                let mut line = format!(
                    "{},{},{},{},{},{},{},{}",
                    c + 1,
                    d.iter,
                    crate::report::f17(p.mu_x),
                    crate::report::f17(p.mu_y),
                    crate::report::f17(p.beta),
                    crate::report::f17(p.sigma_s),
                    crate::report::f17(p.sigma_eps),
                    crate::report::f17(p.sigma_eta),
                );
                for &s in &d.signal.s {
                    line.push(',');
                    line.push_str(&crate::report::f17(s));
                }
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }

    /// Reads a sample file written by [`Self::write_csv`].
    pub fn read_csv(path: &Path) -> Result<ChainSet> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut r_members = None;
        let mut dataset_hash = 0u64;
        let mut holdout_year = None;
        let mut seed = 0u64;
        let mut n_years = None;
        let mut chains: Vec<Vec<Draw>> = Vec::new();
        let mut header_seen = false;
        for (idx, line) in f.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    let (k, v) = (k.trim(), v.trim());
                    match k {
                        "r_members" => r_members = v.parse().ok(),
                        "dataset_hash" => dataset_hash = v.parse().unwrap_or(0),
                        "seed" => seed = v.parse().unwrap_or(0),
                        "holdout_year" => holdout_year = v.parse().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if !line.starts_with("chain,iter,mu_x") {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "expected sample-file header".into(),
                    });
                }
                n_years = Some(line.split(',').count() - 8);
                header_seen = true;
                continue;
            }
            let n = n_years.unwrap();
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 + n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {} fields, found {}", 8 + n, fields.len()),
                });
            }
            let mut nums = Vec::with_capacity(7 + n);
            let chain: usize = fields[0].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad chain index `{}`", fields[0]),
            })?;
            for v in &fields[1..] {
                nums.push(v.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad number `{v}`"),
                })?);
            }
            if chain == 0 {
                return Err(Error::Parse { line: lineno, msg: "chain indices are 1-based".into() });
            }
            while chains.len() < chain {
                chains.push(Vec::new());
            }
            chains[chain - 1].push(Draw {
                iter: nums[0] as u64,
                params: ModelParams {
                    mu_x: nums[1],
                    mu_y: nums[2],
                    beta: nums[3],
                    sigma_s: nums[4],
                    sigma_eps: nums[5],
                    sigma_eta: nums[6],
                },
                signal: SignalPath { s: nums[7..].to_vec() },
            });
        }
        let n_years = n_years.ok_or_else(|| Error::InvalidData("empty sample file".into()))?;
        let r_members = r_members
            .ok_or_else(|| Error::InvalidData("missing `# r_members = ...` comment".into()))?;
        if chains.is_empty() || chains.iter().any(Vec::is_empty) {
            return Err(Error::InvalidData("sample file has an empty chain".into()));
        }
        let len0 = chains[0].len();
        if chains.iter().any(|c| c.len() != len0) {
            return Err(Error::InvalidData("chains have unequal lengths".into()));
        }
        let mut config = SamplerConfig { chains: chains.len(), seed, ..SamplerConfig::default() };
        config.iterations = chains[0].last().map_or(1, |d| d.iter as usize);
        Ok(ChainSet {
            draws: chains,
            n_years,
            r_members,
            provenance: Provenance {
                config,
                prior: PriorSpec::default(),
                dataset_hash,
                holdout_year,
            },
        })
    }
}

/// Parameters of a Normal full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalCond {
    pub mean: f64,
    pub var: f64,
}

impl NormalCond {
    fn draw<G: Rng + ?Sized>(&self, rng: &mut G) -> f64 {
        self.mean + self.var.sqrt() * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Parameters of an Inverse-Gamma full conditional (on a variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaCond {
    pub shape: f64,
    pub scale: f64,
}

impl InvGammaCond {
    fn draw<G: Rng + ?Sized>(&self, rng: &mut G) -> f64 {
        let g = Gamma::new(self.shape, 1.0).expect("positive shape");
        self.scale / g.sample(rng)
    }
}

/// Observation-location conditional.  `mask[t]` marks years whose
/// observation enters the likelihood.
pub fn cond_mu_y(
    prior: &NormalPrior,
    sigma_eps: f64,
    obs: &[f64],
    s: &[f64],
    mask: &[bool],
    w: f64,
) -> NormalCond {
    let tau2 = prior.sd * prior.sd;
    let se2 = sigma_eps * sigma_eps;
    let mut sum = 0.0;
    let mut nobs = 0.0;
    for t in 0..obs.len() {
        if mask[t] {
            sum += obs[t] - s[t];
            nobs += 1.0;
        }
    }
    let prec = 1.0 / tau2 + w * nobs / se2;
    let mean = (prior.mean / tau2 + w * sum / se2) / prec;
    NormalCond { mean, var: 1.0 / prec }
}

/// Ensemble-location conditional; `rows[t]` is the row sum of the ensemble.
pub fn cond_mu_x(
    prior: &NormalPrior,
    sigma_eta: f64,
    beta: f64,
    rows: &[f64],
    s: &[f64],
    r: usize,
    w: f64,
) -> NormalCond {
    let tau2 = prior.sd * prior.sd;
    let sn2 = sigma_eta * sigma_eta;
    let rf = r as f64;
    let sum: f64 = rows
        .iter()
        .zip(s)
        .map(|(&row, &st)| row - rf * beta * st)
        .sum();
    let prec = 1.0 / tau2 + w * (rows.len() as f64) * rf / sn2;
    let mean = (prior.mean / tau2 + w * sum / sn2) / prec;
    NormalCond { mean, var: 1.0 / prec }
}

/// Signal-coupling conditional.
pub fn cond_beta(
    prior: &NormalPrior,
    sigma_eta: f64,
    mu_x: f64,
    rows: &[f64],
    s: &[f64],
    r: usize,
    w: f64,
) -> NormalCond {
    let tau2 = prior.sd * prior.sd;
    let sn2 = sigma_eta * sigma_eta;
    let rf = r as f64;
    let mut s2 = 0.0;
    let mut cross = 0.0;
    for (&row, &st) in rows.iter().zip(s) {
        s2 += st * st;
        cross += st * (row - rf * mu_x);
    }
    let prec = 1.0 / tau2 + w * rf * s2 / sn2;
    let mean = (prior.mean / tau2 + w * cross / sn2) / prec;
    NormalCond { mean, var: 1.0 / prec }
}

/// Conditional of one latent signal value.  `observed` is false for a
/// held-out year, whose ensemble still informs the signal.
#[allow(clippy::too_many_arguments)]
pub fn cond_signal_t(
    params: &ModelParams,
    y_t: f64,
    observed: bool,
    row_t: f64,
    r: usize,
    w: f64,
) -> NormalCond {
    let ss2 = params.sigma_s * params.sigma_s;
    let se2 = params.sigma_eps * params.sigma_eps;
    let sn2 = params.sigma_eta * params.sigma_eta;
    let rf = r as f64;
    let m = if observed { 1.0 } else { 0.0 };
    let prec = 1.0 / ss2 + w * m / se2 + w * rf * params.beta * params.beta / sn2;
    let mean = (w * m * (y_t - params.mu_y) / se2
        + w * params.beta * (row_t - rf * params.mu_x) / sn2)
        / prec;
    NormalCond { mean, var: 1.0 / prec }
}

/// Observation-noise variance conditional.
pub fn cond_sigma2_eps(
    prior: &InvGammaPrior,
    mu_y: f64,
    obs: &[f64],
    s: &[f64],
    mask: &[bool],
    w: f64,
) -> InvGammaCond {
    let mut sse = 0.0;
    let mut nobs = 0.0;
    for t in 0..obs.len() {
        if mask[t] {
            let e = obs[t] - mu_y - s[t];
            sse += e * e;
            nobs += 1.0;
        }
    }
    InvGammaCond { shape: prior.shape + w * nobs / 2.0, scale: prior.scale + w * sse / 2.0 }
}

/// Ensemble-noise variance conditional; needs row sums and row sums of
/// squares of the ensemble.
#[allow(clippy::too_many_arguments)]
pub fn cond_sigma2_eta(
    prior: &InvGammaPrior,
    mu_x: f64,
    beta: f64,
    rows: &[f64],
    sumsq: &[f64],
    s: &[f64],
    r: usize,
    w: f64,
) -> InvGammaCond {
    let rf = r as f64;
    let mut ssn = 0.0;
    for t in 0..rows.len() {
        let c = mu_x + beta * s[t];
        ssn += sumsq[t] - 2.0 * c * rows[t] + rf * c * c;
    }
    InvGammaCond {
        shape: prior.shape + w * (rows.len() as f64) * rf / 2.0,
        scale: prior.scale + w * ssn / 2.0,
    }
}

/// Signal-variance conditional — the conjugate update against the latent
/// path, never weighted.
pub fn cond_sigma2_s(prior: &InvGammaPrior, s: &[f64]) -> InvGammaCond {
    let ss: f64 = s.iter().map(|v| v * v).sum();
    InvGammaCond { shape: prior.shape + s.len() as f64 / 2.0, scale: prior.scale + ss / 2.0 }
}

/// Precomputed per-year ensemble reductions.
struct EnsembleCache {
    rows: Vec<f64>,
    sumsq: Vec<f64>,
}

impl EnsembleCache {
    fn new(data: &HindcastDataset) -> Self {
        let rows = data.ens.iter().map(|row| row.iter().sum()).collect();
        let sumsq = data
            .ens
            .iter()
            .map(|row| row.iter().map(|x| x * x).sum())
            .collect();
        Self { rows, sumsq }
    }
}

/// One full Gibbs sweep, mutating the state in place.
fn sweep<G: Rng + ?Sized>(
    data: &HindcastDataset,
    prior: &PriorSpec,
    cache: &EnsembleCache,
    mask: &[bool],
    w: f64,
    params: &mut ModelParams,
    s: &mut [f64],
    rng: &mut G,
) {
    let r = data.r_members();
    params.mu_y = cond_mu_y(&prior.mu_y, params.sigma_eps, &data.obs, s, mask, w).draw(rng);
    params.mu_x =
        cond_mu_x(&prior.mu_x, params.sigma_eta, params.beta, &cache.rows, s, r, w).draw(rng);
    params.beta =
        cond_beta(&prior.beta, params.sigma_eta, params.mu_x, &cache.rows, s, r, w).draw(rng);
    for t in 0..s.len() {
        s[t] = cond_signal_t(params, data.obs[t], mask[t], cache.rows[t], r, w).draw(rng);
    }
    params.sigma_eps =
        cond_sigma2_eps(&prior.sigma2_eps, params.mu_y, &data.obs, s, mask, w)
            .draw(rng)
            .sqrt();
    params.sigma_eta = cond_sigma2_eta(
        &prior.sigma2_eta,
        params.mu_x,
        params.beta,
        &cache.rows,
        &cache.sumsq,
        s,
        r,
        w,
    )
    .draw(rng)
    .sqrt();
    params.sigma_s = cond_sigma2_s(&prior.sigma2_s, s).draw(rng).sqrt();
}

/// Overdispersed chain start: moment estimates jittered multiplicatively on
/// the scales and by scale-matched offsets on the locations, falling back to
/// prior medians when the estimating equations were clamped.  All jitter
/// terms commute with affine rescaling of the data, preserving the
/// sampler's exact scale equivariance.
fn initial_state<G: Rng + ?Sized>(
    data: &HindcastDataset,
    prior: &PriorSpec,
    mask: &[bool],
    rng: &mut G,
) -> ModelParams {
    let masked: Vec<usize> = (0..data.n_years()).filter(|&t| mask[t]).collect();
    let base = if masked.len() >= 3 {
        let sub = HindcastDataset {
            years: masked.iter().map(|&t| data.years[t]).collect(),
            obs: masked.iter().map(|&t| data.obs[t]).collect(),
            ens: masked.iter().map(|&t| data.ens[t].clone()).collect(),
        };
        match moment_estimate(&summarize(&sub), data.r_members()) {
            Ok((p, flags)) if !flags.any() => p,
            _ => prior.median_params(),
        }
    } else {
        prior.median_params()
    };
    let z: [f64; 6] = std::array::from_fn(|_| rng.sample(StandardNormal));
    ModelParams {
        mu_x: base.mu_x + 0.5 * base.sigma_eta * z[0],
        mu_y: base.mu_y + 0.5 * base.sigma_eps * z[1],
        beta: base.beta + 0.25 * (1.0 + base.beta.abs()) * z[2],
        sigma_s: base.sigma_s * (1.0 + 0.2 * z[3].tanh()),
        sigma_eps: base.sigma_eps * (1.0 + 0.2 * z[4].tanh()),
        sigma_eta: base.sigma_eta * (1.0 + 0.2 * z[5].tanh()),
    }
}

fn run_chains(
    data: &HindcastDataset,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    mask: &[bool],
    chain_domain: u64,
    index_base: u64,
    holdout_year: Option<usize>,
) -> Result<ChainSet> {
    cfg.validate()?;
    prior.validate()?;
    if data.n_years() == 0 || data.r_members() == 0 {
        return Err(Error::InvalidData("empty dataset".into()));
    }
    if mask.len() != data.n_years() {
        return Err(Error::DimensionMismatch("mask length != years".into()));
    }
    let cache = EnsembleCache::new(data);
    let w = cfg.likelihood_weight;
    let draws: Vec<Vec<Draw>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut init_rng = Philox::substream(cfg.seed, domains::INIT, index_base + c as u64);
            let mut params = initial_state(data, prior, mask, &mut init_rng);
            let mut s = vec![0.0; data.n_years()];
            let mut rng = Philox::substream(cfg.seed, chain_domain, index_base + c as u64);
            let mut kept = Vec::with_capacity(cfg.retained_per_chain());
            for i in 1..=cfg.iterations {
                sweep(data, prior, &cache, mask, w, &mut params, &mut s, &mut rng);
                if i > cfg.warmup && (i - cfg.warmup - 1).is_multiple_of(cfg.thin) {
                    kept.push(Draw {
                        iter: i as u64,
                        params,
                        signal: SignalPath { s: s.clone() },
                    });
                }
            }
            kept
        })
        .collect();
    Ok(ChainSet {
        draws,
        n_years: data.n_years(),
        r_members: data.r_members(),
        provenance: Provenance {
            config: *cfg,
            prior: *prior,
            dataset_hash: data.content_hash(),
            holdout_year,
        },
    })
}

/// Samples the joint posterior of (theta, s) on the full dataset.
pub fn sample_posterior(
    data: &HindcastDataset,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
) -> Result<ChainSet> {
    let mask = vec![true; data.n_years()];
    run_chains(data, prior, cfg, &mask, domains::CHAIN, 0, None)
}

/// Samples the posterior with year `holdout`'s observation removed from the
/// likelihood while its ensemble stays in.  The held-out signal draw then
/// feeds the posterior predictive for that year.  Chain streams derive from
/// the holdout index, so all leave-one-out refits of a run are mutually
/// independent and individually reproducible.
pub fn sample_posterior_loo(
    data: &HindcastDataset,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    holdout: usize,
) -> Result<ChainSet> {
    if holdout >= data.n_years() {
        return Err(Error::InvalidConfig(format!(
            "holdout year index {holdout} out of range (N = {})",
            data.n_years()
        )));
    }
    let mut mask = vec![true; data.n_years()];
    mask[holdout] = false;
    let base = ((holdout as u64) + 1) << 32;
    run_chains(data, prior, cfg, &mask, domains::LOO_CHAIN, base, Some(holdout))
}
