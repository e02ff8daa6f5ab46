//! Convergence diagnostics: split potential-scale-reduction factors and
//! effective sample sizes.
//!
//! Each chain is halved before the between/within comparison, so slow
//! within-chain trends register as disagreement between half-chains.  The
//! effective sample size combines the split chains' autocovariances and
//! truncates the autocorrelation sum by Geyer's initial monotone positive
//! sequence.

use crate::error::{Error, Result};
use crate::gibbs::ChainSet;
use serde::{Deserialize, Serialize};

/// Convergence verdict over all parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    PassWithWarnings,
    Fail,
}

/// Diagnostics for one scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostic {
    pub name: String,
    pub rhat: f64,
    pub ess: f64,
}

/// Full diagnostics report for a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub params: Vec<ParamDiagnostic>,
    pub verdict: Verdict,
    pub threshold: f64,
    pub warnings: Vec<String>,
}

impl DiagnosticsReport {
    pub fn max_rhat(&self) -> f64 {
        self.params.iter().map(|p| p.rhat).fold(1.0, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.params.iter().map(|p| p.ess).fold(f64::INFINITY, f64::min)
    }
}

/// Splits each chain into halves (dropping the middle element of odd-length
/// chains) and returns the halves as separate chains.
fn split_chains(series: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut out = Vec::with_capacity(series.len() * 2);
    for chain in series {
        let half = chain.len() / 2;
        out.push(&chain[..half]);
        out.push(&chain[chain.len() - half..]);
    }
    out
}

struct VarianceDecomposition {
    w: f64,
    var_plus: f64,
    means: Vec<f64>,
    len: usize,
}

fn decompose(halves: &[&[f64]]) -> VarianceDecomposition {
    let m = halves.len() as f64;
    let len = halves[0].len();
    let lf = len as f64;
    let means: Vec<f64> = halves
        .iter()
        .map(|h| h.iter().sum::<f64>() / lf)
        .collect();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, &mu)| h.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (lf - 1.0))
        .sum::<f64>()
        / m;
    let grand = means.iter().sum::<f64>() / m;
    let b = lf * means.iter().map(|&mu| (mu - grand) * (mu - grand)).sum::<f64>() / (m - 1.0);
    let var_plus = (lf - 1.0) / lf * w + b / lf;
    VarianceDecomposition { w, var_plus, means, len }
}

/// Split potential-scale-reduction factor of one scalar's per-chain series.
/// Returns `None` when every value is identical (nothing to diagnose);
/// chains that are internally constant but disagree with each other give
/// infinity, which correctly fails any threshold.
pub fn split_rhat(series: &[Vec<f64>]) -> Option<f64> {
    let halves = split_chains(series);
    let d = decompose(&halves);
    if d.var_plus <= 0.0 {
        return None;
    }
    Some((d.var_plus / d.w).sqrt())
}

/// Effective sample size of one scalar's per-chain series, following the
/// split-chain combined-autocorrelation estimator.  Returns `None` for
/// degenerate series; the result is capped at the total number of samples.
pub fn ess(series: &[Vec<f64>]) -> Option<f64> {
    let halves = split_chains(series);
    let d = decompose(&halves);
    if d.var_plus <= 0.0 {
        return None;
    }
    let len = d.len;
    let m = halves.len();
    let total = (m * len) as f64;
    // lag-t autocovariance averaged over chains, 1/len divisor
    let acov = |t: usize| -> f64 {
        halves
            .iter()
            .zip(&d.means)
            .map(|(h, &mu)| {
                (0..len - t)
                    .map(|i| (h[i] - mu) * (h[i + t] - mu))
                    .sum::<f64>()
                    / len as f64
            })
            .sum::<f64>()
            / m as f64
    };
    let rho = |t: usize| 1.0 - (d.w - acov(t)) / d.var_plus;
    // Geyer initial monotone positive sequence over lag pairs
    let mut tau = 1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 1;
    while t + 1 < len {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }
    Some((total / tau).min(total))
}

/// Computes split-Rhat and ESS for the six model parameters and renders the
/// verdict: `Fail` if any Rhat exceeds the configured threshold,
/// `PassWithWarnings` when a parameter was degenerate (zero variance).
pub fn diagnostics(chains: &ChainSet) -> Result<DiagnosticsReport> {
    if chains.draws.len() < 2 {
        return Err(Error::InvalidConfig(
            "diagnostics need at least 2 chains".into(),
        ));
    }
    if chains.draws.iter().any(|c| c.len() < 10) {
        return Err(Error::InvalidConfig(
            "diagnostics need at least 10 retained samples per chain".into(),
        ));
    }
    let threshold = chains.provenance.config.rhat_threshold;
    let mut params = Vec::new();
    let mut warnings = Vec::new();
    let total: usize = chains.total_draws();
    for name in ChainSet::PARAM_NAMES {
        let series = chains.param_series(name);
        let (rhat, ess_v) = match (split_rhat(&series), ess(&series)) {
            (Some(r), Some(e)) => (r, e),
            _ => {
                warnings.push(format!(
                    "parameter {name} has zero variance; Rhat undefined, treated as 1"
                ));
                (1.0, total as f64)
            }
        };
        params.push(ParamDiagnostic { name: name.to_string(), rhat, ess: ess_v });
    }
    let verdict = if params.iter().any(|p| p.rhat > threshold) {
        Verdict::Fail
    } else if warnings.is_empty() {
        Verdict::Pass
    } else {
        Verdict::PassWithWarnings
    };
    Ok(DiagnosticsReport { params, verdict, threshold, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{domains, Philox};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn white_noise(chains: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..chains)
            .map(|c| {
                let mut g = Philox::substream(seed, domains::CHAIN, c as u64);
                (0..len).map(|_| g.sample(StandardNormal)).collect()
            })
            .collect()
    }

    #[test]
    fn white_noise_is_converged_with_full_ess() {
        let series = white_noise(4, 10_000, 1);
        let r = split_rhat(&series).unwrap();
        assert!((0.99..1.01).contains(&r), "rhat = {r}");
        let e = ess(&series).unwrap();
        let total = 40_000.0;
        assert!(e > 0.8 * total && e <= total, "ess = {e}");
    }

    #[test]
    fn offset_chain_fails() {
        let mut series = white_noise(4, 2_000, 2);
        for v in &mut series[3] {
            *v += 10.0;
        }
        let r = split_rhat(&series).unwrap();
        assert!(r > 1.5, "rhat = {r}");
    }

    #[test]
    fn within_chain_trend_is_detected_by_splitting() {
        // each chain drifts linearly; plain between-chain comparison would
        // miss it, split-Rhat must not
        let series: Vec<Vec<f64>> = white_noise(4, 4_000, 3)
            .into_iter()
            .map(|chain| {
                chain
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v + 4.0 * i as f64 / 4_000.0)
                    .collect()
            })
            .collect();
        let r = split_rhat(&series).unwrap();
        assert!(r > 1.1, "rhat = {r}");
    }

    #[test]
    fn ar1_ess_matches_theory() {
        // ESS/total for AR(1) with coefficient phi is (1-phi)/(1+phi)
        let phi: f64 = 0.9;
        let series: Vec<Vec<f64>> = (0..4u64)
            .map(|c| {
                let mut g = Philox::substream(40, domains::CHAIN, c);
                let mut x = 0.0;
                (0..20_000)
                    .map(|_| {
                        x = phi * x
                            + (1.0 - phi * phi).sqrt() * g.sample::<f64, _>(StandardNormal);
                        x
                    })
                    .collect()
            })
            .collect();
        let e = ess(&series).unwrap();
        let expect = 80_000.0 * (1.0 - phi) / (1.0 + phi);
        assert!(
            (e - expect).abs() < 0.3 * expect,
            "ess = {e}, theory = {expect}"
        );
    }

    #[test]
    fn degenerate_series_yield_none() {
        let series = vec![vec![2.0; 100], vec![2.0; 100]];
        assert!(split_rhat(&series).is_none());
        assert!(ess(&series).is_none());
    }

    #[test]
    fn report_on_real_chains() {
        use crate::gibbs::{sample_posterior, SamplerConfig};
        use crate::prior::PriorSpec;
        let p = crate::model::ModelParams {
            mu_x: 20.0,
            mu_y: 20.0,
            beta: 0.5,
            sigma_s: 6.0,
            sigma_eps: 4.0,
            sigma_eta: 7.0,
        };
        let mut g = Philox::substream(8, domains::NEW_PERIOD, 40);
        let (data, _) = p.simulate(20, 10, &mut g);
        let cfg = SamplerConfig {
            chains: 4,
            iterations: 3_000,
            warmup: 500,
            thin: 1,
            seed: 3,
            ..SamplerConfig::default()
        };
        let chains = sample_posterior(&data, &PriorSpec::default(), &cfg).unwrap();
        let rep = diagnostics(&chains).unwrap();
        assert_eq!(rep.params.len(), 6);
        assert!(rep.max_rhat() < 1.05, "max rhat {}", rep.max_rhat());
        assert!(rep.min_ess() > 200.0, "min ess {}", rep.min_ess());
        assert_ne!(rep.verdict, Verdict::Fail);
    }

    #[test]
    fn constant_chains_pass_with_warning() {
        use crate::gibbs::{ChainSet, Draw, Provenance, SamplerConfig};
        use crate::model::{ModelParams, SignalPath};
        use crate::prior::PriorSpec;
        let p = ModelParams { mu_x: 1.0, mu_y: 1.0, beta: 1.0, sigma_s: 1.0, sigma_eps: 1.0, sigma_eta: 1.0 };
        let chain: Vec<Draw> = (0..20)
            .map(|i| Draw { iter: i + 1, params: p, signal: SignalPath { s: vec![0.0] } })
            .collect();
        let chains = ChainSet {
            draws: vec![chain.clone(), chain],
            n_years: 1,
            r_members: 2,
            provenance: Provenance {
                config: SamplerConfig::default(),
                prior: PriorSpec::default(),
                dataset_hash: 0,
                holdout_year: None,
            },
        };
        let rep = diagnostics(&chains).unwrap();
        assert_eq!(rep.verdict, Verdict::PassWithWarnings);
        assert!(!rep.warnings.is_empty());
    }

    #[test]
    fn too_few_samples_is_an_error() {
        use crate::gibbs::{ChainSet, Draw, Provenance, SamplerConfig};
        use crate::model::{ModelParams, SignalPath};
        use crate::prior::PriorSpec;
        let p = ModelParams { mu_x: 0.0, mu_y: 0.0, beta: 1.0, sigma_s: 1.0, sigma_eps: 1.0, sigma_eta: 1.0 };
        let chain: Vec<Draw> = (0..5)
            .map(|i| Draw { iter: i + 1, params: p, signal: SignalPath { s: vec![] } })
            .collect();
        let chains = ChainSet {
            draws: vec![chain.clone(), chain],
            n_years: 0,
            r_members: 2,
            provenance: Provenance {
                config: SamplerConfig::default(),
                prior: PriorSpec::default(),
                dataset_hash: 0,
                holdout_year: None,
            },
        };
        assert!(diagnostics(&chains).is_err());
    }
}
