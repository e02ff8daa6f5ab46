//! Command-line surface: one subcommand per analysis, shared sampler and
//! prior option groups, and a global output-directory flag.
//!
//! Every subcommand that draws random numbers takes a mandatory `--seed`;
//! rerunning with identical inputs and seed reproduces every output file
//! byte for byte.

use clap::{Args, Parser, Subcommand, ValueEnum};
use signoise::gibbs::SamplerConfig;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "signoise",
    version,
    about = "Bayesian signal-plus-noise analysis of ensemble hindcast skill",
    after_help = "Artifacts are written to --out, else $SIGNOISE_OUT, else the working directory.\n\
                  Exit codes: 0 success, 2 invalid input or configuration, 3 convergence failure."
)]
pub struct Cli {
    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics, closed-form estimates, and plug-in skill diagnostics.
    Moments(MomentsArgs),
    /// Fit the six-parameter model by Gibbs sampling.
    Fit(FitArgs),
    /// Correlation skill for the three verification questions, plus decision probabilities.
    Verify(VerifyArgs),
    /// Posterior signal-to-noise ratios and predictable-component diagnostics.
    Snr(SnrArgs),
    /// Leave-one-out predictive evaluation scored by Ignorance.
    Predict(PredictArgs),
    /// Simulated correlation skill across alternative (years x members) designs.
    Design(DesignArgs),
    /// Prior predictive distribution of the skill diagnostics.
    PriorCheck(PriorCheckArgs),
    /// Posterior robustness across alternative signal-variance priors.
    Sensitivity(SensitivityArgs),
    /// Exchangeability check: each ensemble member takes the observations' place in turn.
    PerfectModel(PerfectModelArgs),
    /// Generate a synthetic hindcast matching target summary statistics.
    Surrogate(SurrogateArgs),
}

/// Gibbs sampler settings shared by every command that fits the model.
/// Defaults mirror [`SamplerConfig::default`].
#[derive(Debug, Args)]
pub struct SamplerOpts {
    /// Independent chains.
    #[arg(long, default_value_t = 8)]
    pub chains: usize,

    /// Total sweeps per chain, including warmup.
    #[arg(long, default_value_t = 20_000)]
    pub iterations: usize,

    /// Warmup sweeps discarded from the start of each chain.
    #[arg(long, default_value_t = 2_000)]
    pub warmup: usize,

    /// Keep every thin-th post-warmup sweep.
    #[arg(long, default_value_t = 4)]
    pub thin: usize,
}

impl SamplerOpts {
    pub fn config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            iterations: self.iterations,
            warmup: self.warmup,
            thin: self.thin,
            seed,
            ..SamplerConfig::default()
        }
    }
}

/// Optional prior override, as a JSON file holding a full prior
/// specification (the same shape `fit` records in its provenance).
#[derive(Debug, Args)]
pub struct PriorOpt {
    /// JSON file replacing the default conjugate prior.
    #[arg(long, value_name = "FILE")]
    pub prior: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Hindcast CSV: header `year,obs,m1..mR`, one row per year.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Hindcast CSV to fit.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,

    /// Base seed; every chain stream derives from it.
    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub sampler: SamplerOpts,

    #[command(flatten)]
    pub prior: PriorOpt,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Sample file written by `fit`.
    #[arg(long, value_name = "FILE")]
    pub samples: PathBuf,

    /// The dataset the samples were fitted to (checked against the sample
    /// file's provenance hash).
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,

    /// Seed for the simulated replica ensembles.
    #[arg(long)]
    pub seed: u64,

    /// Years in the hypothetical new period (default: as observed).
    #[arg(long, value_name = "N")]
    pub new_years: Option<usize>,

    /// Members per year in the new period (default: as observed).
    #[arg(long, value_name = "R")]
    pub new_members: Option<usize>,

    /// Threshold (hPa) for the reported Pr(bias > threshold).
    #[arg(long, default_value_t = 2.0)]
    pub bias_threshold: f64,
}

#[derive(Debug, Args)]
pub struct SnrArgs {
    /// Sample file written by `fit`.
    #[arg(long, value_name = "FILE")]
    pub samples: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Hindcast CSV; each year is refitted with its observation held out.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,

    /// Base seed for the leave-one-out refits.
    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub sampler: SamplerOpts,

    #[command(flatten)]
    pub prior: PriorOpt,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Sample file written by `fit`; designs are simulated from its draws.
    #[arg(long, value_name = "FILE")]
    pub samples: PathBuf,

    /// Seed for the design simulations.
    #[arg(long)]
    pub seed: u64,

    /// Simulated hindcasts per design.
    #[arg(long, default_value_t = 100_000)]
    pub draws_per_point: usize,

    /// Also write every simulated correlation (long CSV, one row per draw).
    #[arg(long)]
    pub raw_draws: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Conjugate Normal / inverse-gamma defaults.
    Default,
    /// Uniform noise scales and slope (exploration only; not fittable).
    Uniform,
}

#[derive(Debug, Args)]
pub struct PriorCheckArgs {
    /// Prior preset to sample.
    #[arg(long, value_enum, default_value = "default")]
    pub preset: Preset,

    /// Ensemble size entering the derived diagnostics.
    #[arg(long, default_value_t = 24)]
    pub members: usize,

    /// Monte-Carlo draws from the prior.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,

    /// Seed for the prior draws.
    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub prior: PriorOpt,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Hindcast CSV; refitted once per prior variant.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,

    /// Base seed; each variant derives its own prior and sampler streams.
    #[arg(long)]
    pub seed: u64,

    /// Monte-Carlo draws from each variant's prior.
    #[arg(long, default_value_t = 100_000)]
    pub prior_draws: usize,

    #[command(flatten)]
    pub sampler: SamplerOpts,
}

#[derive(Debug, Args)]
pub struct PerfectModelArgs {
    /// Hindcast CSV supplying the ensemble.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,

    /// Base seed for the refits.
    #[arg(long)]
    pub seed: u64,

    /// Check a single member (0-based column) instead of all of them.
    #[arg(long, value_name = "K")]
    pub member: Option<usize>,

    #[command(flatten)]
    pub sampler: SamplerOpts,

    #[command(flatten)]
    pub prior: PriorOpt,
}

#[derive(Debug, Args)]
pub struct SurrogateArgs {
    /// Seed for the raw draws behind the moment-matching construction.
    #[arg(long)]
    pub seed: u64,

    /// JSON file with target statistics (default: the bundled
    /// winter-hindcast reference targets).
    #[arg(long, value_name = "FILE")]
    pub targets: Option<PathBuf>,

    /// Override the number of years in the targets.
    #[arg(long, value_name = "N")]
    pub years: Option<usize>,

    /// Override the ensemble size in the targets.
    #[arg(long, value_name = "R")]
    pub members: Option<usize>,

    /// Dataset file name inside the output directory.
    #[arg(long, default_value = "surrogate.csv")]
    pub file: String,
}
