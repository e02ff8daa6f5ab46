//! Subcommand implementations.  Each loads its inputs, runs one library
//! analysis, writes a versioned JSON summary plus plot-ready CSV files into
//! the output directory, and prints a short digest to stdout.  Convergence
//! failures are reported via exit code 3 after all artifacts are written.

use crate::cli::{
    Cli, Command, DesignArgs, FitArgs, MomentsArgs, PerfectModelArgs, PredictArgs, Preset,
    PriorCheckArgs, PriorOpt, SensitivityArgs, SnrArgs, SurrogateArgs, VerifyArgs,
};
use crate::output::OutDir;
use serde::Serialize;
use signoise::data::HindcastDataset;
use signoise::design::{design_sweep, DesignGrid, DesignSummary};
use signoise::diagnostics::{diagnostics, DiagnosticsReport, Verdict};
use signoise::error::{Error, Result};
use signoise::gibbs::{sample_posterior, ChainSet, SamplerConfig};
use signoise::model::{DerivedDiagnostics, ModelParams};
use signoise::moments::{summarize, moment_estimate, MomentFlags, SummaryStats};
use signoise::prediction::{loo_evaluate, LooEvaluation, MethodScores};
use signoise::prior::{prior_predictive, PriorModel, PriorSpec, UniformPrior};
use signoise::report::{self, BoxSummary, SCHEMA_VERSION};
use signoise::sensitivity::{sensitivity_scan, spread_of_means, standard_variants, VariantSummary};
use signoise::stats;
use signoise::surrogate::SurrogateSpec;
use signoise::verification::{
    correlation_fixed_obs, correlation_new_period, correlation_population, perfect_model_check,
    probability_report, CorrelationAnalysis, PerfectModelReport, ProbabilityReport,
};
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;

pub fn run(cli: Cli) -> Result<ExitCode> {
    let out = OutDir::acquire(cli.out)?;
    match &cli.command {
        Command::Moments(a) => moments_cmd(&out, a),
        Command::Fit(a) => fit_cmd(&out, a),
        Command::Verify(a) => verify_cmd(&out, a),
        Command::Snr(a) => snr_cmd(&out, a),
        Command::Predict(a) => predict_cmd(&out, a),
        Command::Design(a) => design_cmd(&out, a),
        Command::PriorCheck(a) => prior_check_cmd(&out, a),
        Command::Sensitivity(a) => sensitivity_cmd(&out, a),
        Command::PerfectModel(a) => perfect_model_cmd(&out, a),
        Command::Surrogate(a) => surrogate_cmd(&out, a),
    }
}

/// Identification of the dataset a summary refers to.
#[derive(Serialize)]
struct DatasetInfo {
    path: String,
    n_years: usize,
    r_members: usize,
    content_hash: u64,
}

impl DatasetInfo {
    fn new(path: &Path, data: &HindcastDataset) -> Self {
        Self {
            path: path.display().to_string(),
            n_years: data.n_years(),
            r_members: data.r_members(),
            content_hash: data.content_hash(),
        }
    }
}

fn load_prior(opt: &PriorOpt) -> Result<PriorSpec> {
    match &opt.prior {
        None => Ok(PriorSpec::default()),
        Some(path) => {
            let spec: PriorSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            spec.validate()?;
            Ok(spec)
        }
    }
}

/// Distribution summary of one scalar's Monte-Carlo sample.  Non-finite
/// draws (undefined diagnostics at degenerate parameter values) are dropped
/// and counted.
#[derive(Serialize)]
struct ScalarSummary {
    name: String,
    mean: f64,
    sd: f64,
    median: f64,
    interval95: (f64, f64),
    excess_kurtosis: f64,
    skipped: usize,
}

impl ScalarSummary {
    fn new(name: &str, raw: &[f64]) -> Result<Self> {
        let finite: Vec<f64> = raw.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.len() < 2 {
            return Err(Error::Estimation(format!(
                "fewer than 2 finite draws of {name}"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            mean: stats::mean(&finite),
            sd: stats::sd(&finite),
            median: stats::quantiles(&finite, &[0.5])[0],
            interval95: stats::interval95(&finite),
            excess_kurtosis: stats::excess_kurtosis(&finite),
            skipped: raw.len() - finite.len(),
        })
    }
}

fn finite(raw: &[f64]) -> Vec<f64> {
    raw.iter().copied().filter(|v| v.is_finite()).collect()
}

fn flat_param(chains: &ChainSet, name: &str) -> Vec<f64> {
    chains.param_series(name).into_iter().flatten().collect()
}

// ---------------------------------------------------------------- moments

fn moments_cmd(out: &OutDir, a: &MomentsArgs) -> Result<ExitCode> {
    let data = HindcastDataset::from_csv_path(&a.data)?;
    let summary = summarize(&data);
    let (est, flags) = moment_estimate(&summary, data.r_members())?;
    let derived = est.derived_diagnostics(data.r_members());

    #[derive(Serialize)]
    struct MomentsSummary {
        schema_version: u32,
        command: &'static str,
        dataset: DatasetInfo,
        statistics: SummaryStats,
        estimates: ModelParams,
        variances: Variances,
        flags: MomentFlags,
        derived: DerivedDiagnostics,
    }
    #[derive(Serialize)]
    struct Variances {
        sigma2_s: f64,
        sigma2_eps: f64,
        sigma2_eta: f64,
    }

    let payload = MomentsSummary {
        schema_version: SCHEMA_VERSION,
        command: "moments",
        dataset: DatasetInfo::new(&a.data, &data),
        statistics: summary,
        estimates: est,
        variances: Variances {
            sigma2_s: est.sigma_s * est.sigma_s,
            sigma2_eps: est.sigma_eps * est.sigma_eps,
            sigma2_eta: est.sigma_eta * est.sigma_eta,
        },
        flags,
        derived,
    };
    report::write_json(&out.file("moments.json"), &payload)?;

    let mut f = std::fs::File::create(out.file("moments.csv"))?;
    writeln!(f, "year,obs,ensemble_mean")?;
    for (t, m) in data.ensemble_means().iter().enumerate() {
        writeln!(f, "{},{},{}", data.years[t], report::f17(data.obs[t]), report::f17(*m))?;
    }

    println!("dataset: {} years x {} members", data.n_years(), data.r_members());
    for (name, v) in [
        ("mu_x", est.mu_x),
        ("mu_y", est.mu_y),
        ("beta", est.beta),
        ("sigma2_s", est.sigma_s * est.sigma_s),
        ("sigma2_eps", est.sigma_eps * est.sigma_eps),
        ("sigma2_eta", est.sigma_eta * est.sigma_eta),
    ] {
        println!("{name:<12} {v:>10.4}");
    }
    for (name, v) in [
        ("snr_obs", derived.snr_obs),
        ("snr_mod", derived.snr_mod),
        ("rho", derived.rho),
        ("rpc", derived.rpc),
    ] {
        println!("{name:<12} {v:>10.4}");
    }
    if flags.any() {
        println!("warning: one or more estimating equations were clamped");
    }
    Ok(ExitCode::SUCCESS)
}

// -------------------------------------------------------------------- fit

fn fit_cmd(out: &OutDir, a: &FitArgs) -> Result<ExitCode> {
    let data = HindcastDataset::from_csv_path(&a.data)?;
    let prior = load_prior(&a.prior)?;
    let cfg = a.sampler.config(a.seed);
    let chains = sample_posterior(&data, &prior, &cfg)?;
    chains.write_csv(&out.file("samples.csv"))?;

    let rep = diagnostics(&chains)?;
    #[derive(Serialize)]
    struct DiagnosticsSummary {
        schema_version: u32,
        command: &'static str,
        report: DiagnosticsReport,
    }
    report::write_json(
        &out.file("diagnostics.json"),
        &DiagnosticsSummary { schema_version: SCHEMA_VERSION, command: "fit", report: rep.clone() },
    )?;

    let mut parameters = Vec::new();
    let mut boxes = Vec::new();
    for name in ChainSet::PARAM_NAMES {
        let values = flat_param(&chains, name);
        parameters.push(ScalarSummary::new(name, &values)?);
        boxes.push(BoxSummary::from_samples(name, &values));
    }
    report::write_box_csv(&out.file("posterior_params.csv"), &boxes)?;

    #[derive(Serialize)]
    struct FitSummary {
        schema_version: u32,
        command: &'static str,
        dataset: DatasetInfo,
        seed: u64,
        config: SamplerConfig,
        retained_draws: usize,
        parameters: Vec<ScalarSummary>,
        max_rhat: f64,
        min_ess: f64,
        verdict: Verdict,
    }
    report::write_json(
        &out.file("fit.json"),
        &FitSummary {
            schema_version: SCHEMA_VERSION,
            command: "fit",
            dataset: DatasetInfo::new(&a.data, &data),
            seed: a.seed,
            config: cfg,
            retained_draws: chains.total_draws(),
            parameters,
            max_rhat: rep.max_rhat(),
            min_ess: rep.min_ess(),
            verdict: rep.verdict,
        },
    )?;

    println!("{:<12} {:>10} {:>10} {:>10} {:>10}", "parameter", "mean", "sd", "2.5%", "97.5%");
    for name in ChainSet::PARAM_NAMES {
        let values = flat_param(&chains, name);
        let s = ScalarSummary::new(name, &values)?;
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            s.name, s.mean, s.sd, s.interval95.0, s.interval95.1
        );
    }
    println!(
        "max split-Rhat {:.4} | min ESS {:.0} | verdict {:?}",
        rep.max_rhat(),
        rep.min_ess(),
        rep.verdict
    );
    if rep.verdict == Verdict::Fail {
        eprintln!(
            "convergence failure: max split-Rhat {:.4} exceeds {:.3}",
            rep.max_rhat(),
            cfg.rhat_threshold
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------------- verify

fn verify_cmd(out: &OutDir, a: &VerifyArgs) -> Result<ExitCode> {
    let chains = ChainSet::read_csv(&a.samples)?;
    let data = HindcastDataset::from_csv_path(&a.data)?;
    let new_years = a.new_years.unwrap_or_else(|| data.n_years());
    let new_members = a.new_members.unwrap_or_else(|| data.r_members());

    let population = correlation_population(&chains)?;
    let fixed_obs = correlation_fixed_obs(&chains, &data, a.seed)?;
    let new_period = correlation_new_period(&chains, new_years, new_members, a.seed)?;
    let probabilities = probability_report(&chains, a.bias_threshold)?;

    #[derive(Serialize)]
    struct VerifySummary {
        schema_version: u32,
        command: &'static str,
        dataset: DatasetInfo,
        seed: u64,
        new_years: usize,
        new_members: usize,
        population: CorrelationAnalysis,
        fixed_obs: CorrelationAnalysis,
        new_period: CorrelationAnalysis,
        probabilities: ProbabilityReport,
    }
    report::write_json(
        &out.file("verify.json"),
        &VerifySummary {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            dataset: DatasetInfo::new(&a.data, &data),
            seed: a.seed,
            new_years,
            new_members,
            population: population.clone(),
            fixed_obs: fixed_obs.clone(),
            new_period: new_period.clone(),
            probabilities: probabilities.clone(),
        },
    )?;

    report::write_density_csv(&out.file("rho_population_density.csv"), "rho", &population.samples)?;
    report::write_density_csv(&out.file("rho_fixed_obs_density.csv"), "rho", &fixed_obs.samples)?;
    report::write_density_csv(&out.file("rho_new_period_density.csv"), "rho", &new_period.samples)?;
    report::write_box_csv(
        &out.file("correlation_box.csv"),
        &[
            BoxSummary::from_samples("population", &population.samples),
            BoxSummary::from_samples("fixed_obs", &fixed_obs.samples),
            BoxSummary::from_samples("new_period", &new_period.samples),
        ],
    )?;

    println!("{:<12} {:>8} {:>8} {:>9} {:>9}", "question", "mean", "sd", "2.5%", "97.5%");
    for (name, an) in [
        ("population", &population),
        ("fixed_obs", &fixed_obs),
        ("new_period", &new_period),
    ] {
        println!(
            "{:<12} {:>8.3} {:>8.3} {:>9.3} {:>9.3}",
            name, an.mean, an.sd, an.interval95.0, an.interval95.1
        );
    }
    for e in &probabilities.events {
        println!("Pr({}) = {:.3} (mc se {:.4})", e.name, e.probability, e.mc_se);
    }
    Ok(ExitCode::SUCCESS)
}

// -------------------------------------------------------------------- snr

fn snr_cmd(out: &OutDir, a: &SnrArgs) -> Result<ExitCode> {
    let chains = ChainSet::read_csv(&a.samples)?;
    let r = chains.r_members;
    let derived: Vec<DerivedDiagnostics> =
        chains.iter_draws().map(|d| d.params.derived_diagnostics(r)).collect();

    let fields: [(&str, fn(&DerivedDiagnostics) -> f64); 8] = [
        ("rho", |d| d.rho),
        ("snr_obs", |d| d.snr_obs),
        ("snr_mod", |d| d.snr_mod),
        ("pc_obs", |d| d.pc_obs),
        ("pc_mod", |d| d.pc_mod),
        ("rpc", |d| d.rpc),
        ("rpc_perf", |d| d.rpc_perf),
        ("bias", |d| d.bias),
    ];
    let mut summaries = Vec::new();
    let mut boxes = Vec::new();
    for (name, get) in fields {
        let raw: Vec<f64> = derived.iter().map(get).collect();
        summaries.push(ScalarSummary::new(name, &raw)?);
        boxes.push(BoxSummary::from_samples(name, &finite(&raw)));
    }

    #[derive(Serialize)]
    struct SnrSummary {
        schema_version: u32,
        command: &'static str,
        r_members: usize,
        total_draws: usize,
        diagnostics: Vec<ScalarSummary>,
    }
    report::write_json(
        &out.file("snr.json"),
        &SnrSummary {
            schema_version: SCHEMA_VERSION,
            command: "snr",
            r_members: r,
            total_draws: chains.total_draws(),
            diagnostics: summaries,
        },
    )?;
    report::write_box_csv(&out.file("snr_box.csv"), &boxes)?;
    for (name, get) in [
        ("snr_obs", fields[1].1),
        ("snr_mod", fields[2].1),
        ("rpc", fields[5].1),
    ] {
        let raw: Vec<f64> = derived.iter().map(get).collect();
        report::write_density_csv(
            &out.file(&format!("{name}_density.csv")),
            name,
            &finite(&raw),
        )?;
    }

    println!("{:<10} {:>9} {:>9} {:>9} {:>9}", "quantity", "mean", "median", "2.5%", "97.5%");
    for (name, get) in fields {
        let raw: Vec<f64> = derived.iter().map(get).collect();
        let s = ScalarSummary::new(name, &raw)?;
        println!(
            "{:<10} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            s.name, s.mean, s.median, s.interval95.0, s.interval95.1
        );
    }
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------------- predict

#[derive(Serialize)]
struct YearRow {
    year: i32,
    observed: f64,
    posterior_mean: f64,
    posterior_sd: f64,
    posterior_bits: f64,
    regression_mean: f64,
    regression_sd: f64,
    regression_bits: f64,
    climatology_mean: f64,
    climatology_sd: f64,
    climatology_bits: f64,
}

fn year_rows(loo: &LooEvaluation) -> Result<Vec<YearRow>> {
    let bits = |m: &str| -> Result<&[f64]> {
        Ok(&loo
            .method(m)
            .ok_or_else(|| Error::Estimation(format!("method {m} missing")))?
            .per_year)
    };
    let (pb, rb, cb) = (bits("posterior")?, bits("regression")?, bits("climatology")?);
    Ok(loo
        .years
        .iter()
        .enumerate()
        .map(|(t, y)| YearRow {
            year: y.year,
            observed: y.observed,
            posterior_mean: y.posterior.mean(),
            posterior_sd: y.posterior.variance().sqrt(),
            posterior_bits: pb[t],
            regression_mean: y.regression.mean(),
            regression_sd: y.regression.variance().sqrt(),
            regression_bits: rb[t],
            climatology_mean: y.climatology.mean(),
            climatology_sd: y.climatology.variance().sqrt(),
            climatology_bits: cb[t],
        })
        .collect())
}

fn predict_cmd(out: &OutDir, a: &PredictArgs) -> Result<ExitCode> {
    let data = HindcastDataset::from_csv_path(&a.data)?;
    let prior = load_prior(&a.prior)?;
    let cfg = a.sampler.config(a.seed);
    let loo = loo_evaluate(&data, &prior, &cfg)?;
    let rows = year_rows(&loo)?;

    #[derive(Serialize)]
    struct PredictSummary<'a> {
        schema_version: u32,
        command: &'static str,
        dataset: DatasetInfo,
        seed: u64,
        config: SamplerConfig,
        methods: &'a [MethodScores],
        years: &'a [YearRow],
    }
    report::write_json(
        &out.file("predict.json"),
        &PredictSummary {
            schema_version: SCHEMA_VERSION,
            command: "predict",
            dataset: DatasetInfo::new(&a.data, &data),
            seed: a.seed,
            config: cfg,
            methods: &loo.methods,
            years: &rows,
        },
    )?;

    let mut f = std::fs::File::create(out.file("predict_years.csv"))?;
    writeln!(
        f,
        "year,observed,posterior_mean,posterior_sd,posterior_bits,\
         regression_mean,regression_sd,regression_bits,\
         climatology_mean,climatology_sd,climatology_bits"
    )?;
    for r in &rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.year,
            report::f17(r.observed),
            report::f17(r.posterior_mean),
            report::f17(r.posterior_sd),
            report::f17(r.posterior_bits),
            report::f17(r.regression_mean),
            report::f17(r.regression_sd),
            report::f17(r.regression_bits),
            report::f17(r.climatology_mean),
            report::f17(r.climatology_sd),
            report::f17(r.climatology_bits),
        )?;
    }

    // density grids, one shared y-grid per year spanning all three methods
    let mut f = std::fs::File::create(out.file("predict_density.csv"))?;
    writeln!(f, "year,y,posterior,regression,climatology")?;
    for y in &loo.years {
        let dists = [&y.posterior, &y.regression, &y.climatology];
        let lo = dists
            .iter()
            .map(|d| d.mean() - 4.0 * d.variance().sqrt())
            .fold(f64::INFINITY, f64::min);
        let hi = dists
            .iter()
            .map(|d| d.mean() + 4.0 * d.variance().sqrt())
            .fold(f64::NEG_INFINITY, f64::max);
        let points = 201usize;
        let dx = (hi - lo) / (points - 1) as f64;
        for i in 0..points {
            let v = lo + i as f64 * dx;
            writeln!(
                f,
                "{},{},{},{},{}",
                y.year,
                report::f17(v),
                report::f17(y.posterior.pdf(v)),
                report::f17(y.regression.pdf(v)),
                report::f17(y.climatology.pdf(v)),
            )?;
        }
    }

    println!(
        "{:<12} {:>10} {:>9} {:>9} {:>7}",
        "method", "mean bits", "se bits", "mean sd", "capped"
    );
    for m in &loo.methods {
        println!(
            "{:<12} {:>10.3} {:>9.3} {:>9.3} {:>7}",
            m.method, m.mean_bits, m.se_bits, m.mean_predictive_sd, m.capped
        );
    }
    Ok(ExitCode::SUCCESS)
}

// ------------------------------------------------------------------ design

fn design_cmd(out: &OutDir, a: &DesignArgs) -> Result<ExitCode> {
    let chains = ChainSet::read_csv(&a.samples)?;
    let grid = DesignGrid::standard();
    let designs = design_sweep(&chains, &grid, a.draws_per_point, a.seed)?;

    #[derive(Serialize)]
    struct DesignReport<'a> {
        schema_version: u32,
        command: &'static str,
        seed: u64,
        draws_per_point: usize,
        designs: &'a [DesignSummary],
    }
    report::write_json(
        &out.file("design.json"),
        &DesignReport {
            schema_version: SCHEMA_VERSION,
            command: "design",
            seed: a.seed,
            draws_per_point: a.draws_per_point,
            designs: &designs,
        },
    )?;

    let mut f = std::fs::File::create(out.file("design_grid.csv"))?;
    writeln!(f, "n_years,r_members,budget,mean,mode,p2_5,p25,p50,p75,p97_5,draws,skipped")?;
    for d in &designs {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            d.point.n_years,
            d.point.r_members,
            d.point.budget(),
            report::f17(d.mean),
            report::f17(d.mode),
            report::f17(d.percentiles[0]),
            report::f17(d.percentiles[1]),
            report::f17(d.percentiles[2]),
            report::f17(d.percentiles[3]),
            report::f17(d.percentiles[4]),
            d.draws,
            d.skipped,
        )?;
    }
    if a.raw_draws {
        let mut f = std::fs::File::create(out.file("design_draws.csv"))?;
        writeln!(f, "n_years,r_members,correlation")?;
        for d in &designs {
            for s in &d.samples {
                writeln!(f, "{},{},{}", d.point.n_years, d.point.r_members, report::f17(*s))?;
            }
        }
    }

    println!(
        "{:>6} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "budget", "years", "members", "mean", "iqr", "skipped"
    );
    for d in &designs {
        println!(
            "{:>6} {:>8} {:>8} {:>8.3} {:>8.3} {:>8}",
            d.point.budget(),
            d.point.n_years,
            d.point.r_members,
            d.mean,
            d.iqr(),
            d.skipped
        );
    }
    Ok(ExitCode::SUCCESS)
}

// -------------------------------------------------------------- prior-check

fn prior_check_cmd(out: &OutDir, a: &PriorCheckArgs) -> Result<ExitCode> {
    let (model, preset_name) = match a.preset {
        Preset::Default => (PriorModel::Conjugate(load_prior(&a.prior)?), "default"),
        Preset::Uniform => {
            if a.prior.prior.is_some() {
                return Err(Error::InvalidConfig(
                    "--prior only combines with --preset default".into(),
                ));
            }
            (PriorModel::Uniform(UniformPrior::default()), "uniform")
        }
    };
    if a.draws < 2 {
        return Err(Error::InvalidConfig("need at least 2 prior draws".into()));
    }
    if a.members < 1 {
        return Err(Error::InvalidConfig("need at least 1 member".into()));
    }
    let (params, derived) = prior_predictive(&model, a.members, a.draws, a.seed);

    let rho_raw: Vec<f64> = derived.iter().map(|d| d.rho).collect();
    let rho = ScalarSummary::new("rho", &rho_raw)?;
    let mut pairs = 0usize;
    let mut hits = 0usize;
    for d in &derived {
        if d.snr_obs.is_finite() && d.snr_mod.is_finite() {
            pairs += 1;
            if d.snr_obs > d.snr_mod {
                hits += 1;
            }
        }
    }
    let p_snr = hits as f64 / pairs as f64;

    let param_fields: [(&str, fn(&ModelParams) -> f64); 6] = [
        ("mu_x", |p| p.mu_x),
        ("mu_y", |p| p.mu_y),
        ("beta", |p| p.beta),
        ("sigma_s", |p| p.sigma_s),
        ("sigma_eps", |p| p.sigma_eps),
        ("sigma_eta", |p| p.sigma_eta),
    ];
    let mut parameters = Vec::new();
    let mut boxes = vec![BoxSummary::from_samples("rho", &finite(&rho_raw))];
    for (name, get) in param_fields {
        let vals: Vec<f64> = params.iter().map(get).collect();
        parameters.push(ScalarSummary::new(name, &vals)?);
        boxes.push(BoxSummary::from_samples(name, &vals));
    }
    for (name, get) in [
        ("snr_obs", (|d: &DerivedDiagnostics| d.snr_obs) as fn(&DerivedDiagnostics) -> f64),
        ("snr_mod", |d: &DerivedDiagnostics| d.snr_mod),
    ] {
        let vals: Vec<f64> = derived.iter().map(get).collect();
        boxes.push(BoxSummary::from_samples(name, &finite(&vals)));
    }

    #[derive(Serialize)]
    struct PriorCheckSummary {
        schema_version: u32,
        command: &'static str,
        preset: &'static str,
        members: usize,
        draws: usize,
        seed: u64,
        rho: ScalarSummary,
        p_snr_obs_gt_snr_mod: f64,
        parameters: Vec<ScalarSummary>,
    }
    report::write_json(
        &out.file("prior_check.json"),
        &PriorCheckSummary {
            schema_version: SCHEMA_VERSION,
            command: "prior-check",
            preset: preset_name,
            members: a.members,
            draws: a.draws,
            seed: a.seed,
            rho,
            p_snr_obs_gt_snr_mod: p_snr,
            parameters,
        },
    )?;
    report::write_density_csv(&out.file("prior_rho_density.csv"), "rho", &finite(&rho_raw))?;
    report::write_box_csv(&out.file("prior_box.csv"), &boxes)?;

    let rho = ScalarSummary::new("rho", &rho_raw)?;
    let sig: Vec<f64> = params.iter().map(|p| p.sigma_s).collect();
    println!("preset {preset_name}, {} draws at R = {}", a.draws, a.members);
    println!("correlation: mean {:.3}, sd {:.3}", rho.mean, rho.sd);
    println!("Pr(snr_obs > snr_mod) = {p_snr:.3}");
    println!("sigma_s: mean {:.3}, sd {:.3}", stats::mean(&sig), stats::sd(&sig));
    Ok(ExitCode::SUCCESS)
}

// -------------------------------------------------------------- sensitivity

fn sensitivity_cmd(out: &OutDir, a: &SensitivityArgs) -> Result<ExitCode> {
    let data = HindcastDataset::from_csv_path(&a.data)?;
    let cfg = a.sampler.config(a.seed);
    let variants = standard_variants();
    let rows = sensitivity_scan(&data, &variants, &cfg, a.prior_draws)?;
    let (prior_mean_variance, posterior_mean_variance) = spread_of_means(&rows);

    #[derive(Serialize)]
    struct SensitivityReport<'a> {
        schema_version: u32,
        command: &'static str,
        dataset: DatasetInfo,
        seed: u64,
        prior_draws: usize,
        config: SamplerConfig,
        variants: &'a [VariantSummary],
        prior_mean_variance: f64,
        posterior_mean_variance: f64,
    }
    report::write_json(
        &out.file("sensitivity.json"),
        &SensitivityReport {
            schema_version: SCHEMA_VERSION,
            command: "sensitivity",
            dataset: DatasetInfo::new(&a.data, &data),
            seed: a.seed,
            prior_draws: a.prior_draws,
            config: cfg,
            variants: &rows,
            prior_mean_variance,
            posterior_mean_variance,
        },
    )?;

    let mut f = std::fs::File::create(out.file("sensitivity.csv"))?;
    writeln!(
        f,
        "name,prior_rho_mean,prior_rho_sd,prior_p_snr,posterior_rho_mean,posterior_rho_sd,\
         posterior_rho_lo,posterior_rho_hi,posterior_p_snr,posterior_p_snr_mc_se"
    )?;
    for v in &rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            v.name,
            report::f17(v.prior_rho_mean),
            report::f17(v.prior_rho_sd),
            report::f17(v.prior_p_snr),
            report::f17(v.posterior_rho_mean),
            report::f17(v.posterior_rho_sd),
            report::f17(v.posterior_rho_interval95.0),
            report::f17(v.posterior_rho_interval95.1),
            report::f17(v.posterior_p_snr),
            report::f17(v.posterior_p_snr_mc_se),
        )?;
    }

    println!(
        "{:<14} {:>10} {:>10} {:>10} {:>10}",
        "variant", "prior rho", "post rho", "post sd", "post Pr"
    );
    for v in &rows {
        println!(
            "{:<14} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            v.name, v.prior_rho_mean, v.posterior_rho_mean, v.posterior_rho_sd, v.posterior_p_snr
        );
    }
    println!(
        "variance of means: prior {prior_mean_variance:.5} -> posterior {posterior_mean_variance:.5}"
    );
    Ok(ExitCode::SUCCESS)
}

// ------------------------------------------------------------ perfect-model

fn perfect_model_cmd(out: &OutDir, a: &PerfectModelArgs) -> Result<ExitCode> {
    let data = HindcastDataset::from_csv_path(&a.data)?;
    let prior = load_prior(&a.prior)?;
    let cfg = a.sampler.config(a.seed);
    let rep = perfect_model_check(&data, &prior, &cfg, a.member)?;

    #[derive(Serialize)]
    struct PerfectModelSummary<'a> {
        schema_version: u32,
        command: &'static str,
        dataset: DatasetInfo,
        seed: u64,
        member: Option<usize>,
        config: SamplerConfig,
        report: &'a PerfectModelReport,
    }
    report::write_json(
        &out.file("perfect_model.json"),
        &PerfectModelSummary {
            schema_version: SCHEMA_VERSION,
            command: "perfect-model",
            dataset: DatasetInfo::new(&a.data, &data),
            seed: a.seed,
            member: a.member,
            config: cfg,
            report: &rep,
        },
    )?;

    let mut f = std::fs::File::create(out.file("perfect_model.csv"))?;
    writeln!(f, "member,p_beta_lt_1,p_snr_obs_gt_snr_mod,overlap_means,overlap_noise_sds")?;
    for m in &rep.members {
        writeln!(
            f,
            "{},{},{},{},{}",
            m.member,
            report::f17(m.p_beta_lt_1),
            report::f17(m.p_snr_obs_gt_snr_mod),
            report::f17(m.overlap_means),
            report::f17(m.overlap_noise_sds),
        )?;
    }

    println!("{} pseudo-truth refits", rep.members.len());
    println!("avg Pr(beta < 1)              = {:.3}", rep.avg_p_beta_lt_1);
    println!("avg Pr(snr_obs > snr_mod)     = {:.3}", rep.avg_p_snr_obs_gt_snr_mod);
    println!("avg overlap(mu_x, mu_y)       = {:.3}", rep.avg_overlap_means);
    println!("avg overlap(sigma_eps, sigma_eta) = {:.3}", rep.avg_overlap_noise_sds);
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------------- surrogate

fn surrogate_cmd(out: &OutDir, a: &SurrogateArgs) -> Result<ExitCode> {
    let mut spec = match &a.targets {
        None => SurrogateSpec::reference(),
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
    };
    if let Some(n) = a.years {
        spec.stats.n_years = n;
    }
    if let Some(r) = a.members {
        spec.stats.r_members = r;
    }
    let dataset = spec.generate(a.seed)?;
    let achieved = summarize(&dataset);

    let rel = |target: f64, got: f64| {
        if target == 0.0 {
            (got - target).abs()
        } else {
            ((got - target) / target).abs()
        }
    };
    let t = &spec.stats;
    let max_rel_err = [
        rel(t.m_x, achieved.m_x),
        rel(t.m_y, achieved.m_y),
        rel(t.v_xbar, achieved.v_xbar),
        rel(t.v_y, achieved.v_y),
        rel(t.s_xbary, achieved.s_xbary),
        rel(t.v_within, achieved.v_within),
        rel(t.member_mean_var, achieved.member_mean_var),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);

    let comments = vec![
        "synthetic hindcast generated to match target summary statistics".to_string(),
        format!("seed = {}", a.seed),
        format!(
            "targets: m_x={} m_y={} v_xbar={} v_y={} s_xbary={} v_within={} member_mean_var={}",
            t.m_x, t.m_y, t.v_xbar, t.v_y, t.s_xbary, t.v_within, t.member_mean_var
        ),
        format!("max relative error of achieved statistics: {max_rel_err:.3e}"),
    ];
    dataset.write_csv(&out.file(&a.file), &comments)?;

    #[derive(Serialize)]
    struct SurrogateSummary {
        schema_version: u32,
        command: &'static str,
        seed: u64,
        file: String,
        targets: SurrogateSpec,
        achieved: SummaryStats,
        max_rel_err: f64,
    }
    report::write_json(
        &out.file("surrogate.json"),
        &SurrogateSummary {
            schema_version: SCHEMA_VERSION,
            command: "surrogate",
            seed: a.seed,
            file: a.file.clone(),
            targets: spec,
            achieved,
            max_rel_err,
        },
    )?;

    println!(
        "wrote {} ({} years x {} members), max relative error {max_rel_err:.3e}",
        out.file(&a.file).display(),
        dataset.n_years(),
        dataset.r_members()
    );
    Ok(ExitCode::SUCCESS)
}
