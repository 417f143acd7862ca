//! `slicegame`: generate, solve and measure share-constrained
//! proportional-allocation slicing games.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 solver
//! failure.

mod formats;
mod runner;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use slicegame_core::prelude::*;

use formats::{
    trace_rows, write_csv_with_manifest, write_json, write_scenario, ReportFile, ResultRow,
    RESULT_COLUMN_DOCS, RESULT_HEADER, TRACE_COLUMN_DOCS, TRACE_HEADER,
};

#[derive(Parser)]
#[command(
    name = "slicegame",
    about = "Network-slicing games under share-constrained proportional allocation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a scenario file (random population, traffic pattern, or an
    /// analytic worst-case instance).
    Generate(GenerateArgs),
    /// Run best-response dynamics on a scenario file.
    Solve(SolveArgs),
    /// Solve a scenario and compute the requested metrics.
    Metrics(MetricsArgs),
    /// Run a grid of cells x repetitions and aggregate the results.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output scenario path (JSON).
    #[arg(long)]
    out: PathBuf,
    /// RNG seed (random and pattern modes).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Random population mode (the default when no mode flag is given).
    #[arg(long, conflicts_with_all = ["pattern", "tight"])]
    random: bool,
    /// Traffic-pattern mode: uniform, overlapping, non-overlapping, mixed.
    #[arg(long, conflicts_with = "tight")]
    pattern: Option<String>,
    /// Analytic instance mode: `poa` (tight optimality gap) or `envy`
    /// (worst-case envy family).
    #[arg(long)]
    tight: Option<String>,

    /// Slice count range `lo,hi` (random mode).
    #[arg(long, value_parser = parse_usize_range, default_value = "2,12")]
    slices: (usize, usize),
    /// Station count range `lo,hi` (random mode) .
    #[arg(long, value_parser = parse_usize_range, default_value = "10,90")]
    stations: (usize, usize),
    /// Users-per-station range `lo,hi` (random mode).
    #[arg(long, value_parser = parse_f64_range, default_value = "3,15")]
    density: (f64, f64),
    /// Fairness parameter range `lo,hi` (random mode).
    #[arg(long, value_parser = parse_f64_range, default_value = "0.01,30")]
    alpha_range: (f64, f64),
    /// Explicit per-slice fairness parameters, comma separated (random
    /// mode; overrides --alpha-range and pins the slice count).
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Share rule: equal or random (random mode).
    #[arg(long, value_enum, default_value_t = ShareRuleArg::Random)]
    share_rule: ShareRuleArg,
    /// Capacity sampler: `constant:C`, `uniform:LO,HI` or
    /// `lognormal:MU,SIGMA` (natural-log parameters).
    #[arg(long, value_parser = parse_capacity, default_value = "lognormal:2.302585092994046,0.5")]
    capacity: CapacitySampler,
    /// Keep stations hosting a single slice instead of re-attaching users
    /// (random mode).
    #[arg(long)]
    allow_single_slice_stations: bool,

    /// Slice count (pattern mode).
    #[arg(long, default_value_t = 4)]
    pattern_slices: usize,
    /// Station count (pattern mode).
    #[arg(long, default_value_t = 20)]
    pattern_stations: usize,
    /// Users per slice (pattern mode).
    #[arg(long, default_value_t = 25)]
    users_per_slice: usize,
    /// Fairness parameter shared by all slices (pattern mode).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Fraction of a hotspot slice's users inside its hotspot.
    #[arg(long, default_value_t = 0.7)]
    hotspot_mass: f64,
    /// Fraction of stations forming one hotspot set.
    #[arg(long, default_value_t = 0.2)]
    hotspot_stations: f64,

    /// Station-1 user count of the tight-gap instance (`--tight poa`).
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// First share (`--tight poa`).
    #[arg(long, default_value_t = 0.6)]
    s1: f64,
    /// Second share (`--tight poa`).
    #[arg(long, default_value_t = 0.4)]
    s2: f64,
    /// Foreign-load ratio of the envy family (`--tight envy`).
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    /// First-station priority of the envious slice (`--tight envy`).
    #[arg(long, default_value_t = 0.5)]
    phi1: f64,
    /// Share of the envious and envied slices (`--tight envy`).
    #[arg(long, default_value_t = 1e-3)]
    share_o: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShareRuleArg {
    Equal,
    Random,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario file to solve.
    #[arg(long)]
    scenario: PathBuf,
    /// Equilibrium report output (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-round trace output (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    dynamics: DynamicsArgs,
}

/// Dynamics knobs. Every flag has a JSON twin of the same name in the
/// `--config` file; an explicit flag wins over the config value.
#[derive(Args)]
struct DynamicsArgs {
    /// Options file (JSON, same field names as these flags).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Convergence tolerance on the round measure (default 1e-6).
    #[arg(long)]
    tol: Option<f64>,
    /// Round cap (default 500).
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Update order: index, or shuffle (one seeded shuffle fixed for the
    /// whole run).
    #[arg(long, value_enum)]
    order: Option<OrderArg>,
    /// Seed for --order shuffle (default 0).
    #[arg(long)]
    order_seed: Option<u64>,
    /// Stopping rule: weights (relative weight change) or utility.
    #[arg(long, value_enum)]
    stop: Option<StopArg>,
    /// Epsilon perturbation added to every station's foreign load inside
    /// the best response (regularizes no-competition corner cases).
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
enum OrderArg {
    Index,
    Shuffle,
}

#[derive(Clone, Copy, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StopArg {
    Weights,
    Utility,
}

/// The `--config` document for solve and metrics: dynamics knobs plus
/// metric toggles (the latter are ignored by `solve`).
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    tol: Option<f64>,
    max_rounds: Option<usize>,
    order: Option<String>,
    order_seed: Option<u64>,
    stop: Option<String>,
    epsilon: Option<f64>,
    poa: Option<bool>,
    gain: Option<bool>,
    loss: Option<bool>,
    envy: Option<String>,
}

fn load_run_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config `{}`", path.display()))?;
    let mut deserializer = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut deserializer)
        .map_err(|e| anyhow::anyhow!("{}: at `{}`: {}", path.display(), e.path(), e.inner()))
}

impl DynamicsArgs {
    fn to_options(&self) -> Result<DynamicsOptions> {
        let config = load_run_config(&self.config)?;
        let order = match (&self.order, config.order.as_deref()) {
            (Some(OrderArg::Index), _) | (None, Some("index")) | (None, None) => OrderArg::Index,
            (Some(OrderArg::Shuffle), _) | (None, Some("shuffle")) => OrderArg::Shuffle,
            (None, Some(other)) => bail!("unknown order `{other}` (index or shuffle)"),
        };
        let seed = self.order_seed.or(config.order_seed).unwrap_or(0);
        let stop = match (&self.stop, config.stop.as_deref()) {
            (Some(StopArg::Weights), _) | (None, Some("weights")) | (None, None) => {
                StopArg::Weights
            }
            (Some(StopArg::Utility), _) | (None, Some("utility")) => StopArg::Utility,
            (None, Some(other)) => bail!("unknown stop rule `{other}` (weights or utility)"),
        };
        Ok(DynamicsOptions {
            tol: self.tol.or(config.tol).unwrap_or(1e-6),
            max_rounds: self.max_rounds.or(config.max_rounds).unwrap_or(500),
            order: match order {
                OrderArg::Index => UpdateOrder::SliceIndex,
                OrderArg::Shuffle => UpdateOrder::Shuffled { seed },
            },
            stopping: match stop {
                StopArg::Weights => StoppingRule::RelativeWeightChange,
                StopArg::Utility => StoppingRule::UtilityChange,
            },
            best_response: slicegame_core::best_response::BestResponseOptions {
                epsilon: self.epsilon.or(config.epsilon).unwrap_or(0.0),
                ..Default::default()
            },
            ..DynamicsOptions::default()
        })
    }
}

#[derive(Args)]
struct MetricsArgs {
    /// Scenario file to measure.
    #[arg(long)]
    scenario: PathBuf,
    /// Output path (CSV by default, JSON with --format json).
    #[arg(long)]
    out: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Optimality gap (requires every slice at alpha = 1).
    #[arg(long)]
    poa: bool,
    /// Capacity-equivalent gain over static slicing.
    #[arg(long)]
    gain: bool,
    /// Capacity-equivalent loss vs the social optimum.
    #[arg(long)]
    loss: bool,
    /// Directed envy for slice pairs: strict (equal footprints and shares)
    /// or permissive.
    #[arg(long)]
    envy: Option<String>,
    #[command(flatten)]
    dynamics: DynamicsArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration (JSON; see the guide for the field list).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for cells.csv and summary.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_usize_range(text: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.as_slice() {
        [lo, hi] => {
            let lo = lo.trim().parse().map_err(|e| format!("{e}"))?;
            let hi = hi.trim().parse().map_err(|e| format!("{e}"))?;
            Ok((lo, hi))
        }
        [single] => {
            let v = single.trim().parse().map_err(|e| format!("{e}"))?;
            Ok((v, v))
        }
        _ => Err("expected `lo,hi`".to_string()),
    }
}

fn parse_f64_range(text: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.as_slice() {
        [lo, hi] => {
            let lo = lo.trim().parse().map_err(|e| format!("{e}"))?;
            let hi = hi.trim().parse().map_err(|e| format!("{e}"))?;
            Ok((lo, hi))
        }
        [single] => {
            let v = single.trim().parse().map_err(|e| format!("{e}"))?;
            Ok((v, v))
        }
        _ => Err("expected `lo,hi`".to_string()),
    }
}

fn parse_capacity(text: &str) -> Result<CapacitySampler, String> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    match kind {
        "constant" => Ok(CapacitySampler::Constant(
            rest.parse().map_err(|e| format!("constant capacity: {e}"))?,
        )),
        "uniform" => {
            let (lo, hi) = parse_f64_range(rest)?;
            Ok(CapacitySampler::Uniform { lo, hi })
        }
        "lognormal" => {
            let (mu, sigma) = parse_f64_range(rest)?;
            Ok(CapacitySampler::LogNormal { mu, sigma })
        }
        other => Err(format!(
            "unknown capacity sampler `{other}` (constant, uniform, lognormal)"
        )),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(classify(&error))
        }
    }
}

/// 1 for bad inputs, 2 for solver trouble.
fn classify(error: &anyhow::Error) -> u8 {
    for cause in error.chain() {
        if let Some(core) = cause.downcast_ref::<slicegame_core::Error>() {
            return if core.is_validation() { 1 } else { 2 };
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Metrics(args) => metrics(args),
        Command::Sweep(args) => run_sweep_command(args),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let scenario = if let Some(kind) = &args.tight {
        match kind.as_str() {
            "poa" => {
                let inst =
                    poa_tight_instance(args.m, args.s1, args.s2).map_err(anyhow::Error::new)?;
                eprintln!(
                    "tight-gap instance: closed-form social utility {:.9}, equilibrium \
                     utility {:.9}, gap {:.9} (limit {:.9})",
                    inst.social_utility, inst.nash_utility, inst.gap, inst.gap_limit
                );
                inst.scenario
            }
            "envy" => {
                let inst = envy_instance_family(args.x, args.phi1, args.share_o)
                    .map_err(anyhow::Error::new)?;
                eprintln!(
                    "envy-family instance: branch expression {:.9} (self-consistent), \
                     {:.9} (as published); small-share roots y_hat {:.9}, x_hat {:.9}",
                    inst.analytic_envy_consistent,
                    inst.analytic_envy_displayed,
                    inst.y_hat,
                    inst.x_hat
                );
                inst.scenario
            }
            other => bail!("unknown --tight kind `{other}` (poa or envy)"),
        }
    } else if let Some(name) = &args.pattern {
        let kind = PatternKind::parse(name).map_err(anyhow::Error::new)?;
        let params = PatternParams {
            n_slices: args.pattern_slices,
            n_stations: args.pattern_stations,
            users_per_slice: args.users_per_slice,
            alpha: args.alpha,
            hotspot_mass: args.hotspot_mass,
            hotspot_station_frac: args.hotspot_stations,
            capacity: args.capacity.clone(),
            seed: args.seed,
        };
        patterned_scenario(kind, &params).map_err(anyhow::Error::new)?
    } else {
        let alpha = match &args.alphas {
            Some(list) => AlphaRule::PerSlice(list.clone()),
            None => AlphaRule::Range {
                lo: args.alpha_range.0,
                hi: args.alpha_range.1,
            },
        };
        let slices = match &args.alphas {
            Some(list) => (list.len(), list.len()),
            None => args.slices,
        };
        let params = RandomScenarioParams {
            n_slices: slices,
            n_stations: args.stations,
            user_density: args.density,
            alpha,
            share_rule: match args.share_rule {
                ShareRuleArg::Equal => ShareRule::Equal,
                ShareRuleArg::Random => ShareRule::RandomSimplex,
            },
            capacity: args.capacity.clone(),
            seed: args.seed,
            require_competition: !args.allow_single_slice_stations,
            ..RandomScenarioParams::default()
        };
        random_scenario(&params).map_err(anyhow::Error::new)?
    };
    let report = validate_scenario(&scenario);
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    if !report.is_valid() {
        for error in &report.errors {
            eprintln!("note: generated instance violates validation: {error}");
        }
    }
    write_scenario(&args.out, &scenario)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let scenario = formats::read_scenario(&args.scenario)?;
    let mut options = args.dynamics.to_options()?;
    options.record_trace = args.trace.is_some();
    let (trace, report) =
        run_dynamics(&scenario, None, &options).map_err(anyhow::Error::new)?;
    if !report.converged {
        eprintln!(
            "warning: no convergence within {} rounds (last round change {:.3e})",
            report.rounds_used, report.max_relative_change
        );
    }
    let file = ReportFile::new(&scenario, &report)?;
    write_json(&args.out, &file)?;
    if let Some(trace_path) = &args.trace {
        write_csv_with_manifest(
            trace_path,
            TRACE_HEADER,
            &trace_rows(&scenario, &trace),
            TRACE_COLUMN_DOCS,
        )?;
    }
    println!(
        "converged={} rounds={} nash_residual={:.3e} -> {}",
        report.converged,
        report.rounds_used,
        report.nash_residual,
        args.out.display()
    );
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let scenario = formats::read_scenario(&args.scenario)?;
    let config = load_run_config(&args.dynamics.config)?;
    let envy_name = args.envy.as_deref().or(config.envy.as_deref());
    let envy_mode = match envy_name {
        None => None,
        Some("strict") => Some(ExchangeMode::Strict),
        Some("permissive") => Some(ExchangeMode::Permissive),
        Some(other) => bail!("unknown envy mode `{other}` (strict or permissive)"),
    };
    let request = MetricsOptions {
        poa: args.poa || config.poa.unwrap_or(false),
        gain: args.gain || config.gain.unwrap_or(false),
        loss: args.loss || config.loss.unwrap_or(false),
        envy: envy_mode,
        ..MetricsOptions::default()
    };
    let row = runner::solve_and_measure(
        &scenario,
        &args.dynamics.to_options()?,
        &request,
        ("NA".into(), "NA".into(), "NA".into()),
    )?;
    match args.format {
        FormatArg::Csv => {
            write_csv_with_manifest(
                &args.out,
                RESULT_HEADER,
                &[row.to_csv()],
                RESULT_COLUMN_DOCS,
            )?;
        }
        FormatArg::Json => {
            write_json(&args.out, &result_row_json(&row))?;
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn result_row_json(row: &ResultRow) -> serde_json::Value {
    use serde_json::json;
    let opt = |v: Option<f64>| match v {
        Some(x) if x.is_finite() => json!(x),
        Some(x) => json!(x.to_string()),
        None => serde_json::Value::Null,
    };
    json!({
        "scenario": row.scenario,
        "seed": row.seed,
        "rounds": row.rounds,
        "converged": row.converged,
        "nash_residual": row.nash_residual,
        "utility_ne": row.utility_ne,
        "utility_ss": row.utility_ss,
        "utility_so": opt(row.utility_so),
        "per_slice_ne": row.per_slice_ne,
        "per_slice_ss": row.per_slice_ss,
        "poa_gap": opt(row.poa_gap),
        "gain_over_ss_pct": opt(row.gain_over_ss_pct),
        "loss_vs_so_pct": opt(row.loss_vs_so_pct),
        "envy_min": opt(row.envy_min),
        "envy_max": opt(row.envy_max),
        "envy_mean": opt(row.envy_mean),
        "envy_pairs": row.envy_pairs,
        "notes": row.notes,
    })
}

fn run_sweep_command(args: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config `{}`", args.config.display()))?;
    let mut deserializer = serde_json::Deserializer::from_str(&text);
    let config: sweep::SweepConfig = serde_path_to_error::deserialize(&mut deserializer)
        .map_err(|e| anyhow::anyhow!("{}: at `{}`: {}", args.config.display(), e.path(), e.inner()))?;
    sweep::run_sweep(&config, &args.out_dir)?;
    println!("wrote {}/cells.csv and {}/summary.csv", args.out_dir.display(), args.out_dir.display());
    Ok(())
}
