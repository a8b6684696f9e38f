//! Command-line front end: single runs, sweeps, presets, power-law fitting
//! and SVG plotting, all writing the deterministic formats the library
//! defines.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use kkps_sim::experiments::{run_sweep_with_threads, trend_tests, CellRun};
use kkps_sim::io::{
    fit_both, fits_from_json, fits_to_json, histogram_from_csv, load_model_params,
    load_sweep_config, trajectory_from_csv, write_run_outputs, write_sweep_outputs, ConfigError,
    FitOutcome, RunArtifacts, SchemaError,
};
use kkps_sim::params::{ParamError, Scope, TieBreak, UpdateMode};
use kkps_sim::plot::{efficiency_curves_svg, loglog_degree_svg, PlotKind};
use kkps_sim::{
    preset, run, DegreeHistogram, FitMethod, InitDist, ModelParams, PowerLawFit, PresetName,
    SimError, SweepConfig, TopicWorld, ValueDist,
};

#[derive(Parser)]
#[command(
    name = "kkps-sim",
    version,
    about = "Deterministic simulator and analysis toolkit for the KKPS recommend/endorse model"
)]
struct Cli {
    /// Print progress detail to stderr
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one world and print a summary or write an output tree
    Run(RunArgs),
    /// Run every cell of a sweep configuration file
    Sweep(SweepArgs),
    /// Run one of the built-in preset sweeps
    Preset(PresetArgs),
    /// Fit power laws to a degree histogram CSV
    Fit(FitArgs),
    /// Render an SVG plot from result files
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON parameter file; the flags below override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Topic count
    #[arg(long)]
    k: Option<usize>,
    /// User count
    #[arg(long)]
    m: Option<usize>,
    /// Document count
    #[arg(long)]
    n: Option<usize>,
    /// Documents recommended per user per iteration
    #[arg(long)]
    a: Option<usize>,
    /// Documents endorsed per user per iteration
    #[arg(long)]
    b: Option<usize>,
    /// Initial pseudo-score distribution: uniform | poisson | normal
    #[arg(long, value_name = "KIND")]
    init_dist: Option<String>,
    /// Nonzero relevance value distribution: uniform01 | constant:VALUE
    #[arg(long, value_name = "KIND")]
    q_dist: Option<String>,
    /// Seed for world generation and initial scores
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
    /// Candidate documents per user: topic-relevant | global
    #[arg(long, value_name = "SCOPE")]
    scope: Option<String>,
    /// Degree snapshot rule: synchronous | sequential
    #[arg(long, value_name = "MODE")]
    update_mode: Option<String>,
    /// Ranking tie rule: index | seeded-random
    #[arg(long, value_name = "RULE")]
    tie_break: Option<String>,
    /// Output directory; omitted prints a summary instead
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write world.json into the output directory
    #[arg(long)]
    dump_world: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep configuration file
    config: PathBuf,
    /// Output directory; omitted prints per-cell summaries instead
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated seed list overriding the configured seeds
    #[arg(long, value_name = "LIST")]
    seeds: Option<String>,
}

#[derive(Args)]
struct PresetArgs {
    /// Preset name: fig2 | fig3 | fig4 | fig5 | fig6 | fig7
    name: String,
    /// Output directory; omitted prints per-cell summaries instead
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated seed list overriding the default 1..10
    #[arg(long, value_name = "LIST")]
    seeds: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    /// Degree histogram CSV (header `degree,count`)
    input: PathBuf,
    /// Output file; omitted prints to stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = FitFormat::Json)]
    format: FitFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct PlotArgs {
    /// Plot kind: loglog-degree | efficiency-curve
    kind: String,
    /// loglog-degree: one degree histogram CSV plus an optional fits JSON;
    /// efficiency-curve: one trajectory CSV per series
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output file; omitted prints the SVG to stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Plot title
    #[arg(long)]
    title: Option<String>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        CliError::Usage(err.to_string())
    }
}

impl From<ParamError> for CliError {
    fn from(err: ParamError) -> Self {
        CliError::Usage(err.to_string())
    }
}

impl From<SchemaError> for CliError {
    fn from(err: SchemaError) -> Self {
        CliError::Usage(err.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let verbose = cli.verbose;
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args, verbose),
        Command::Sweep(args) => cmd_sweep(args, verbose),
        Command::Preset(args) => cmd_preset(args, verbose),
        Command::Fit(args) => cmd_fit(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|err| CliError::Usage(format!("cannot read {}: {err}", path.display())))
}

fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|err| CliError::Runtime(format!("cannot write {}: {err}", path.display())))
}

/// The invocation echoed into manifests, without the binary path.
fn command_echo() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn resolve_params(args: &RunArgs) -> Result<ModelParams, CliError> {
    let mut params = match &args.config {
        Some(path) => load_model_params(&read_input(path)?)?,
        None => {
            let need = |name: &str, value: Option<usize>| {
                value.ok_or_else(|| {
                    CliError::Usage(format!(
                        "missing required parameter --{name} (or provide --config)"
                    ))
                })
            };
            let (k, m, n) = (need("k", args.k)?, need("m", args.m)?, need("n", args.n)?);
            let (a, b) = (need("a", args.a)?, need("b", args.b)?);
            load_model_params(&format!(
                r#"{{"k":{k},"m":{m},"n":{n},"a":{a},"b":{b}}}"#
            ))?
        }
    };
    if let Some(k) = args.k {
        params.k = k;
    }
    if let Some(m) = args.m {
        params.m = m;
    }
    if let Some(n) = args.n {
        params.n = n;
    }
    if let Some(a) = args.a {
        params.a = a;
    }
    if let Some(b) = args.b {
        params.b = b;
    }
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(max_iter) = args.max_iter {
        params.max_iterations = max_iter;
    }
    if let Some(kind) = &args.init_dist {
        params.init_dist = InitDist::from_kind(kind).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown init distribution `{kind}`; expected uniform, poisson or normal"
            ))
        })?;
    }
    if let Some(kind) = &args.q_dist {
        params.q_dist = parse_q_dist(kind)?;
    }
    if let Some(raw) = &args.scope {
        params.scope = match raw.as_str() {
            "topic-relevant" => Scope::TopicRelevant,
            "global" => Scope::Global,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown scope `{other}`; expected topic-relevant or global"
                )))
            }
        };
    }
    if let Some(raw) = &args.update_mode {
        params.update_mode = match raw.as_str() {
            "synchronous" => UpdateMode::Synchronous,
            "sequential" => UpdateMode::Sequential,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown update mode `{other}`; expected synchronous or sequential"
                )))
            }
        };
    }
    if let Some(raw) = &args.tie_break {
        params.tie_break = match raw.as_str() {
            "index" => TieBreak::Index,
            "seeded-random" => TieBreak::SeededRandom,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown tie break `{other}`; expected index or seeded-random"
                )))
            }
        };
    }
    Ok(params)
}

fn parse_q_dist(kind: &str) -> Result<ValueDist, CliError> {
    if kind == "uniform01" {
        return Ok(ValueDist::Uniform01);
    }
    if let Some(raw) = kind.strip_prefix("constant:") {
        let value: f64 = raw
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid constant value `{raw}`")))?;
        return Ok(ValueDist::Constant { value });
    }
    Err(CliError::Usage(format!(
        "unknown value distribution `{kind}`; expected uniform01 or constant:VALUE"
    )))
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>, CliError> {
    raw.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("invalid seed `{}`", piece.trim())))
        })
        .collect()
}

fn sweep_threads() -> Result<Option<usize>, CliError> {
    match std::env::var("KKPS_SIM_THREADS") {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(threads) if threads > 0 => Ok(Some(threads)),
            _ => Err(CliError::Usage(format!(
                "KKPS_SIM_THREADS must be a positive integer, got `{raw}`"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(err) => Err(CliError::Usage(format!("KKPS_SIM_THREADS: {err}"))),
    }
}

fn cmd_run(args: RunArgs, verbose: bool) -> Result<(), CliError> {
    let params = resolve_params(&args)?;
    params.validate()?;
    let world = TopicWorld::generate(&params)?;
    let output = run(&world, &params)?;
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    if verbose {
        for record in &output.trajectory.records {
            eprintln!(
                "iteration {}: {} new links, {} total, efficiency {:.6}",
                record.iteration, record.new_links, record.cumulative_links, record.efficiency
            );
        }
    }
    match &args.out {
        Some(dir) => {
            let artifacts = RunArtifacts {
                command: &command_echo(),
                params: &params,
                warnings: &output.warnings,
                trajectory: &output.trajectory,
                state: &output.state,
                total_utility: output.total_utility,
                world: args.dump_world.then_some(&world),
            };
            let files = write_run_outputs(dir, &artifacts)
                .map_err(|err| CliError::Runtime(format!("writing outputs: {err}")))?;
            println!("wrote {} files to {}", files.len(), dir.display());
        }
        None => {
            let trajectory = &output.trajectory;
            println!("iterations: {}", trajectory.records.len());
            println!("converged: {}", trajectory.converged);
            println!("total links: {}", output.state.link_count());
            println!("total utility: {}", output.total_utility);
            println!(
                "final efficiency: {}",
                trajectory.final_efficiency().unwrap_or(0.0)
            );
        }
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs, verbose: bool) -> Result<(), CliError> {
    let mut config = load_sweep_config(&read_input(&args.config)?)?;
    if let Some(raw) = &args.seeds {
        config.seeds = parse_seeds(raw)?;
    }
    run_and_emit_sweep(config, args.out, verbose)
}

fn cmd_preset(args: PresetArgs, verbose: bool) -> Result<(), CliError> {
    let name = PresetName::from_str(&args.name).map_err(|err| CliError::Usage(err.to_string()))?;
    let mut config = preset(name);
    if let Some(raw) = &args.seeds {
        config.seeds = parse_seeds(raw)?;
    }
    run_and_emit_sweep(config, args.out, verbose)
}

fn run_and_emit_sweep(
    config: SweepConfig,
    out: Option<PathBuf>,
    verbose: bool,
) -> Result<(), CliError> {
    let threads = sweep_threads()?;
    let result = run_sweep_with_threads(&config, threads)
        .map_err(|err| CliError::Usage(err.to_string()))?;
    if verbose {
        for cell in &result.cells {
            match cell {
                CellRun::Completed(cell) => eprintln!(
                    "cell {}: {} runs, final efficiency median {:.6}",
                    cell.label,
                    cell.runs.len(),
                    cell.aggregate.final_efficiency.median
                ),
                CellRun::Failed { label, error, .. } => eprintln!("cell {label}: failed: {error}"),
            }
        }
    }
    let trends = match config.preset {
        Some(_) => Some(
            trend_tests(&result).map_err(|err| CliError::Runtime(format!("trend report: {err}")))?,
        ),
        None => None,
    };
    match out {
        Some(dir) => {
            let files = write_sweep_outputs(&dir, &command_echo(), &result, trends.as_ref())
                .map_err(|err| CliError::Runtime(format!("writing outputs: {err}")))?;
            println!("wrote {} files to {}", files.len(), dir.display());
        }
        None => {
            for cell in &result.cells {
                match cell {
                    CellRun::Completed(cell) => println!(
                        "{}: final efficiency median {:.6} over {} runs",
                        cell.label,
                        cell.aggregate.final_efficiency.median,
                        cell.runs.len()
                    ),
                    CellRun::Failed { label, error, .. } => println!("{label}: failed ({error})"),
                }
            }
            if let Some(report) = &trends {
                for check in &report.checks {
                    println!(
                        "trend [{}] {}: {}",
                        if check.gated { "gated" } else { "reported" },
                        check.claim,
                        if check.pass { "holds" } else { "does not hold" }
                    );
                }
            }
        }
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let hist = histogram_from_csv(&read_input(&args.input)?)?;
    let outcomes = fit_both(&hist);
    let rendered = match args.format {
        FitFormat::Json => fits_to_json(&outcomes),
        FitFormat::Csv => fits_csv(&outcomes),
    };
    match &args.out {
        Some(path) => {
            write_output(path, &rendered)?;
            println!("wrote {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}

fn method_name(method: FitMethod) -> &'static str {
    match method {
        FitMethod::Mle => "mle",
        FitMethod::LoglogLs => "loglog-ls",
    }
}

fn fits_csv(outcomes: &[FitOutcome]) -> String {
    let mut text = String::from("method,status,exponent,xmin,goodness,sample_size,message\n");
    for outcome in outcomes {
        match outcome {
            FitOutcome::Ok(fit) => text.push_str(&format!(
                "{},ok,{},{},{},{},\n",
                method_name(fit.method),
                fit.exponent,
                fit.xmin,
                fit.goodness,
                fit.sample_size
            )),
            FitOutcome::Error { method, message } => text.push_str(&format!(
                "{},error,,,,,\"{}\"\n",
                method_name(*method),
                message.replace('"', "\"\"")
            )),
        }
    }
    text
}

fn cmd_plot(args: PlotArgs) -> Result<(), CliError> {
    let kind = PlotKind::from_str(&args.kind).map_err(CliError::Usage)?;
    let svg = match kind {
        PlotKind::LoglogDegree => {
            let mut hist: Option<DegreeHistogram> = None;
            let mut loaded_fits: Option<Vec<FitOutcome>> = None;
            for path in &args.inputs {
                if path.extension().and_then(|ext| ext.to_str()) == Some("json") {
                    loaded_fits = Some(fits_from_json(&read_input(path)?)?);
                } else {
                    if hist.is_some() {
                        return Err(CliError::Usage(
                            "loglog-degree takes a single degree histogram CSV".into(),
                        ));
                    }
                    hist = Some(histogram_from_csv(&read_input(path)?)?);
                }
            }
            let hist = hist.ok_or_else(|| {
                CliError::Usage("loglog-degree needs a degree histogram CSV input".into())
            })?;
            let outcomes = loaded_fits.unwrap_or_else(|| fit_both(&hist));
            let fits: Vec<PowerLawFit> = outcomes
                .into_iter()
                .filter_map(|outcome| match outcome {
                    FitOutcome::Ok(fit) => Some(fit),
                    FitOutcome::Error { .. } => None,
                })
                .collect();
            let title = args.title.as_deref().unwrap_or("in-degree distribution");
            loglog_degree_svg(&hist, &fits, title)?
        }
        PlotKind::EfficiencyCurve => {
            let mut series = Vec::new();
            for path in &args.inputs {
                let records = trajectory_from_csv(&read_input(path)?)?;
                let name = path
                    .file_stem()
                    .map(|stem| stem.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                series.push((name, records));
            }
            let title = args.title.as_deref().unwrap_or("efficiency by iteration");
            efficiency_curves_svg(&series, title)?
        }
    };
    match &args.out {
        Some(path) => {
            write_output(path, &svg)?;
            println!("wrote {}", path.display());
        }
        None => print!("{svg}"),
    }
    Ok(())
}
