//! On-disk formats: config parsing, trajectory/histogram CSV, edge lists,
//! world JSON, fit reports and run manifests. Everything written here is
//! byte-deterministic for a given input; nothing embeds timestamps, paths
//! or machine details.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{fit_power_law, DegreeHistogram, FitError, FitMethod, PowerLawFit};
use crate::engine::{IterationRecord, Trajectory, WwwState};
use crate::experiments::{CellRun, SweepConfig, SweepResult, TrendReport};
use crate::params::{ModelParams, ParamWarning};
use crate::world::{TopicWorld, WorldError, WorldTriplets};

/// Failure reading a JSON config.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown config key `{key}` at line {line}, column {column}")]
    UnknownKey {
        key: String,
        line: usize,
        column: usize,
    },
}

fn classify(err: serde_json::Error) -> ConfigError {
    let message = err.to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return ConfigError::UnknownKey {
                key: rest[..end].to_string(),
                line: err.line(),
                column: err.column(),
            };
        }
    }
    ConfigError::Parse {
        line: err.line(),
        column: err.column(),
        message,
    }
}

/// Parses run parameters from JSON. Unknown keys are hard errors.
pub fn load_model_params(text: &str) -> Result<ModelParams, ConfigError> {
    serde_json::from_str(text).map_err(classify)
}

/// Parses a sweep config from JSON. Unknown keys are hard errors.
pub fn load_sweep_config(text: &str) -> Result<SweepConfig, ConfigError> {
    serde_json::from_str(text).map_err(classify)
}

/// A file whose content does not match its documented schema.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("schema mismatch in {what}: {detail}")]
pub struct SchemaError {
    pub what: &'static str,
    pub detail: String,
}

fn schema(what: &'static str, detail: impl Into<String>) -> SchemaError {
    SchemaError {
        what,
        detail: detail.into(),
    }
}

pub const TRAJECTORY_HEADER: &str = "iteration,new_links,cumulative_links,attained_utility,efficiency";

/// Serializes per-iteration records as CSV, one row per iteration.
pub fn trajectory_to_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration, r.new_links, r.cumulative_links, r.attained_utility, r.efficiency
        ));
    }
    out
}

/// Parses a trajectory CSV produced by [`trajectory_to_csv`].
pub fn trajectory_from_csv(text: &str) -> Result<Vec<IterationRecord>, SchemaError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRAJECTORY_HEADER => {}
        other => {
            return Err(schema(
                "trajectory csv",
                format!("expected header `{TRAJECTORY_HEADER}`, got {other:?}"),
            ))
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(schema(
                "trajectory csv",
                format!("row {} has {} fields, expected 5", idx + 1, fields.len()),
            ));
        }
        let parse_usize = |s: &str, name: &str| {
            s.parse::<usize>().map_err(|_| {
                schema(
                    "trajectory csv",
                    format!("row {}: `{s}` is not a valid {name}", idx + 1),
                )
            })
        };
        let parse_f64 = |s: &str, name: &str| {
            s.parse::<f64>().map_err(|_| {
                schema(
                    "trajectory csv",
                    format!("row {}: `{s}` is not a valid {name}", idx + 1),
                )
            })
        };
        records.push(IterationRecord {
            iteration: parse_usize(fields[0], "iteration")?,
            new_links: parse_usize(fields[1], "link count")?,
            cumulative_links: parse_usize(fields[2], "link count")?,
            attained_utility: parse_f64(fields[3], "utility")?,
            efficiency: parse_f64(fields[4], "efficiency")?,
        });
    }
    Ok(records)
}

/// The final link set, one `user<TAB>doc` line in ascending (user, doc)
/// order, no header.
pub fn edges_to_tsv(state: &WwwState) -> String {
    let mut out = String::new();
    for (user, doc) in state.links() {
        out.push_str(&format!("{user}\t{doc}\n"));
    }
    out
}

pub const HISTOGRAM_HEADER: &str = "degree,count";

/// Serializes a degree histogram as CSV, ascending degree, observed degrees
/// only.
pub fn histogram_to_csv(hist: &DegreeHistogram) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for (&degree, &count) in hist.counts() {
        out.push_str(&format!("{degree},{count}\n"));
    }
    out
}

/// Parses a histogram CSV produced by [`histogram_to_csv`].
pub fn histogram_from_csv(text: &str) -> Result<DegreeHistogram, SchemaError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HISTOGRAM_HEADER => {}
        other => {
            return Err(schema(
                "degree histogram csv",
                format!("expected header `{HISTOGRAM_HEADER}`, got {other:?}"),
            ))
        }
    }
    let mut degrees = Vec::new();
    let mut last: Option<usize> = None;
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(schema(
                "degree histogram csv",
                format!("row {} has {} fields, expected 2", idx + 1, fields.len()),
            ));
        }
        let degree: usize = fields[0].parse().map_err(|_| {
            schema(
                "degree histogram csv",
                format!("row {}: `{}` is not a degree", idx + 1, fields[0]),
            )
        })?;
        let count: usize = fields[1].parse().map_err(|_| {
            schema(
                "degree histogram csv",
                format!("row {}: `{}` is not a count", idx + 1, fields[1]),
            )
        })?;
        if last.is_some_and(|l| l >= degree) {
            return Err(schema(
                "degree histogram csv",
                format!("row {}: degrees must be strictly ascending", idx + 1),
            ));
        }
        last = Some(degree);
        degrees.extend(std::iter::repeat(degree).take(count));
    }
    if degrees.is_empty() {
        return Err(schema("degree histogram csv", "no data rows"));
    }
    Ok(DegreeHistogram::from_degrees(&degrees))
}

/// Pretty JSON of the full world in sparse triplet form.
pub fn world_to_json(world: &TopicWorld) -> String {
    let mut text = serde_json::to_string_pretty(&WorldTriplets::from_world(world))
        .expect("triplet serialization cannot fail");
    text.push('\n');
    text
}

/// Failure loading a world file.
#[derive(Debug, Error)]
pub enum WorldLoadError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Parses and re-validates a world JSON file, including the check that the
/// stored utilities match the document and user entries.
pub fn world_from_json(text: &str) -> Result<TopicWorld, WorldLoadError> {
    let triplets: WorldTriplets = serde_json::from_str(text).map_err(classify)?;
    Ok(triplets.into_world()?)
}

/// Result of one fit attempt, in the shape written to `fits.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FitOutcome {
    Ok(PowerLawFit),
    Error { method: FitMethod, message: String },
}

impl FitOutcome {
    fn from_result(method: FitMethod, result: Result<PowerLawFit, FitError>) -> Self {
        match result {
            Ok(fit) => FitOutcome::Ok(fit),
            Err(e) => FitOutcome::Error {
                method,
                message: e.to_string(),
            },
        }
    }
}

/// Runs both fitters on a histogram and reports each outcome.
pub fn fit_both(hist: &DegreeHistogram) -> Vec<FitOutcome> {
    [FitMethod::Mle, FitMethod::LoglogLs]
        .into_iter()
        .map(|m| FitOutcome::from_result(m, fit_power_law(hist, m)))
        .collect()
}

/// Pretty JSON for a list of fit outcomes.
pub fn fits_to_json(fits: &[FitOutcome]) -> String {
    let mut text = serde_json::to_string_pretty(fits).expect("fit serialization cannot fail");
    text.push('\n');
    text
}

pub fn fits_from_json(text: &str) -> Result<Vec<FitOutcome>, ConfigError> {
    serde_json::from_str(text).map_err(classify)
}

const TOOL_NAME: &str = "kkps-sim";

/// Metadata written next to every single-run output tree. The parameter
/// block echoes the fully resolved settings, so a manifest can be replayed
/// as a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: ModelParams,
    pub warnings: Vec<String>,
    pub total_utility: f64,
    pub converged: bool,
    pub iterations: usize,
    pub total_links: usize,
    pub outputs: Vec<String>,
}

/// Metadata written next to every sweep output tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: SweepConfig,
    pub failed_cells: Vec<FailedCell>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub label: String,
    pub error: String,
}

fn manifest_json<T: Serialize>(manifest: &T) -> String {
    let mut text =
        serde_json::to_string_pretty(manifest).expect("manifest serialization cannot fail");
    text.push('\n');
    text
}

pub fn run_manifest_from_json(text: &str) -> Result<RunManifest, ConfigError> {
    serde_json::from_str(text).map_err(classify)
}

pub fn sweep_manifest_from_json(text: &str) -> Result<SweepManifest, ConfigError> {
    serde_json::from_str(text).map_err(classify)
}

/// Everything needed to lay a single run down on disk.
#[derive(Debug, Clone, Copy)]
pub struct RunArtifacts<'a> {
    pub command: &'a str,
    pub params: &'a ModelParams,
    pub warnings: &'a [ParamWarning],
    pub trajectory: &'a Trajectory,
    pub state: &'a WwwState,
    pub total_utility: f64,
    /// Included as `world.json` when present.
    pub world: Option<&'a TopicWorld>,
}

/// Writes `trajectory.csv`, `edges.tsv`, `degree_histogram.csv`,
/// `fits.json`, optionally `world.json`, and `manifest.json` into `dir`,
/// creating it if needed. Returns the file names written.
pub fn write_run_outputs(dir: &Path, art: &RunArtifacts) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    let mut emit = |name: &str, content: String| -> io::Result<()> {
        fs::write(dir.join(name), content)?;
        outputs.push(name.to_string());
        Ok(())
    };

    emit("trajectory.csv", trajectory_to_csv(&art.trajectory.records))?;
    emit("edges.tsv", edges_to_tsv(art.state))?;
    let hist = DegreeHistogram::from_state(art.state);
    emit("degree_histogram.csv", histogram_to_csv(&hist))?;
    emit("fits.json", fits_to_json(&fit_both(&hist)))?;
    if let Some(world) = art.world {
        emit("world.json", world_to_json(world))?;
    }

    let mut listed = outputs.clone();
    listed.push("manifest.json".to_string());
    let manifest = RunManifest {
        tool: TOOL_NAME.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: art.command.to_string(),
        params: art.params.clone(),
        warnings: art.warnings.iter().map(|w| w.to_string()).collect(),
        total_utility: art.total_utility,
        converged: art.trajectory.converged,
        iterations: art.trajectory.records.len(),
        total_links: art.state.link_count(),
        outputs: listed.clone(),
    };
    fs::write(dir.join("manifest.json"), manifest_json(&manifest))?;
    Ok(listed)
}

/// File-name-safe form of a cell label.
fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '=' || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub const CELL_TRAJECTORY_HEADER: &str =
    "seed,iteration,new_links,cumulative_links,attained_utility,efficiency";

fn cell_trajectories_csv(runs: &[crate::experiments::RunRecord]) -> String {
    let mut out = String::from(CELL_TRAJECTORY_HEADER);
    out.push('\n');
    for run in runs {
        for r in &run.trajectory {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                run.seed, r.iteration, r.new_links, r.cumulative_links, r.attained_utility,
                r.efficiency
            ));
        }
    }
    out
}

pub const AGGREGATE_HEADER: &str = "index,label,runs,final_efficiency_median,final_efficiency_q1,final_efficiency_q3,early_capture_median,iterations_median,total_links_median,mle_exponent_median,mle_goodness_median,ls_exponent_median,ls_goodness_median,mle_failures,ls_failures";

fn aggregate_csv(result: &SweepResult) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    let opt = |s: &Option<crate::experiments::Stats>| match s {
        Some(stats) => stats.median.to_string(),
        None => String::new(),
    };
    for cell in result.completed() {
        let a = &cell.aggregate;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cell.index,
            cell.label,
            cell.runs.len(),
            a.final_efficiency.median,
            a.final_efficiency.q1,
            a.final_efficiency.q3,
            a.early_capture.median,
            a.iterations.median,
            a.total_links.median,
            opt(&a.mle_exponent),
            opt(&a.mle_goodness),
            opt(&a.ls_exponent),
            opt(&a.ls_goodness),
            a.mle_failures,
            a.ls_failures
        ));
    }
    out
}

/// Writes `aggregate.csv`, one per-cell trajectory CSV under `cells/`,
/// `trends.json` when a report is given, and `manifest.json` into `dir`.
/// Returns the relative paths written.
pub fn write_sweep_outputs(
    dir: &Path,
    command: &str,
    result: &SweepResult,
    trends: Option<&TrendReport>,
) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir.join("cells"))?;
    let mut outputs = Vec::new();

    for cell in result.completed() {
        let name = format!("cells/{:03}_{}.csv", cell.index, sanitize(&cell.label));
        fs::write(dir.join(&name), cell_trajectories_csv(&cell.runs))?;
        outputs.push(name);
    }
    fs::write(dir.join("aggregate.csv"), aggregate_csv(result))?;
    outputs.push("aggregate.csv".to_string());
    if let Some(report) = trends {
        let mut text =
            serde_json::to_string_pretty(report).expect("trend serialization cannot fail");
        text.push('\n');
        fs::write(dir.join("trends.json"), text)?;
        outputs.push("trends.json".to_string());
    }

    let failed_cells: Vec<FailedCell> = result
        .cells
        .iter()
        .filter_map(|c| match c {
            CellRun::Failed { label, error, .. } => Some(FailedCell {
                label: label.clone(),
                error: error.clone(),
            }),
            CellRun::Completed(_) => None,
        })
        .collect();
    let mut listed = outputs.clone();
    listed.push("manifest.json".to_string());
    let manifest = SweepManifest {
        tool: TOOL_NAME.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config: result.config.clone(),
        failed_cells,
        outputs: listed.clone(),
    };
    fs::write(dir.join("manifest.json"), manifest_json(&manifest))?;
    Ok(listed)
}
