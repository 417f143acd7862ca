//! File formats: the scenario JSON schema, solver reports, trace CSV and
//! result-row CSV with column manifests.
//!
//! All output is deterministic for a fixed input: maps are ordered, floats
//! print in Rust's shortest round-trip form, CSV uses comma separators,
//! `.` decimals, a header row, UTF-8 and LF line endings.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use slicegame_core::prelude::*;

/// Top-level scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub meta: MetaSection,
    pub base_stations: Vec<StationEntry>,
    pub slices: Vec<SliceEntry>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSection {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationEntry {
    pub id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceEntry {
    pub id: String,
    pub share: f64,
    pub alpha: f64,
    pub users: Vec<UserEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub id: String,
    pub bs: String,
    pub capacity: f64,
    pub phi: f64,
}

impl ScenarioFile {
    pub fn from_scenario(scenario: &NetworkScenario) -> Self {
        let slices = scenario
            .slices()
            .iter()
            .enumerate()
            .map(|(o, slice)| SliceEntry {
                id: slice.id.clone(),
                share: slice.share,
                alpha: slice.alpha,
                users: scenario
                    .users_of_slice(o)
                    .iter()
                    .map(|&u| {
                        let spec = &scenario.users()[u];
                        UserEntry {
                            id: spec.id.clone(),
                            bs: spec.base_station.clone(),
                            capacity: spec.capacity,
                            phi: spec.priority,
                        }
                    })
                    .collect(),
            })
            .collect();
        ScenarioFile {
            meta: MetaSection {
                seed: scenario.metadata().seed,
                label: scenario.metadata().label.clone(),
                labels: scenario.metadata().labels.clone(),
            },
            base_stations: scenario
                .base_station_ids()
                .iter()
                .map(|id| StationEntry { id: id.clone() })
                .collect(),
            slices,
        }
    }

    pub fn into_scenario(self) -> Result<NetworkScenario> {
        let stations: Vec<String> = self.base_stations.into_iter().map(|s| s.id).collect();
        let mut slices = Vec::new();
        let mut users = Vec::new();
        for entry in self.slices {
            slices.push(SliceSpec::new(entry.id.clone(), entry.share, entry.alpha));
            for user in entry.users {
                users.push(UserSpec {
                    id: user.id,
                    slice_id: entry.id.clone(),
                    base_station: user.bs,
                    capacity: user.capacity,
                    priority: user.phi,
                });
            }
        }
        let metadata = ScenarioMetadata {
            label: self.meta.label,
            seed: self.meta.seed,
            labels: self.meta.labels,
        };
        NetworkScenario::new(stations, slices, users, metadata)
            .map_err(|e| anyhow::Error::new(e).context("scenario file is structurally invalid"))
    }
}

/// Reads a scenario file, reporting schema violations with their JSON path
/// and refusing instances that fail hard validation (warnings pass).
pub fn read_scenario(path: &Path) -> Result<NetworkScenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file `{}`", path.display()))?;
    let mut deserializer = serde_json::Deserializer::from_str(&text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut deserializer)
        .map_err(|e| anyhow::anyhow!("{}: at `{}`: {}", path.display(), e.path(), e.inner()))?;
    let scenario = file.into_scenario()?;
    let report = validate_scenario(&scenario);
    if !report.is_valid() {
        bail!(
            "scenario `{}` fails validation:\n  {}",
            path.display(),
            report.errors.join("\n  ")
        );
    }
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(scenario)
}

/// Writes a scenario document (pretty JSON, LF endings, trailing newline).
pub fn write_scenario(path: &Path, scenario: &NetworkScenario) -> Result<()> {
    let file = ScenarioFile::from_scenario(scenario);
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write `{}`", path.display()))?;
    Ok(())
}

/// Serialized equilibrium report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub converged: bool,
    pub rounds_used: usize,
    pub max_relative_change: f64,
    pub nash_residual: f64,
    pub stationarity_residuals: BTreeMap<String, f64>,
    pub utility_per_slice: BTreeMap<String, f64>,
    pub network_utility: f64,
    pub weights: BTreeMap<String, f64>,
}

impl ReportFile {
    pub fn new(scenario: &NetworkScenario, report: &EquilibriumReport) -> Result<Self> {
        let rates = compute_rates(scenario, &report.final_allocation)
            .map_err(anyhow::Error::new)?;
        let utility_per_slice: BTreeMap<String, f64> = scenario
            .slices()
            .iter()
            .enumerate()
            .map(|(o, s)| (s.id.clone(), slice_utility_from_rates(scenario, o, &rates)))
            .collect();
        Ok(ReportFile {
            converged: report.converged,
            rounds_used: report.rounds_used,
            max_relative_change: report.max_relative_change,
            nash_residual: report.nash_residual,
            stationarity_residuals: scenario
                .slices()
                .iter()
                .zip(&report.stationarity_residuals)
                .map(|(s, &r)| (s.id.clone(), r))
                .collect(),
            utility_per_slice,
            network_utility: network_utility_from_rates(scenario, &rates),
            weights: report.final_allocation.to_map(scenario),
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write `{}`", path.display()))?;
    Ok(())
}

/// Formats a float for CSV: shortest round-trip decimal, `.` separator,
/// scientific notation where shorter (the same encoding the JSON output
/// uses), with non-finite values spelled out.
pub fn csv_float(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        serde_json::to_string(&x).expect("finite float serializes")
    }
}

/// Writes a CSV (header + rows) and a sibling `<name>.manifest.txt`
/// documenting every column.
pub fn write_csv_with_manifest(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
    column_docs: &[(&str, &str)],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("cannot write `{}`", path.display()))?;

    let mut manifest = String::from("column,description\n");
    for (name, doc) in column_docs {
        manifest.push_str(&format!("{name},{doc}\n"));
    }
    let manifest_path = path.with_extension("manifest.txt");
    fs::write(&manifest_path, manifest)
        .with_context(|| format!("cannot write `{}`", manifest_path.display()))?;
    Ok(())
}

/// One scenario's metric outcomes, flattened for CSV. Per-slice utility
/// lists are semicolon-joined (slice order), keeping the row width stable
/// across scenarios with different slice counts.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub scenario: String,
    pub seed: String,
    pub alpha_cell: String,
    pub density_cell: String,
    pub rep: String,
    pub rounds: usize,
    pub converged: bool,
    pub nash_residual: f64,
    pub utility_ne: f64,
    pub utility_ss: f64,
    pub utility_so: Option<f64>,
    pub per_slice_ne: Vec<f64>,
    pub per_slice_ss: Vec<f64>,
    pub poa_gap: Option<f64>,
    pub gain_over_ss_pct: Option<f64>,
    pub loss_vs_so_pct: Option<f64>,
    pub envy_min: Option<f64>,
    pub envy_max: Option<f64>,
    pub envy_mean: Option<f64>,
    pub envy_pairs: usize,
    pub notes: String,
}

pub const RESULT_HEADER: &[&str] = &[
    "scenario", "seed", "alpha_cell", "density_cell", "rep", "rounds", "converged",
    "nash_residual", "utility_ne", "utility_ss", "utility_so", "per_slice_ne", "per_slice_ss",
    "poa_gap", "gain_over_ss_pct", "loss_vs_so_pct", "envy_min", "envy_max", "envy_mean",
    "envy_pairs", "notes",
];

pub const RESULT_COLUMN_DOCS: &[(&str, &str)] = &[
    ("scenario", "scenario label"),
    ("seed", "RNG seed of the scenario (empty when loaded from file without one)"),
    ("alpha_cell", "sweep cell fairness parameter (NA outside sweeps)"),
    ("density_cell", "sweep cell user density (NA outside sweeps)"),
    ("rep", "repetition index within the sweep cell (NA outside sweeps)"),
    ("rounds", "best-response rounds used"),
    ("converged", "true when the round change fell below the tolerance"),
    ("nash_residual", "largest unilateral utility improvement still available (nats)"),
    ("utility_ne", "network utility at the equilibrium (nats)"),
    ("utility_ss", "network utility under static slicing (nats)"),
    ("utility_so", "network utility at the social optimum; closed form for alpha=1 and a local numeric optimum otherwise (NA when not requested)"),
    ("per_slice_ne", "per-slice equilibrium utilities; semicolon-joined in slice order"),
    ("per_slice_ss", "per-slice static-slicing utilities; semicolon-joined"),
    ("poa_gap", "utility_so - utility_ne in nats (NA unless every slice has alpha=1)"),
    ("gain_over_ss_pct", "extra capacity static slicing needs to match the equilibrium, percent"),
    ("loss_vs_so_pct", "extra capacity the equilibrium needs to match the social optimum, percent"),
    ("envy_min", "smallest directed envy over measured slice pairs (nats)"),
    ("envy_max", "largest directed envy over measured slice pairs (nats)"),
    ("envy_mean", "mean directed envy over measured slice pairs (nats)"),
    ("envy_pairs", "number of directed pairs measured"),
    ("notes", "inapplicable metrics and their reasons; ';'-joined"),
];

impl ResultRow {
    pub fn to_csv(&self) -> Vec<String> {
        let join = |v: &[f64]| -> String {
            v.iter().map(|&x| csv_float(x)).collect::<Vec<_>>().join(";")
        };
        let opt = |v: &Option<f64>| v.map(csv_float).unwrap_or_else(|| "NA".to_string());
        vec![
            self.scenario.clone(),
            self.seed.clone(),
            self.alpha_cell.clone(),
            self.density_cell.clone(),
            self.rep.clone(),
            self.rounds.to_string(),
            self.converged.to_string(),
            csv_float(self.nash_residual),
            csv_float(self.utility_ne),
            csv_float(self.utility_ss),
            opt(&self.utility_so),
            join(&self.per_slice_ne),
            join(&self.per_slice_ss),
            opt(&self.poa_gap),
            opt(&self.gain_over_ss_pct),
            opt(&self.loss_vs_so_pct),
            opt(&self.envy_min),
            opt(&self.envy_max),
            opt(&self.envy_mean),
            self.envy_pairs.to_string(),
            self.notes.clone(),
        ]
    }
}

/// Per-round trace rows: one line per (round, slice).
pub fn trace_rows(scenario: &NetworkScenario, trace: &GameTrace) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (r, record) in trace.rounds.iter().enumerate() {
        for (o, slice) in scenario.slices().iter().enumerate() {
            let extremes = &record.slice_deltas[o];
            let max_abs = extremes.max.abs().max(extremes.min.abs());
            rows.push(vec![
                (r + 1).to_string(),
                slice.id.clone(),
                csv_float(record.lyapunov),
                csv_float(max_abs),
                csv_float(record.utility_per_slice[o]),
            ]);
        }
    }
    rows
}

pub const TRACE_HEADER: &[&str] = &["round", "slice", "lyapunov", "max_delta", "utility"];

pub const TRACE_COLUMN_DOCS: &[(&str, &str)] = &[
    ("round", "best-response round, 1-based"),
    ("slice", "slice id"),
    ("lyapunov", "round potential V (same value repeated for each slice of a round)"),
    ("max_delta", "largest absolute relative weight change of this slice in the round"),
    ("utility", "slice utility at the end of the round (nats for alpha=1)"),
];
