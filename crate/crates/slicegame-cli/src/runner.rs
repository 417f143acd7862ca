//! Shared solve-and-measure pipeline used by the `metrics` and `sweep`
//! subcommands.

use anyhow::Result;
use slicegame_core::prelude::*;

use crate::formats::ResultRow;

/// Solves the game, evaluates the requested metrics and assembles one
/// result row.
pub fn solve_and_measure(
    scenario: &NetworkScenario,
    dynamics: &DynamicsOptions,
    request: &MetricsOptions,
    cell: (String, String, String),
) -> Result<ResultRow> {
    let (alpha_cell, density_cell, rep) = cell;
    let mut opts = dynamics.clone();
    opts.record_trace = false;
    let (_, report) = run_dynamics(scenario, None, &opts).map_err(anyhow::Error::new)?;
    let metrics = compute_metrics_report(scenario, &report.final_allocation, request)
        .map_err(anyhow::Error::new)?;

    let mut notes: Vec<String> = metrics.flags.clone();
    if let MetricValue::NotApplicable(reason) = &metrics.poa_gap {
        if reason != "not requested" {
            notes.push(format!("poa: NA, {reason}"));
        }
    }
    let mut envy_values = Vec::new();
    for entry in &metrics.envy_matrix {
        match &entry.envy {
            MetricValue::Value(v) => envy_values.push(*v),
            MetricValue::NotApplicable(reason) => {
                notes.push(format!("envy {} -> {}: NA, {reason}", entry.from, entry.to));
            }
        }
    }
    let envy_stats = if envy_values.is_empty() {
        (None, None, None)
    } else {
        let min = envy_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = envy_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = envy_values.iter().sum::<f64>() / envy_values.len() as f64;
        (Some(min), Some(max), Some(mean))
    };

    Ok(ResultRow {
        scenario: scenario.metadata().label.clone(),
        seed: scenario
            .metadata()
            .seed
            .map(|s| s.to_string())
            .unwrap_or_default(),
        alpha_cell,
        density_cell,
        rep,
        rounds: report.rounds_used,
        converged: report.converged,
        nash_residual: report.nash_residual,
        utility_ne: metrics.utility_ne,
        utility_ss: metrics.utility_ss,
        utility_so: metrics.utility_so.value(),
        per_slice_ne: metrics.per_slice_ne.clone(),
        per_slice_ss: metrics.per_slice_ss.clone(),
        poa_gap: metrics.poa_gap.value(),
        gain_over_ss_pct: metrics.gain_over_ss_percent.value(),
        loss_vs_so_pct: metrics.loss_vs_so_percent.value(),
        envy_min: envy_stats.0,
        envy_max: envy_stats.1,
        envy_mean: envy_stats.2,
        envy_pairs: envy_values.len(),
        notes: notes.join("; "),
    })
}
