//! Grid sweeps: cells x repetitions, raw rows plus a mean / 95% CI
//! aggregate per cell.
//!
//! Cells run concurrently; every (cell, repetition) derives its own RNG
//! seed from the master seed, so concurrency never changes the output and
//! a fixed config yields byte-identical files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;
use slicegame_core::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::formats::{
    csv_float, write_csv_with_manifest, ResultRow, RESULT_COLUMN_DOCS, RESULT_HEADER,
};
use crate::runner::solve_and_measure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    #[serde(default = "default_slices")]
    pub slices: (usize, usize),
    #[serde(default = "default_stations")]
    pub stations: (usize, usize),
    /// Base density range; a density axis overrides it cell by cell.
    #[serde(default = "default_density")]
    pub density: (f64, f64),
    #[serde(default)]
    pub share_rule: ShareRuleConfig,
    #[serde(default)]
    pub capacity: CapacityConfig,
    #[serde(default)]
    pub alpha_grid: Vec<f64>,
    #[serde(default)]
    pub density_grid: Vec<f64>,
    pub repetitions: usize,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

fn default_slices() -> (usize, usize) {
    (2, 6)
}
fn default_stations() -> (usize, usize) {
    (20, 20)
}
fn default_density() -> (f64, f64) {
    (5.0, 5.0)
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShareRuleConfig {
    Equal,
    #[default]
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityConfig {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
    Lognormal { mu: f64, sigma: f64 },
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig::Lognormal {
            mu: 10.0f64.ln(),
            sigma: 0.5,
        }
    }
}

impl CapacityConfig {
    pub fn to_sampler(&self) -> CapacitySampler {
        match *self {
            CapacityConfig::Constant(c) => CapacitySampler::Constant(c),
            CapacityConfig::Uniform { lo, hi } => CapacitySampler::Uniform { lo, hi },
            CapacityConfig::Lognormal { mu, sigma } => CapacitySampler::LogNormal { mu, sigma },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
}

fn default_tol() -> f64 {
    1e-6
}
fn default_max_rounds() -> usize {
    500
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            tol: default_tol(),
            max_rounds: default_max_rounds(),
        }
    }
}

impl DynamicsConfig {
    pub fn to_options(&self) -> DynamicsOptions {
        DynamicsOptions {
            tol: self.tol,
            max_rounds: self.max_rounds,
            ..DynamicsOptions::default()
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default)]
    pub poa: bool,
    #[serde(default = "default_true")]
    pub gain: bool,
    #[serde(default)]
    pub loss: bool,
    /// "strict", "permissive" or absent.
    #[serde(default)]
    pub envy: Option<String>,
}

fn default_true() -> bool {
    true
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            poa: false,
            gain: true,
            loss: false,
            envy: None,
        }
    }
}

impl MetricsConfig {
    pub fn to_request(&self) -> Result<MetricsOptions> {
        let envy = match self.envy.as_deref() {
            None => None,
            Some("strict") => Some(ExchangeMode::Strict),
            Some("permissive") => Some(ExchangeMode::Permissive),
            Some(other) => bail!("unknown envy mode `{other}` (strict or permissive)"),
        };
        Ok(MetricsOptions {
            poa: self.poa,
            gain: self.gain,
            loss: self.loss,
            envy,
            ..MetricsOptions::default()
        })
    }
}

/// One grid cell: an alpha and/or a density override.
#[derive(Debug, Clone)]
struct Cell {
    alpha: Option<f64>,
    density: Option<f64>,
}

/// splitmix64: a well-mixed per-cell seed derivation.
fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn run_sweep(config: &SweepConfig, out_dir: &Path) -> Result<()> {
    if config.repetitions == 0 {
        bail!("repetitions must be at least 1");
    }
    if config.alpha_grid.is_empty() && config.density_grid.is_empty() {
        bail!("sweep needs at least one non-empty axis (alpha_grid or density_grid)");
    }
    let request = config.metrics.to_request()?;
    let dynamics = config.dynamics.to_options();

    let mut cells = Vec::new();
    let alphas: Vec<Option<f64>> = if config.alpha_grid.is_empty() {
        vec![None]
    } else {
        config.alpha_grid.iter().map(|&a| Some(a)).collect()
    };
    let densities: Vec<Option<f64>> = if config.density_grid.is_empty() {
        vec![None]
    } else {
        config.density_grid.iter().map(|&d| Some(d)).collect()
    };
    for &alpha in &alphas {
        for &density in &densities {
            cells.push(Cell { alpha, density });
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.repetitions).map(move |r| (c, r)))
        .collect();
    let rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|&(cell_index, rep)| -> Result<ResultRow> {
            let cell = &cells[cell_index];
            let seed = derive_seed(
                config.seed,
                (cell_index as u64) << 32 | rep as u64,
            );
            let params = RandomScenarioParams {
                n_slices: config.slices,
                n_stations: config.stations,
                user_density: cell
                    .density
                    .map(|d| (d, d))
                    .unwrap_or(config.density),
                alpha: cell
                    .alpha
                    .map(|a| AlphaRule::Range { lo: a, hi: a })
                    .unwrap_or(AlphaRule::Range { lo: 0.5, hi: 3.0 }),
                share_rule: match config.share_rule {
                    ShareRuleConfig::Equal => ShareRule::Equal,
                    ShareRuleConfig::Random => ShareRule::RandomSimplex,
                },
                capacity: config.capacity.to_sampler(),
                seed,
                ..RandomScenarioParams::default()
            };
            let scenario = random_scenario(&params).map_err(anyhow::Error::new)?;
            solve_and_measure(
                &scenario,
                &dynamics,
                &request,
                (
                    cell.alpha.map(|a| format!("{a}")).unwrap_or_else(|| "NA".into()),
                    cell.density.map(|d| format!("{d}")).unwrap_or_else(|| "NA".into()),
                    rep.to_string(),
                ),
            )
        })
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create `{}`", out_dir.display()))?;
    let cell_rows: Vec<Vec<String>> = rows.iter().map(|r| r.to_csv()).collect();
    write_csv_with_manifest(
        &out_dir.join("cells.csv"),
        RESULT_HEADER,
        &cell_rows,
        RESULT_COLUMN_DOCS,
    )?;

    // Aggregate per cell: mean and 95% Student-t confidence half-width.
    let mut aggregate_rows = Vec::new();
    for (cell_index, cell) in cells.iter().enumerate() {
        let members: Vec<&ResultRow> = rows
            [cell_index * config.repetitions..(cell_index + 1) * config.repetitions]
            .iter()
            .collect();
        let mut row = vec![
            cell.alpha.map(|a| format!("{a}")).unwrap_or_else(|| "NA".into()),
            cell.density.map(|d| format!("{d}")).unwrap_or_else(|| "NA".into()),
            members.len().to_string(),
        ];
        for metric in [
            members.iter().map(|r| r.rounds as f64).collect::<Vec<f64>>(),
            members.iter().filter_map(|r| r.gain_over_ss_pct).collect(),
            members.iter().filter_map(|r| r.loss_vs_so_pct).collect(),
            members.iter().filter_map(|r| r.poa_gap).collect(),
            members.iter().filter_map(|r| r.envy_max).collect(),
        ] {
            let (mean, half_width) = mean_ci(&metric)?;
            row.push(csv_float(mean));
            row.push(csv_float(half_width));
        }
        aggregate_rows.push(row);
    }
    write_csv_with_manifest(
        &out_dir.join("summary.csv"),
        &[
            "alpha_cell", "density_cell", "n",
            "rounds_mean", "rounds_ci95",
            "gain_over_ss_pct_mean", "gain_over_ss_pct_ci95",
            "loss_vs_so_pct_mean", "loss_vs_so_pct_ci95",
            "poa_gap_mean", "poa_gap_ci95",
            "envy_max_mean", "envy_max_ci95",
        ],
        &aggregate_rows,
        &[
            ("alpha_cell", "cell fairness parameter (NA when not an axis)"),
            ("density_cell", "cell user density (NA when not an axis)"),
            ("n", "repetitions aggregated"),
            ("rounds_mean", "mean rounds to convergence"),
            ("rounds_ci95", "95% Student-t confidence half-width of the mean"),
            ("gain_over_ss_pct_mean", "mean capacity-equivalent gain over static slicing, percent"),
            ("gain_over_ss_pct_ci95", "95% confidence half-width"),
            ("loss_vs_so_pct_mean", "mean capacity-equivalent loss vs the social optimum, percent"),
            ("loss_vs_so_pct_ci95", "95% confidence half-width"),
            ("poa_gap_mean", "mean optimality gap in nats (alpha=1 cells only)"),
            ("poa_gap_ci95", "95% confidence half-width"),
            ("envy_max_mean", "mean of the per-scenario largest directed envy"),
            ("envy_max_ci95", "95% confidence half-width"),
        ],
    )?;
    Ok(())
}

/// Sample mean and 95% Student-t confidence half-width. NaN for empty
/// samples, zero half-width for singletons.
fn mean_ci(sample: &[f64]) -> Result<(f64, f64)> {
    if sample.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    if sample.len() < 2 {
        return Ok((mean, 0.0));
    }
    let variance = sample.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let dist = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| anyhow::anyhow!("student-t setup: {e}"))?;
    let t = dist.inverse_cdf(0.975);
    Ok((mean, t * (variance / n).sqrt()))
}
