//! Round-robin best-response dynamics, convergence detection and
//! equilibrium certification.
//!
//! Slices update their weights sequentially, one at a time, in the same
//! fixed order every round. The convergence monitor is the vector of
//! relative weight changes over a full round,
//! `w_u(r+1) = w_u(r) (1 + delta_u(r+1))`, and the associated potential
//!
//! ```text
//! V(r) = max_o max(1 + max_u delta_u, 1 / (1 + min_u delta_u)) - 1
//! ```
//!
//! which is non-negative, zero exactly at a fixed point, and strictly
//! decreasing along the dynamics when every fairness parameter lies in
//! [1, 2].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::best_response::{
    apply_slice_weights, best_response, stationarity_residual_perturbed, BestResponseOptions,
};
use crate::error::{Error, Result};
use crate::model::{
    compute_rates, slice_utility_from_rates, NetworkScenario, WeightAllocation,
};

/// Slice update order within a round.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateOrder {
    /// Slice index order (the default).
    SliceIndex,
    /// One seeded shuffle fixed for the whole run.
    Shuffled { seed: u64 },
}

/// Stopping rule for the dynamics loop.
#[derive(Debug, Clone, PartialEq)]
pub enum StoppingRule {
    /// Stop when the largest componentwise relative weight change over a
    /// full round falls below the tolerance (the default).
    RelativeWeightChange,
    /// Stop when the largest per-slice utility change over a full round
    /// falls below the tolerance.
    UtilityChange,
}

#[derive(Debug, Clone)]
pub struct DynamicsOptions {
    pub tol: f64,
    pub max_rounds: usize,
    pub order: UpdateOrder,
    pub stopping: StoppingRule,
    pub best_response: BestResponseOptions,
    /// Record per-round snapshots, deltas and utilities in the trace.
    pub record_trace: bool,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions {
            tol: 1e-6,
            max_rounds: 500,
            order: UpdateOrder::SliceIndex,
            stopping: StoppingRule::RelativeWeightChange,
            best_response: BestResponseOptions::default(),
            record_trace: true,
        }
    }
}

/// Per-slice extremes of the relative weight changes in one round.
///
/// The ratio fields hold `w(next)/w(previous)` directly. Deriving them
/// from `1 + delta` would collapse to zero under f64 rounding when a
/// weight drops by hundreds of orders of magnitude, which extreme fairness
/// parameters do produce; the potential is therefore always computed from
/// the ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceDeltaExtremes {
    /// Largest relative change `max_ratio - 1`; zero for slices with no
    /// eligible user.
    pub max: f64,
    /// Smallest relative change `min_ratio - 1`.
    pub min: f64,
    /// Largest weight ratio across the slice's eligible users.
    pub max_ratio: f64,
    /// Smallest weight ratio.
    pub min_ratio: f64,
    /// Number of users entering the delta machinery.
    pub eligible: usize,
}

impl SliceDeltaExtremes {
    /// Builds the extremes from the ratio extremes.
    pub fn from_ratios(max_ratio: f64, min_ratio: f64, eligible: usize) -> Self {
        SliceDeltaExtremes {
            max: max_ratio - 1.0,
            min: min_ratio - 1.0,
            max_ratio,
            min_ratio,
            eligible,
        }
    }

    fn empty() -> Self {
        SliceDeltaExtremes::from_ratios(1.0, 1.0, 0)
    }
}

/// One completed round: the new allocation and everything measured on it.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub allocation: WeightAllocation,
    /// Per-user relative changes; `None` for users excluded by convention
    /// (zero weight both before and after, e.g. sole-occupancy users).
    pub user_deltas: Vec<Option<f64>>,
    pub slice_deltas: Vec<SliceDeltaExtremes>,
    pub lyapunov: f64,
    pub utility_per_slice: Vec<f64>,
    pub max_abs_delta: f64,
}

/// The full dynamics record: initial state plus one record per round.
#[derive(Debug, Clone)]
pub struct GameTrace {
    pub initial: WeightAllocation,
    pub rounds: Vec<RoundRecord>,
}

/// Where the dynamics ended and how trustworthy the endpoint is.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub final_allocation: WeightAllocation,
    pub rounds_used: usize,
    pub converged: bool,
    /// Largest relative weight change in the last round.
    pub max_relative_change: f64,
    /// Fixed-point residual of every slice at the final allocation.
    pub stationarity_residuals: Vec<f64>,
    /// Largest utility improvement any slice could still realize by a
    /// unilateral best response; at most epsilon certifies an epsilon-Nash
    /// equilibrium. Measured in utility units, so for strongly egalitarian
    /// slices (large fairness parameters, utilities scaling like
    /// `r^(1-alpha)`) it should be compared against the population's
    /// utility magnitudes rather than an absolute threshold.
    pub nash_residual: f64,
}

/// Weights below this are numerical noise: with fairness parameters as
/// extreme as 0.01 the within-station exponents reach 100 and dominated
/// users' weights land in (or flip across) the denormal range. Such users
/// are excluded from the relative-change machinery; the fixed-point
/// residual still covers them.
pub const WEIGHT_FLOOR: f64 = 1e-250;

/// Componentwise relative changes between two consecutive rounds.
///
/// Users with zero weight in both rounds are excluded (sole-occupancy users
/// stay at zero forever by convention), as are users below [`WEIGHT_FLOOR`]
/// on either side. A meaningful weight appearing where the previous weight
/// was exactly zero is an error: the relative-change machinery is undefined
/// there.
pub fn round_deltas(
    scenario: &NetworkScenario,
    previous: &WeightAllocation,
    next: &WeightAllocation,
) -> Result<(Vec<Option<f64>>, Vec<SliceDeltaExtremes>)> {
    let mut user_deltas = vec![None; scenario.n_users()];
    let mut extremes = Vec::with_capacity(scenario.n_slices());
    for o in 0..scenario.n_slices() {
        let mut max_ratio = f64::NEG_INFINITY;
        let mut min_ratio = f64::INFINITY;
        let mut eligible = 0;
        for &u in scenario.users_of_slice(o) {
            let before = previous.weight(u);
            let after = next.weight(u);
            if before == 0.0 && after >= WEIGHT_FLOOR {
                return Err(Error::Allocation(format!(
                    "user `{}` moved from zero to positive weight; relative \
                     change undefined",
                    scenario.users()[u].id
                )));
            }
            if before < WEIGHT_FLOOR || after < WEIGHT_FLOOR {
                continue;
            }
            let ratio = after / before;
            user_deltas[u] = Some(ratio - 1.0);
            max_ratio = max_ratio.max(ratio);
            min_ratio = min_ratio.min(ratio);
            eligible += 1;
        }
        if eligible == 0 {
            extremes.push(SliceDeltaExtremes::empty());
        } else {
            extremes.push(SliceDeltaExtremes::from_ratios(max_ratio, min_ratio, eligible));
        }
    }
    Ok((user_deltas, extremes))
}

/// The round potential from per-slice delta extremes:
/// `max_o max(1 + max delta, 1/(1 + min delta)) - 1`, evaluated on the
/// stored ratios.
///
/// Requires every ratio to be positive (weights stayed positive).
pub fn lyapunov(extremes: &[SliceDeltaExtremes]) -> Result<f64> {
    let mut value: f64 = 1.0;
    for e in extremes {
        if e.eligible == 0 {
            continue;
        }
        if e.min_ratio <= 0.0 {
            return Err(Error::Numeric(format!(
                "relative change {} wiped a weight out; potential undefined",
                e.min
            )));
        }
        value = value.max(e.max_ratio).max(1.0 / e.min_ratio);
    }
    Ok(value - 1.0)
}

/// Default starting point: the static-slicing weight vector (within-station
/// beta proportions, station budgets proportional to beta sums). Strictly
/// positive on contested stations for every user with positive priority.
pub fn default_initial_allocation(scenario: &NetworkScenario) -> Result<WeightAllocation> {
    let ss = crate::baselines::static_slicing(scenario)?;
    // Zero out sole-occupancy stations and renormalize each slice's budget
    // over its contested stations.
    let mut weights: Vec<f64> = (0..scenario.n_users())
        .map(|u| {
            if scenario.is_contested(scenario.station_of_user(u)) {
                ss.allocation.weight(u)
            } else {
                0.0
            }
        })
        .collect();
    for (o, slice) in scenario.slices().iter().enumerate() {
        let total: f64 = scenario.users_of_slice(o).iter().map(|&u| weights[u]).sum();
        if total > 0.0 {
            for &u in scenario.users_of_slice(o) {
                weights[u] *= slice.share / total;
            }
        }
    }
    WeightAllocation::new(scenario, weights)
}

/// Runs sequential best-response dynamics to (approximate) equilibrium.
///
/// Each round updates every slice once, in a fixed order. The loop stops
/// when the stopping rule's measure falls below `tol` or after
/// `max_rounds`. Solver failures carry round and slice context.
pub fn run_dynamics(
    scenario: &NetworkScenario,
    initial: Option<&WeightAllocation>,
    options: &DynamicsOptions,
) -> Result<(GameTrace, EquilibriumReport)> {
    let initial = match initial {
        Some(a) => a.clone(),
        None => default_initial_allocation(scenario)?,
    };
    let order: Vec<usize> = match &options.order {
        UpdateOrder::SliceIndex => (0..scenario.n_slices()).collect(),
        UpdateOrder::Shuffled { seed } => {
            let mut order: Vec<usize> = (0..scenario.n_slices()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            order
        }
    };

    let mut current = initial.clone();
    let mut trace = GameTrace {
        initial,
        rounds: Vec::new(),
    };
    let mut previous_utilities = utilities(scenario, &current);
    let mut converged = false;
    let mut rounds_used = 0;
    let mut last_max_delta = f64::INFINITY;

    for round in 0..options.max_rounds {
        let before = current.clone();
        for &o in &order {
            let weights = best_response(scenario, o, &current, &options.best_response)
                .map_err(|source| Error::Dynamics {
                    round,
                    slice: scenario.slices()[o].id.clone(),
                    source: Box::new(source),
                })?;
            apply_slice_weights(&mut current, &weights);
        }
        rounds_used = round + 1;
        let (user_deltas, slice_deltas) = round_deltas(scenario, &before, &current)?;
        let max_abs_delta = user_deltas
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &d| acc.max(d.abs()));
        last_max_delta = max_abs_delta;
        let value = lyapunov(&slice_deltas)?;
        let utility_per_slice = utilities(scenario, &current);
        let utility_shift = previous_utilities
            .iter()
            .zip(&utility_per_slice)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        previous_utilities = utility_per_slice.clone();
        if options.record_trace {
            trace.rounds.push(RoundRecord {
                allocation: current.clone(),
                user_deltas,
                slice_deltas,
                lyapunov: value,
                utility_per_slice,
                max_abs_delta,
            });
        }
        let measure = match options.stopping {
            StoppingRule::RelativeWeightChange => max_abs_delta,
            StoppingRule::UtilityChange => utility_shift,
        };
        if measure < options.tol {
            converged = true;
            break;
        }
    }

    let stationarity_residuals: Vec<f64> = (0..scenario.n_slices())
        .map(|o| {
            stationarity_residual_perturbed(scenario, o, &current, options.best_response.epsilon)
        })
        .collect::<Result<_>>()?;
    let nash = nash_residual(scenario, &current, &options.best_response)?;
    let report = EquilibriumReport {
        final_allocation: current,
        rounds_used,
        converged,
        max_relative_change: last_max_delta,
        stationarity_residuals,
        nash_residual: nash,
    };
    Ok((trace, report))
}

fn utilities(scenario: &NetworkScenario, allocation: &WeightAllocation) -> Vec<f64> {
    match compute_rates(scenario, allocation) {
        Ok(rates) => (0..scenario.n_slices())
            .map(|o| slice_utility_from_rates(scenario, o, &rates))
            .collect(),
        Err(_) => vec![f64::NEG_INFINITY; scenario.n_slices()],
    }
}

/// The epsilon-Nash certificate: the largest utility improvement any slice
/// can still get by a unilateral best response.
pub fn nash_residual(
    scenario: &NetworkScenario,
    allocation: &WeightAllocation,
    opts: &BestResponseOptions,
) -> Result<f64> {
    let rates = compute_rates(scenario, allocation)?;
    let mut residual = f64::NEG_INFINITY;
    for o in 0..scenario.n_slices() {
        let current = slice_utility_from_rates(scenario, o, &rates);
        let response = best_response(scenario, o, allocation, opts)?;
        let mut improved = allocation.clone();
        apply_slice_weights(&mut improved, &response);
        let improved_rates = compute_rates(scenario, &improved)?;
        let attainable = slice_utility_from_rates(scenario, o, &improved_rates);
        let gain = if attainable == current {
            0.0 // covers -inf == -inf
        } else {
            attainable - current
        };
        residual = residual.max(gain);
    }
    Ok(residual)
}
