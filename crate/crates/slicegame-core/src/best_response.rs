//! Per-slice best response, its stationarity certificate, and the
//! protective allocation that guarantees static-slicing rates.
//!
//! Given the other slices' aggregate load `a_b` at each station, a slice's
//! best response splits into two monotone scalar problems: within each
//! station the optimal split is proportional to the beta coefficients, and
//! across stations the per-station budgets `d_b` all satisfy
//! `h_b(d_b) = t` for one common level `t`, where
//!
//! ```text
//! h_b(d) = d * (a_b + d)^(2/alpha - 1) / (S_b * a_b^(1/alpha))
//! ```
//!
//! with `S_b` the station's beta sum. `h_b` is strictly increasing in `d`
//! (its derivative is `(a+d)^(2/alpha-2) (a + 2d/alpha) / (S_b a^(1/alpha))`,
//! positive for every `alpha > 0`), so each level is inverted by bisection
//! and an outer bisection on `t` meets the budget `sum_b d_b = s_o`. Both
//! levels run in log space so extreme fairness parameters cannot overflow.

use crate::error::{Error, Result};
use crate::model::{compute_loads, NetworkScenario, WeightAllocation};

/// Solver knobs. Defaults give residuals far below the certification
/// thresholds used by the dynamics and metrics layers.
#[derive(Debug, Clone)]
pub struct BestResponseOptions {
    /// Budget residual target, relative to the slice share (default 1e-12).
    pub outer_tol_rel: f64,
    /// Per-station root relative tolerance (default 1e-13).
    pub inner_tol: f64,
    /// Epsilon perturbation added to every station's others-load. Zero by
    /// default; set it positive to regularize instances where some
    /// contested station receives no weight from the other slices.
    pub epsilon: f64,
    /// Iteration cap for each bisection level (default 200).
    pub max_bisect_iters: u32,
}

impl Default for BestResponseOptions {
    fn default() -> Self {
        BestResponseOptions {
            outer_tol_rel: 1e-12,
            inner_tol: 1e-13,
            epsilon: 0.0,
            max_bisect_iters: 200,
        }
    }
}

/// Within-station split coefficients `beta_u = phi_u^(1/alpha) c_u^(1/alpha - 1)`
/// for one slice, keyed by user index.
#[derive(Debug, Clone)]
pub struct BetaCoefficients {
    users: Vec<usize>,
    ln_beta: Vec<f64>,
}

impl BetaCoefficients {
    pub fn users(&self) -> &[usize] {
        &self.users
    }
    /// `beta_u`; zero when the user's priority is zero. May overflow to
    /// infinity for extreme alpha; internal computations stay in log space.
    pub fn beta(&self, position: usize) -> f64 {
        self.ln_beta[position].exp()
    }
    pub fn ln_beta(&self, position: usize) -> f64 {
        self.ln_beta[position]
    }
    /// Looks a coefficient up by user index.
    pub fn get(&self, user: usize) -> Option<f64> {
        self.users.iter().position(|&u| u == user).map(|p| self.beta(p))
    }
}

/// Beta coefficients of every user of a slice.
pub fn beta_coefficients(scenario: &NetworkScenario, o: usize) -> Result<BetaCoefficients> {
    let alpha = scenario.slices()[o].alpha;
    if alpha <= 0.0 {
        return Err(unsupported_alpha(scenario, o));
    }
    let users: Vec<usize> = scenario.users_of_slice(o).to_vec();
    let ln_beta = users.iter().map(|&u| scenario.ln_beta(u)).collect();
    Ok(BetaCoefficients { users, ln_beta })
}

fn unsupported_alpha(scenario: &NetworkScenario, o: usize) -> Error {
    let slice = &scenario.slices()[o];
    Error::UnsupportedAlpha {
        slice: slice.id.clone(),
        alpha: slice.alpha,
        reason: "best response requires alpha > 0 (linear utilities respond \
                 by concentrating weight and have no closed form here)",
    }
}

/// A slice's contested stations with everything the solver needs.
struct StationProblem {
    station: usize,
    /// Users of the slice at this station.
    users: Vec<usize>,
    /// Within-station proportions x_u (beta shares).
    split: Vec<f64>,
    /// ln of the station's beta sum.
    ln_beta_sum: f64,
    /// Others-load plus epsilon.
    load: f64,
}

impl StationProblem {
    /// ln h(d) for this station.
    fn ln_h(&self, alpha: f64, d: f64) -> f64 {
        d.ln() + (2.0 / alpha - 1.0) * (self.load + d).ln()
            - self.ln_beta_sum
            - self.load.ln() / alpha
    }

    /// Inverts `ln h(d) = tau` by bisection on `[0, hi]`.
    fn invert(&self, alpha: f64, tau: f64, budget: f64, opts: &BestResponseOptions) -> Result<f64> {
        let mut hi = budget;
        let mut grow = 0;
        while self.ln_h(alpha, hi) < tau {
            hi *= 2.0;
            grow += 1;
            if grow > opts.max_bisect_iters {
                return Err(Error::Numeric(format!(
                    "station {} bracket did not capture level {tau}",
                    self.station
                )));
            }
        }
        let mut lo = 0.0;
        for _ in 0..opts.max_bisect_iters {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.ln_h(alpha, mid) < tau {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= opts.inner_tol * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn build_problems(
    scenario: &NetworkScenario,
    o: usize,
    others_load: &[f64],
    opts: &BestResponseOptions,
) -> Result<Vec<StationProblem>> {
    let mut problems = Vec::new();
    for (b, users) in scenario.slice_stations(o) {
        let a = others_load[*b];
        if a < 0.0 {
            return Err(Error::Allocation(format!(
                "negative others-load {a} at station `{}`",
                scenario.base_station_ids()[*b]
            )));
        }
        if !scenario.is_contested(*b) {
            continue; // sole occupancy: weight 0 by convention
        }
        let load = a + opts.epsilon;
        if load <= 0.0 {
            return Err(Error::ZeroOthersLoad {
                station: scenario.base_station_ids()[*b].clone(),
            });
        }
        let lns: Vec<f64> = users.iter().map(|&u| scenario.ln_beta(u)).collect();
        let m = lns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            // Every user here has zero priority: the utility ignores them,
            // so the optimum spends nothing at this station.
            continue;
        }
        let ln_beta_sum = m + lns.iter().map(|&l| (l - m).exp()).sum::<f64>().ln();
        problems.push(StationProblem {
            station: *b,
            users: users.clone(),
            split: scenario.beta_split(users),
            ln_beta_sum,
            load,
        });
    }
    Ok(problems)
}

/// Best response of slice `o` against explicit per-station others-loads.
///
/// Returns the full per-user weight vector of the slice's users (aligned
/// with `scenario.users()` indexing via the pairs), with zero weight at
/// sole-occupancy stations and the whole share spent on contested ones.
/// `others_load[b]` must be the aggregate weight of the other slices at
/// station `b`.
pub fn best_response_to_loads(
    scenario: &NetworkScenario,
    o: usize,
    others_load: &[f64],
    opts: &BestResponseOptions,
) -> Result<Vec<(usize, f64)>> {
    let slice = &scenario.slices()[o];
    if slice.alpha <= 0.0 {
        return Err(unsupported_alpha(scenario, o));
    }
    if others_load.len() != scenario.n_stations() {
        return Err(Error::Allocation("others-load length mismatch".into()));
    }
    let alpha = slice.alpha;
    let share = slice.share;
    let problems = build_problems(scenario, o, others_load, opts)?;

    let mut weights: Vec<(usize, f64)> = scenario
        .users_of_slice(o)
        .iter()
        .map(|&u| (u, 0.0))
        .collect();
    if problems.is_empty() {
        // Nothing to optimize: every station is sole occupancy (full
        // capacity regardless of weights) or carries only zero-priority
        // users. All-zero weights is the optimum.
        return Ok(weights);
    }

    // Outer bisection on the common level tau = ln t. At
    // tau_hi = min_b ln h_b(share) the minimizing station alone already
    // absorbs the whole budget, so the total meets or exceeds it -- and,
    // because every h_b is increasing, no station's inversion below that
    // level ever leaves [0, share]. (The max_b variant would also bracket,
    // but it can ask other stations for astronomically large budgets when
    // one contested station carries almost no foreign weight.) The
    // doubling loop below is a safety net for degenerate flat cases.
    let eps_d = share / (2.0 * problems.len() as f64);
    let mut tau_lo = problems
        .iter()
        .map(|p| p.ln_h(alpha, eps_d))
        .fold(f64::INFINITY, f64::min);
    let mut tau_hi = problems
        .iter()
        .map(|p| p.ln_h(alpha, share))
        .fold(f64::INFINITY, f64::min);
    let total_at = |tau: f64| -> Result<f64> {
        let mut total = 0.0;
        for p in &problems {
            total += p.invert(alpha, tau, share, opts)?;
        }
        Ok(total)
    };
    let mut grow = 0;
    while total_at(tau_hi)? < share {
        tau_hi += std::f64::consts::LN_2;
        grow += 1;
        if grow > opts.max_bisect_iters {
            return Err(Error::Numeric("budget level bracket failed".into()));
        }
    }
    let outer_tol = opts.outer_tol_rel * share;
    let mut tau = 0.5 * (tau_lo + tau_hi);
    for _ in 0..opts.max_bisect_iters {
        tau = 0.5 * (tau_lo + tau_hi);
        if tau == tau_lo || tau == tau_hi {
            break;
        }
        let total = total_at(tau)?;
        if (total - share).abs() <= outer_tol {
            break;
        }
        if total < share {
            tau_lo = tau;
        } else {
            tau_hi = tau;
        }
    }

    for p in &problems {
        let d = p.invert(alpha, tau, share, opts)?;
        for (&u, &x) in p.users.iter().zip(&p.split) {
            let pos = weights.iter().position(|&(w, _)| w == u).expect("own user");
            weights[pos].1 = x * d;
        }
    }
    // Snap the budget exactly: distribute the (tiny) bisection residual
    // proportionally so downstream share sums hold to machine precision.
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    if total > 0.0 {
        let scale = share / total;
        for w in &mut weights {
            w.1 *= scale;
        }
    }
    Ok(weights)
}

/// Best response of slice `o` given everyone's current weights.
///
/// Only the other slices' entries of `allocation` are read.
pub fn best_response(
    scenario: &NetworkScenario,
    o: usize,
    allocation: &WeightAllocation,
    opts: &BestResponseOptions,
) -> Result<Vec<(usize, f64)>> {
    let loads = compute_loads(scenario, allocation)?;
    let others: Vec<f64> = (0..scenario.n_stations())
        .map(|b| loads.others_load(o, b))
        .collect();
    best_response_to_loads(scenario, o, &others, opts)
}

/// Writes a slice's weights into an allocation.
pub fn apply_slice_weights(allocation: &mut WeightAllocation, weights: &[(usize, f64)]) {
    for &(u, w) in weights {
        allocation.set_weight(u, w);
    }
}

/// How far a slice's current weights sit from its own best-response fixed
/// point: `max_u |w_u - rhs_u| / s_o`, where `rhs` re-evaluates the
/// fixed-point map at the current loads. Zero exactly at the fixed point.
///
/// Sole-occupancy users are skipped (their weights are identically zero by
/// convention). Errors if the map's denominator vanishes.
pub fn stationarity_residual(
    scenario: &NetworkScenario,
    o: usize,
    allocation: &WeightAllocation,
) -> Result<f64> {
    stationarity_residual_perturbed(scenario, o, allocation, 0.0)
}

/// Fixed-point residual of the epsilon-perturbed game (the one the solver
/// plays when [`BestResponseOptions::epsilon`] is positive).
pub fn stationarity_residual_perturbed(
    scenario: &NetworkScenario,
    o: usize,
    allocation: &WeightAllocation,
    epsilon: f64,
) -> Result<f64> {
    let slice = &scenario.slices()[o];
    if slice.alpha <= 0.0 {
        return Err(unsupported_alpha(scenario, o));
    }
    let alpha = slice.alpha;
    let loads = compute_loads(scenario, allocation)?;

    // ln g_u = ln beta_u + (1/alpha) ln a_b - (2/alpha - 1) ln(a_b + d_b)
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for (b, users) in scenario.slice_stations(o) {
        if !scenario.is_contested(*b) {
            continue;
        }
        let a = loads.others_load(o, *b) + epsilon;
        let d = loads.slice_load(o, *b);
        if a <= 0.0 {
            return Err(Error::ZeroOthersLoad {
                station: scenario.base_station_ids()[*b].clone(),
            });
        }
        for &u in users {
            let ln_g = scenario.ln_beta(u) + a.ln() / alpha - (2.0 / alpha - 1.0) * (a + d).ln();
            entries.push((u, ln_g));
        }
    }
    if entries.is_empty() {
        return Ok(0.0);
    }
    let m = entries
        .iter()
        .map(|&(_, g)| g)
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        // Every contested user of the slice has zero beta; the unique
        // optimum parks them all at zero weight, so measure distance from
        // that.
        let residual = entries
            .iter()
            .map(|&(u, _)| allocation.weight(u).abs() / slice.share)
            .fold(0.0f64, f64::max);
        return Ok(residual);
    }
    let z: f64 = entries.iter().map(|&(_, g)| (g - m).exp()).sum();
    let mut residual: f64 = 0.0;
    for &(u, ln_g) in &entries {
        let rhs = (ln_g - m).exp() / z * slice.share;
        residual = residual.max((allocation.weight(u) - rhs).abs() / slice.share);
    }
    Ok(residual)
}

/// The protective allocation: mirror the others' load profile and reuse the
/// static-slicing within-station split.
///
/// `w_u = rho_u * (a_b(u) / sum_b' a_b') * s_o`, with `rho_u` the
/// static-slicing within-station ratio. The resulting rates dominate the
/// static-slicing rates user by user no matter what the others play.
pub fn protective_allocation(
    scenario: &NetworkScenario,
    o: usize,
    allocation: &WeightAllocation,
) -> Result<Vec<(usize, f64)>> {
    let loads = compute_loads(scenario, allocation)?;
    let share = scenario.slices()[o].share;
    let mut weights: Vec<(usize, f64)> = scenario
        .users_of_slice(o)
        .iter()
        .map(|&u| (u, 0.0))
        .collect();
    let mut station_loads = Vec::new();
    for (b, _) in scenario.slice_stations(o) {
        let a = loads.others_load(o, *b);
        if a < 0.0 {
            return Err(Error::Allocation(format!(
                "negative others-load at station `{}`",
                scenario.base_station_ids()[*b]
            )));
        }
        if scenario.is_contested(*b) && a <= 0.0 {
            return Err(Error::ZeroOthersLoad {
                station: scenario.base_station_ids()[*b].clone(),
            });
        }
        station_loads.push(a);
    }
    let total: f64 = station_loads.iter().sum();
    if total <= 0.0 {
        // Every station is sole occupancy; zero weights, full capacity.
        return Ok(weights);
    }
    for ((b, users), a) in scenario.slice_stations(o).iter().zip(station_loads) {
        let _ = b;
        let split = scenario.beta_split(users);
        for (&u, rho) in users.iter().zip(split) {
            let pos = weights.iter().position(|&(w, _)| w == u).expect("own user");
            weights[pos].1 = rho * (a / total) * share;
        }
    }
    Ok(weights)
}
