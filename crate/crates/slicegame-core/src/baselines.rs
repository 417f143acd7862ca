//! Comparison allocations: static slicing and the social optimum.
//!
//! Static slicing hands every slice a fixed fraction of every station; it
//! is the protection baseline the game is measured against. The social
//! optimum maximizes the share-weighted network utility; it has a closed
//! form when every slice runs proportional fairness and otherwise needs a
//! numeric (local) solver.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alpha::alpha_fair_deriv;
use crate::error::{Error, Result};
use crate::model::{
    compute_loads, compute_rates, network_utility_from_rates, slice_utility_from_rates,
    NetworkScenario, RateVector, WeightAllocation,
};

/// Convergence bookkeeping for the numeric solver path.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: u32,
    pub residual: f64,
    pub converged: bool,
    pub starts: u32,
}

/// A baseline allocation together with its own rates and utilities.
///
/// The rates follow the baseline's rate law: static-slicing rates come from
/// the per-station share partition, social-optimum rates from the game's
/// proportional rule.
#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub allocation: WeightAllocation,
    pub rates: RateVector,
    pub utility_per_slice: Vec<f64>,
    pub network_utility: f64,
    pub diagnostics: Option<SolverDiagnostics>,
}

/// Static slicing: each slice owns the fraction `s_o` of every station and
/// splits it among its users at the station proportionally to the beta
/// coefficients, giving `r_u = x_u s_o c_u`.
///
/// Rates depend only on the within-station proportions, so any weight
/// vector with those proportions is equivalent; the returned one spends
/// each slice's budget across stations proportionally to the station beta
/// sums, which makes the output deterministic.
pub fn static_slicing(scenario: &NetworkScenario) -> Result<BaselineResult> {
    let mut weights = vec![0.0; scenario.n_users()];
    let mut rates = vec![0.0; scenario.n_users()];
    for (o, slice) in scenario.slices().iter().enumerate() {
        if slice.alpha <= 0.0 {
            return Err(Error::UnsupportedAlpha {
                slice: slice.id.clone(),
                alpha: slice.alpha,
                reason: "static slicing uses the alpha-fair within-station optimum",
            });
        }
        // Station budgets proportional to beta sums, in log space.
        let stations = scenario.slice_stations(o);
        let ln_sums: Vec<f64> = stations
            .iter()
            .map(|(_, users)| {
                let lns: Vec<f64> = users.iter().map(|&u| scenario.ln_beta(u)).collect();
                let m = lns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if m == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    m + lns.iter().map(|&l| (l - m).exp()).sum::<f64>().ln()
                }
            })
            .collect();
        let m = ln_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = if m == f64::NEG_INFINITY {
            0.0
        } else {
            ln_sums.iter().map(|&l| (l - m).exp()).sum()
        };
        for ((_, users), &ln_sum) in stations.iter().zip(&ln_sums) {
            let budget = if norm > 0.0 {
                slice.share * (ln_sum - m).exp() / norm
            } else {
                slice.share / stations.len() as f64
            };
            let split = scenario.beta_split(users);
            for (&u, x) in users.iter().zip(split) {
                weights[u] = x * budget;
                rates[u] = x * slice.share * scenario.users()[u].capacity;
            }
        }
    }
    let allocation = WeightAllocation::new(scenario, weights)?;
    let rates = RateVector::from_raw(rates);
    let utility_per_slice: Vec<f64> = (0..scenario.n_slices())
        .map(|o| slice_utility_from_rates(scenario, o, &rates))
        .collect();
    let network_utility = network_utility_from_rates(scenario, &rates);
    Ok(BaselineResult {
        allocation,
        rates,
        utility_per_slice,
        network_utility,
        diagnostics: None,
    })
}

/// Closed-form social optimum for all-proportional-fair populations:
/// priority-proportional weights `w*_u = phi_u s_o`.
pub fn social_optimum_log(scenario: &NetworkScenario) -> Result<BaselineResult> {
    for slice in scenario.slices() {
        if slice.alpha != 1.0 {
            return Err(Error::UnsupportedAlpha {
                slice: slice.id.clone(),
                alpha: slice.alpha,
                reason: "the closed-form social optimum needs alpha = 1; \
                         use the numeric solver for other fairness parameters",
            });
        }
    }
    let weights: Vec<f64> = (0..scenario.n_users())
        .map(|u| {
            let spec = &scenario.users()[u];
            spec.priority * scenario.slices()[scenario.slice_of_user(u)].share
        })
        .collect();
    let allocation = WeightAllocation::new(scenario, weights)?;
    let rates = compute_rates(scenario, &allocation)?;
    let utility_per_slice: Vec<f64> = (0..scenario.n_slices())
        .map(|o| slice_utility_from_rates(scenario, o, &rates))
        .collect();
    let network_utility = network_utility_from_rates(scenario, &rates);
    Ok(BaselineResult {
        allocation,
        rates,
        utility_per_slice,
        network_utility,
        diagnostics: None,
    })
}

/// Analytic gradient of the share-weighted network utility with respect to
/// each user's weight.
///
/// Only same-station users interact:
/// `dU/dw_u = s_o phi_u f'(r_u) c_u (l_b - w_u)/l_b^2
///            - sum_{v at b, v != u} s_o(v) phi_v f'(r_v) c_v w_v / l_b^2`.
/// Sole-occupancy stations contribute nothing (their rates ignore weights).
pub fn social_gradient(
    scenario: &NetworkScenario,
    allocation: &WeightAllocation,
) -> Result<Vec<f64>> {
    let loads = compute_loads(scenario, allocation)?;
    let rates = compute_rates(scenario, allocation)?;
    let mut grad = vec![0.0; scenario.n_users()];
    for b in 0..scenario.n_stations() {
        let users = scenario.users_at_station(b);
        if users.is_empty() || scenario.is_sole_occupancy(b) {
            continue;
        }
        let l = loads.total(b);
        if l <= 0.0 {
            return Err(Error::DegenerateAllocation {
                station: scenario.base_station_ids()[b].clone(),
            });
        }
        // Marginal value of each user's rate, share- and priority-weighted.
        let mut weighted_marginals = Vec::with_capacity(users.len());
        for &v in users {
            let spec = &scenario.users()[v];
            if spec.priority <= 0.0 {
                weighted_marginals.push(0.0);
                continue;
            }
            let o = scenario.slice_of_user(v);
            let r = rates.rate(v);
            if r <= 0.0 {
                return Err(Error::NonFiniteUtility {
                    slice: scenario.slices()[o].id.clone(),
                });
            }
            let alpha = scenario.slices()[o].alpha;
            weighted_marginals.push(
                scenario.slices()[o].share
                    * spec.priority
                    * alpha_fair_deriv(alpha, r)
                    * spec.capacity,
            );
        }
        let cross: f64 = users
            .iter()
            .zip(&weighted_marginals)
            .map(|(&v, &m)| m * allocation.weight(v))
            .sum();
        for (&u, &m) in users.iter().zip(&weighted_marginals) {
            let w = allocation.weight(u);
            grad[u] = (m * (l - w) - (cross - m * w)) / (l * l);
        }
    }
    Ok(grad)
}

/// Options for the projected-gradient social-optimum search.
#[derive(Debug, Clone)]
pub struct SocialOptimumOptions {
    /// Number of starting points: the priority-proportional point, the
    /// static-slicing point, and seeded random simplex points.
    pub starts: u32,
    pub max_iters: u32,
    /// First-order (KKT) residual target.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SocialOptimumOptions {
    fn default() -> Self {
        SocialOptimumOptions {
            starts: 8,
            max_iters: 4000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

/// Euclidean projection onto the scaled simplex `{x >= 0, sum x = budget}`
/// by the sort-and-threshold rule. Ties break deterministically by index.
pub fn project_to_simplex(values: &[f64], budget: f64) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[j]
            .partial_cmp(&values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    let mut support = 0;
    for (k, &i) in order.iter().enumerate() {
        cumulative += values[i];
        let candidate = (cumulative - budget) / (k + 1) as f64;
        if values[i] - candidate > 0.0 {
            threshold = candidate;
            support = k + 1;
        } else {
            break;
        }
    }
    let _ = support;
    values.iter().map(|&v| (v - threshold).max(0.0)).collect()
}

/// Variable layout for the numeric solver: contested users per slice.
struct SliceVars {
    users: Vec<usize>,
    budget: f64,
}

fn utility_or_neg_inf(scenario: &NetworkScenario, allocation: &WeightAllocation) -> f64 {
    match compute_rates(scenario, allocation) {
        Ok(rates) => network_utility_from_rates(scenario, &rates),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Multi-start projected gradient ascent on the per-slice scaled simplices.
///
/// Returns the best local optimum found; for mixed fairness parameters
/// nothing certifies global optimality, and the diagnostics carry the
/// first-order residual of the reported point. Sole-occupancy users are
/// pinned at zero weight (their rates ignore weights, so budget spent there
/// is wasted). Non-convergence returns the best iterate with
/// `converged = false` rather than an error.
pub fn social_optimum_numeric(
    scenario: &NetworkScenario,
    options: &SocialOptimumOptions,
) -> Result<BaselineResult> {
    for slice in scenario.slices() {
        if slice.alpha <= 0.0 {
            return Err(Error::UnsupportedAlpha {
                slice: slice.id.clone(),
                alpha: slice.alpha,
                reason: "the social-optimum search needs alpha > 0",
            });
        }
    }
    let vars: Vec<SliceVars> = (0..scenario.n_slices())
        .map(|o| SliceVars {
            users: scenario
                .users_of_slice(o)
                .iter()
                .copied()
                .filter(|&u| scenario.is_contested(scenario.station_of_user(u)))
                .collect(),
            budget: scenario.slices()[o].share,
        })
        .collect();

    let mut starts: Vec<WeightAllocation> = Vec::new();
    // Priority-proportional start.
    {
        let mut w = vec![0.0; scenario.n_users()];
        for v in &vars {
            let phi_sum: f64 = v.users.iter().map(|&u| scenario.users()[u].priority).sum();
            for &u in &v.users {
                w[u] = if phi_sum > 0.0 {
                    scenario.users()[u].priority / phi_sum * v.budget
                } else {
                    v.budget / v.users.len().max(1) as f64
                };
            }
        }
        starts.push(WeightAllocation::new(scenario, w)?);
    }
    // Static-slicing proportions.
    if starts.len() < options.starts as usize {
        let ss = static_slicing(scenario)?;
        let mut w = vec![0.0; scenario.n_users()];
        for v in &vars {
            let total: f64 = v.users.iter().map(|&u| ss.allocation.weight(u)).sum();
            for &u in &v.users {
                w[u] = if total > 0.0 {
                    ss.allocation.weight(u) / total * v.budget
                } else {
                    v.budget / v.users.len().max(1) as f64
                };
            }
        }
        starts.push(WeightAllocation::new(scenario, w)?);
    }
    // Seeded random simplex points.
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    while starts.len() < options.starts.max(1) as usize {
        let mut w = vec![0.0; scenario.n_users()];
        for v in &vars {
            let draws: Vec<f64> = v.users.iter().map(|_| -rng.gen::<f64>().ln()).collect();
            let total: f64 = draws.iter().sum();
            for (&u, &d) in v.users.iter().zip(&draws) {
                w[u] = d / total * v.budget;
            }
        }
        starts.push(WeightAllocation::new(scenario, w)?);
    }

    let mut best: Option<(f64, WeightAllocation, f64, u32)> = None;
    for start in &starts {
        let (alloc, utility, residual, iters) = ascend(scenario, &vars, start.clone(), options);
        // Per-station weight scalings leave every rate unchanged, so the
        // optimum is typically a manifold; ties (within float noise) keep
        // the earliest start, which makes the returned point deterministic
        // and, for all-log populations, the priority-proportional one.
        let replace = match &best {
            None => true,
            Some((u, _, _, _)) => utility > *u + 1e-12 * u.abs().max(1.0),
        };
        if replace {
            best = Some((utility, alloc, residual, iters));
        }
    }
    let (utility, allocation, residual, iterations) =
        best.ok_or_else(|| Error::Numeric("no starting point produced an iterate".into()))?;
    let _ = utility;
    let rates = compute_rates(scenario, &allocation)?;
    let utility_per_slice: Vec<f64> = (0..scenario.n_slices())
        .map(|o| slice_utility_from_rates(scenario, o, &rates))
        .collect();
    Ok(BaselineResult {
        allocation: allocation.clone(),
        rates: rates.clone(),
        utility_per_slice,
        network_utility: network_utility_from_rates(scenario, &rates),
        diagnostics: Some(SolverDiagnostics {
            iterations,
            residual,
            converged: residual <= options.tol,
            starts: starts.len() as u32,
        }),
    })
}

/// One projected-gradient run with Armijo backtracking from step 1.0.
fn ascend(
    scenario: &NetworkScenario,
    vars: &[SliceVars],
    mut current: WeightAllocation,
    options: &SocialOptimumOptions,
) -> (WeightAllocation, f64, f64, u32) {
    let mut value = utility_or_neg_inf(scenario, &current);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..options.max_iters {
        iterations = it + 1;
        let grad = match social_gradient(scenario, &current) {
            Ok(g) => g,
            Err(_) => break, // non-differentiable point: stop this start
        };
        residual = kkt_residual(vars, &current, &grad);
        if residual <= options.tol {
            break;
        }
        // Feasible ascent direction: project a unit gradient step per slice.
        let mut target = current.clone();
        for v in vars {
            if v.users.is_empty() {
                continue;
            }
            let proposal: Vec<f64> = v
                .users
                .iter()
                .map(|&u| current.weight(u) + grad[u])
                .collect();
            let projected = project_to_simplex(&proposal, v.budget);
            for (&u, &w) in v.users.iter().zip(&projected) {
                target.set_weight(u, w);
            }
        }
        let slope: f64 = (0..scenario.n_users())
            .map(|u| grad[u] * (target.weight(u) - current.weight(u)))
            .sum();
        if slope <= 0.0 {
            break; // already stationary on the feasible set
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut candidate = current.clone();
            for v in vars {
                for &u in &v.users {
                    let w = current.weight(u) + step * (target.weight(u) - current.weight(u));
                    candidate.set_weight(u, w);
                }
            }
            let candidate_value = utility_or_neg_inf(scenario, &candidate);
            if candidate_value >= value + 1e-4 * step * slope {
                current = candidate;
                value = candidate_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (current, value, residual, iterations)
}

/// First-order optimality residual on the product of slice simplices: the
/// gradient must be constant over each slice's support and no larger on its
/// zero set.
fn kkt_residual(vars: &[SliceVars], allocation: &WeightAllocation, grad: &[f64]) -> f64 {
    let mut residual: f64 = 0.0;
    for v in vars {
        if v.users.is_empty() {
            continue;
        }
        let support: Vec<usize> = v
            .users
            .iter()
            .copied()
            .filter(|&u| allocation.weight(u) > 1e-14 * v.budget)
            .collect();
        if support.is_empty() {
            continue;
        }
        let lambda: f64 =
            support.iter().map(|&u| grad[u]).sum::<f64>() / support.len() as f64;
        for &u in &v.users {
            if allocation.weight(u) > 1e-14 * v.budget {
                residual = residual.max((grad[u] - lambda).abs());
            } else {
                residual = residual.max((grad[u] - lambda).max(0.0));
            }
        }
    }
    residual
}
