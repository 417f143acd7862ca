#![allow(dead_code)] // shared across test targets; each uses a subset

//! Shared helpers for the integration suites: instance samplers and the
//! independent optimization oracles the solver is checked against.
//!
//! The oracle path deliberately reimplements everything it needs (slice
//! objective, simplex projection, gradients via finite differences) so
//! that it shares no code with the solver it certifies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slicegame_core::prelude::*;

/// Builds a scenario in which every slice has at least one user at every
/// station, so all stations are contested and all footprints are equal.
pub fn contested_scenario(
    seed: u64,
    n_slices: (usize, usize),
    n_stations: (usize, usize),
    extra_users: (usize, usize),
    equal_shares: bool,
    mut pick_alpha: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> NetworkScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let slices_n = rng.gen_range(n_slices.0..=n_slices.1);
    let stations_n = rng.gen_range(n_stations.0..=n_stations.1);

    let station_ids: Vec<String> = (0..stations_n).map(|b| format!("b{b}")).collect();
    let shares: Vec<f64> = if equal_shares {
        vec![1.0 / slices_n as f64; slices_n]
    } else {
        let draws: Vec<f64> = (0..slices_n).map(|_| -rng.gen::<f64>().ln()).collect();
        let total: f64 = draws.iter().sum();
        draws.into_iter().map(|d| d / total).collect()
    };
    let slice_specs: Vec<SliceSpec> = shares
        .iter()
        .enumerate()
        .map(|(o, &s)| SliceSpec::new(format!("s{o}"), s, pick_alpha(&mut rng)))
        .collect();

    let mut users = Vec::new();
    for o in 0..slices_n {
        let extra = rng.gen_range(extra_users.0..=extra_users.1);
        let mut stations: Vec<usize> = (0..stations_n).collect();
        for _ in 0..extra {
            stations.push(rng.gen_range(0..stations_n));
        }
        let draws: Vec<f64> = stations.iter().map(|_| -rng.gen::<f64>().ln()).collect();
        let total: f64 = draws.iter().sum();
        for (k, (&b, d)) in stations.iter().zip(&draws).enumerate() {
            users.push(UserSpec {
                id: format!("s{o}u{k}"),
                slice_id: format!("s{o}"),
                base_station: format!("b{b}"),
                capacity: rng.gen_range(1.0..10.0),
                priority: d / total,
            });
        }
    }
    NetworkScenario::new(station_ids, slice_specs, users, ScenarioMetadata::default()).unwrap()
}

/// Random feasible weights for every slice: each slice spreads its share
/// over its users by a uniform simplex draw (strictly positive).
pub fn random_feasible_allocation(scenario: &NetworkScenario, seed: u64) -> WeightAllocation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(7));
    let mut weights = vec![0.0; scenario.n_users()];
    for (o, slice) in scenario.slices().iter().enumerate() {
        let members = scenario.users_of_slice(o);
        let draws: Vec<f64> = members.iter().map(|_| -rng.gen::<f64>().ln()).collect();
        let total: f64 = draws.iter().sum();
        for (&u, &d) in members.iter().zip(&draws) {
            weights[u] = d / total * slice.share;
        }
    }
    WeightAllocation::new(scenario, weights).unwrap()
}

/// Independent simplex projection: bisection on the shift `lambda` in
/// `sum_i max(0, v_i - lambda) = budget` (a different algorithm from the
/// library's sort-and-threshold rule).
pub fn oracle_project_simplex(values: &[f64], budget: f64) -> Vec<f64> {
    let mass = |lambda: f64| -> f64 {
        values.iter().map(|&v| (v - lambda).max(0.0)).sum::<f64>()
    };
    let mut lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - budget;
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mass(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    values.iter().map(|&v| (v - lambda).max(0.0)).collect()
}

/// The slice objective evaluated from scratch: rates are
/// `w_u c_u / (a_b + d_b)` with `d_b` the slice's own station sums, and
/// the utility is the priority-weighted alpha-fair sum.
pub fn oracle_slice_objective(
    scenario: &NetworkScenario,
    o: usize,
    others_load: &[f64],
    weights: &[f64],
) -> f64 {
    let users = scenario.users_of_slice(o);
    assert_eq!(users.len(), weights.len());
    let alpha = scenario.slices()[o].alpha;
    let mut own_load = vec![0.0; scenario.n_stations()];
    for (&u, &w) in users.iter().zip(weights) {
        own_load[scenario.station_of_user(u)] += w;
    }
    let mut total = 0.0;
    for (&u, &w) in users.iter().zip(weights) {
        let spec = &scenario.users()[u];
        if spec.priority <= 0.0 {
            continue;
        }
        let b = scenario.station_of_user(u);
        let rate = w * spec.capacity / (others_load[b] + own_load[b]);
        let value = if alpha == 1.0 {
            rate.ln()
        } else {
            rate.powf(1.0 - alpha) / (1.0 - alpha)
        };
        total += spec.priority * value;
    }
    total
}

/// Projected gradient ascent on the slice objective with central
/// finite-difference gradients and Armijo backtracking. Returns the best
/// utility over a handful of starts.
pub fn oracle_best_response_utility(
    scenario: &NetworkScenario,
    o: usize,
    others_load: &[f64],
    seed: u64,
) -> f64 {
    let users = scenario.users_of_slice(o);
    let n = users.len();
    let share = scenario.slices()[o].share;
    let objective = |w: &[f64]| oracle_slice_objective(scenario, o, others_load, w);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let mut starts: Vec<Vec<f64>> = vec![vec![share / n as f64; n]];
    for _ in 0..2 {
        let draws: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
        let total: f64 = draws.iter().sum();
        starts.push(draws.into_iter().map(|d| d / total * share).collect());
    }

    let mut best = f64::NEG_INFINITY;
    for start in starts {
        let mut w = start;
        let mut value = objective(&w);
        for _ in 0..6000 {
            // Central finite differences.
            let mut grad = vec![0.0; n];
            for i in 0..n {
                let h = (1e-7 * w[i]).max(1e-11);
                let mut plus = w.clone();
                plus[i] += h;
                let mut minus = w.clone();
                minus[i] = (minus[i] - h).max(1e-300);
                grad[i] = (objective(&plus) - objective(&minus)) / (plus[i] - minus[i]);
            }
            let scale = grad.iter().fold(0.0f64, |a, &g| a.max(g.abs())).max(1e-12);
            let proposal: Vec<f64> = w
                .iter()
                .zip(&grad)
                .map(|(&x, &g)| x + g / scale * share)
                .collect();
            let target = oracle_project_simplex(&proposal, share);
            let slope: f64 = grad
                .iter()
                .zip(target.iter().zip(&w))
                .map(|(&g, (&t, &x))| g * (t - x))
                .sum();
            if slope <= 1e-15 {
                break;
            }
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..50 {
                let candidate: Vec<f64> = w
                    .iter()
                    .zip(&target)
                    .map(|(&x, &t)| x + step * (t - x))
                    .collect();
                let candidate_value = objective(&candidate);
                if candidate_value >= value + 1e-4 * step * slope {
                    w = candidate;
                    value = candidate_value;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best = best.max(value);
    }
    best
}

/// Per-slice utilities at an allocation, via the library path.
pub fn slice_utilities(scenario: &NetworkScenario, allocation: &WeightAllocation) -> Vec<f64> {
    let rates = compute_rates(scenario, allocation).unwrap();
    (0..scenario.n_slices())
        .map(|o| slice_utility_from_rates(scenario, o, &rates))
        .collect()
}

/// Median of a sample (sorts a copy).
pub fn median(sample: &[usize]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_unstable();
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2] as f64
    } else {
        (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0
    }
}
