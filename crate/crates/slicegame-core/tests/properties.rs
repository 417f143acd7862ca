//! Property tests for the allocation arithmetic's structural invariants.

mod common;

use common::{contested_scenario, random_feasible_allocation};
use proptest::prelude::*;
use rand::Rng as _;
use slicegame_core::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// At every station the proportional shares partition the resource:
    /// sum of r_u / c_u over the station's users is one.
    #[test]
    fn rate_partition(seed in 0u64..10_000) {
        let scenario = contested_scenario(seed, (2, 4), (1, 4), (0, 3), false, |rng| {
            rng.gen_range(0.3..3.0)
        });
        let allocation = random_feasible_allocation(&scenario, seed);
        let rates = compute_rates(&scenario, &allocation).unwrap();
        for b in 0..scenario.n_stations() {
            let total: f64 = scenario
                .users_at_station(b)
                .iter()
                .map(|&u| rates.rate(u) / scenario.users()[u].capacity)
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "station {b}: {total}");
        }
    }

    /// Scaling every capacity by kappa scales every rate by kappa, adds
    /// ln(kappa) to log-utility slices and multiplies power-law slices by
    /// kappa^(1-alpha).
    #[test]
    fn capacity_scaling_laws(seed in 0u64..10_000, kappa in 0.2f64..5.0) {
        let scenario = contested_scenario(seed, (2, 3), (1, 3), (0, 2), false, |rng| {
            [0.5, 1.0, 2.0][rng.gen_range(0..3)]
        });
        let allocation = random_feasible_allocation(&scenario, seed);
        let rates = compute_rates(&scenario, &allocation).unwrap();

        let scaled = NetworkScenario::new(
            scenario.base_station_ids().to_vec(),
            scenario.slices().to_vec(),
            scenario
                .users()
                .iter()
                .map(|u| UserSpec { capacity: kappa * u.capacity, ..u.clone() })
                .collect(),
            scenario.metadata().clone(),
        )
        .unwrap();
        let scaled_alloc = WeightAllocation::new(&scaled, allocation.weights().to_vec()).unwrap();
        let scaled_rates = compute_rates(&scaled, &scaled_alloc).unwrap();
        for u in 0..scenario.n_users() {
            let expected = kappa * rates.rate(u);
            prop_assert!((scaled_rates.rate(u) - expected).abs() < 1e-12 * expected.abs().max(1.0));
        }
        for o in 0..scenario.n_slices() {
            let before = slice_utility_from_rates(&scenario, o, &rates);
            let after = slice_utility_from_rates(&scaled, o, &scaled_rates);
            let expected = scale_utility(scenario.slices()[o].alpha, before, kappa);
            prop_assert!(
                (after - expected).abs() < 1e-10 * expected.abs().max(1.0),
                "slice {o}: {after} vs {expected}"
            );
        }
    }

    /// The best response spends exactly the slice share on contested
    /// stations, never goes negative, and certifies itself.
    #[test]
    fn best_response_budget_and_certificate(seed in 0u64..10_000) {
        let scenario = contested_scenario(seed, (2, 3), (1, 3), (0, 3), false, |rng| {
            rng.gen_range(0.3..4.0)
        });
        let base = random_feasible_allocation(&scenario, seed ^ 0xb0b);
        let o = (seed % scenario.n_slices() as u64) as usize;
        let response = best_response(&scenario, o, &base, &BestResponseOptions::default()).unwrap();
        let total: f64 = response.iter().map(|&(_, w)| w).sum();
        let share = scenario.slices()[o].share;
        prop_assert!((total - share).abs() <= 1e-12 * share);
        prop_assert!(response.iter().all(|&(_, w)| w >= 0.0));
        let mut full = base.clone();
        apply_slice_weights(&mut full, &response);
        prop_assert!(stationarity_residual(&scenario, o, &full).unwrap() <= 1e-8);
    }

    /// Exchanging two slices' aggregates never changes any station load.
    #[test]
    fn exchange_preserves_loads(seed in 0u64..10_000) {
        let scenario = contested_scenario(seed, (2, 4), (1, 3), (0, 2), true, |_| 1.0);
        let allocation = random_feasible_allocation(&scenario, seed ^ 0xfeed);
        let before = compute_loads(&scenario, &allocation).unwrap();
        let swapped =
            exchange_allocation(&scenario, &allocation, 0, 1, ExchangeMode::Strict).unwrap();
        let after = compute_loads(&scenario, &swapped).unwrap();
        for b in 0..scenario.n_stations() {
            prop_assert!((before.total(b) - after.total(b)).abs() <= 1e-14);
        }
    }

    /// Simplex projection lands on the simplex and fixes feasible points.
    #[test]
    fn simplex_projection_contract(
        values in proptest::collection::vec(-2.0f64..2.0, 1..8),
        budget in 0.1f64..2.0,
    ) {
        let projected = project_to_simplex(&values, budget);
        prop_assert!(projected.iter().all(|&x| x >= 0.0));
        let total: f64 = projected.iter().sum();
        prop_assert!((total - budget).abs() < 1e-10);
        let again = project_to_simplex(&projected, budget);
        for (a, b) in projected.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    /// The scenario JSON values survive independent containers: the
    /// allocation map round-trips through user ids.
    #[test]
    fn allocation_map_roundtrip(seed in 0u64..10_000) {
        let scenario = contested_scenario(seed, (2, 3), (1, 3), (0, 2), false, |_| 1.0);
        let allocation = random_feasible_allocation(&scenario, seed);
        let map = allocation.to_map(&scenario);
        let back = WeightAllocation::from_map(&scenario, &map).unwrap();
        prop_assert_eq!(allocation.weights(), back.weights());
    }
}

/// The per-station inner map of the best response is strictly increasing:
/// ordered evaluations on a grid for several fairness parameters. Checked
/// through the public solver by verifying monotone budget growth in the
/// share (a strictly larger share must produce a strictly larger budget at
/// every contested station).
#[test]
fn station_budgets_grow_with_the_share() {
    for &alpha in &[0.3, 1.0, 2.0, 5.0] {
        let mut previous: Option<Vec<f64>> = None;
        for &share in &[0.1, 0.2, 0.4, 0.8] {
            let stations = vec!["b0".to_string(), "b1".to_string()];
            let slices = vec![
                SliceSpec::new("s0", share, alpha),
                SliceSpec::new("s1", 1.0 - share, 1.0),
            ];
            let users = vec![
                UserSpec { id: "a".into(), slice_id: "s0".into(), base_station: "b0".into(), capacity: 2.0, priority: 0.6 },
                UserSpec { id: "b".into(), slice_id: "s0".into(), base_station: "b1".into(), capacity: 1.0, priority: 0.4 },
                UserSpec { id: "c".into(), slice_id: "s1".into(), base_station: "b0".into(), capacity: 1.0, priority: 0.5 },
                UserSpec { id: "d".into(), slice_id: "s1".into(), base_station: "b1".into(), capacity: 1.0, priority: 0.5 },
            ];
            let scenario =
                NetworkScenario::new(stations, slices, users, ScenarioMetadata::default()).unwrap();
            let others = vec![0.3, 0.4];
            let response =
                best_response_to_loads(&scenario, 0, &others, &BestResponseOptions::default())
                    .unwrap();
            let budgets: Vec<f64> = response.iter().map(|&(_, w)| w).collect();
            if let Some(prev) = &previous {
                for (now, before) in budgets.iter().zip(prev) {
                    assert!(now > before, "alpha={alpha}: {budgets:?} vs {prev:?}");
                }
            }
            previous = Some(budgets);
        }
    }
}
