//! Efficiency and fairness metrics: the optimality gap (price of anarchy),
//! exchange envy between slices, and capacity-equivalent comparisons.

use crate::alpha::scale_utility;
use crate::baselines::social_optimum_log;
use crate::error::{Error, Result};
use crate::model::{
    compute_loads, compute_rates, network_utility_from_rates, slice_utility_from_rates,
    NetworkScenario, WeightAllocation,
};

/// Price-of-anarchy gap `U(w*) - U(w)` in nats, for all-proportional-fair
/// populations where the social optimum has its closed form.
///
/// The caller is responsible for certifying `allocation` as an equilibrium
/// (see [`crate::dynamics::nash_residual`]); the gap itself is just the
/// utility difference. Non-unit fairness parameters are rejected: without
/// the closed form only a local-optimum gap can be reported, and that goes
/// through the numeric solver explicitly.
pub fn poa_gap(scenario: &NetworkScenario, allocation: &WeightAllocation) -> Result<f64> {
    let optimum = social_optimum_log(scenario)?;
    let rates = compute_rates(scenario, allocation)?;
    Ok(optimum.network_utility - network_utility_from_rates(scenario, &rates))
}

/// Whether absent-counterpart stations abort the exchange or default to
/// zero weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeMode {
    /// Requires identical station footprints and equal shares (the
    /// hypotheses under which the envy bound holds).
    Strict,
    /// Assigns zero where the counterpart slice is absent. With log
    /// utilities this can produce a `-inf` utility; comparisons stay total.
    Permissive,
}

/// Swaps the per-station aggregate weights of two slices.
///
/// Slice `o`'s users at station `b` share slice `o'`'s aggregate `d_b^{o'}`
/// proportionally to their priorities, and symmetrically; every other
/// slice keeps its weights, so all station loads are preserved. (In
/// permissive mode with mismatched footprints, aggregates at stations
/// where only one of the pair is present have no takers, so loads are
/// preserved only where the footprints agree.)
pub fn exchange_allocation(
    scenario: &NetworkScenario,
    allocation: &WeightAllocation,
    o: usize,
    o2: usize,
    mode: ExchangeMode,
) -> Result<WeightAllocation> {
    if o == o2 {
        return Err(Error::InvalidParams("exchange needs two distinct slices".into()));
    }
    if mode == ExchangeMode::Strict {
        let fa = scenario.slice_footprint(o);
        let fb = scenario.slice_footprint(o2);
        if fa != fb {
            return Err(Error::InvalidParams(format!(
                "slices `{}` and `{}` have different station footprints; \
                 strict exchange undefined",
                scenario.slices()[o].id, scenario.slices()[o2].id
            )));
        }
        let (sa, sb) = (scenario.slices()[o].share, scenario.slices()[o2].share);
        if (sa - sb).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "slices `{}` and `{}` have different shares ({sa} vs {sb}); \
                 strict exchange undefined",
                scenario.slices()[o].id, scenario.slices()[o2].id
            )));
        }
    }
    let loads = compute_loads(scenario, allocation)?;
    let mut swapped = allocation.clone();
    for (taker, giver) in [(o, o2), (o2, o)] {
        for (b, users) in scenario.slice_stations(taker) {
            let aggregate = loads.slice_load(giver, *b);
            let phi_sum: f64 = users.iter().map(|&u| scenario.users()[u].priority).sum();
            for &u in users {
                let ratio = if phi_sum > 0.0 {
                    scenario.users()[u].priority / phi_sum
                } else {
                    1.0 / users.len() as f64
                };
                swapped.set_weight(u, ratio * aggregate);
            }
        }
    }
    Ok(swapped)
}

/// Exchange envy `E(o, o') = U^o(exchanged) - U^o(current)`: the utility
/// slice `o` would gain by taking `o'`'s per-station aggregates. At most
/// [`envy_upper_bound_constant`] for proportional-fair slices with equal
/// shares and footprints at an equilibrium; non-positive means no envy.
pub fn envy(
    scenario: &NetworkScenario,
    allocation: &WeightAllocation,
    o: usize,
    o2: usize,
    mode: ExchangeMode,
) -> Result<f64> {
    let swapped = exchange_allocation(scenario, allocation, o, o2, mode)?;
    let current = slice_utility_from_rates(scenario, o, &compute_rates(scenario, allocation)?);
    let exchanged = slice_utility_from_rates(scenario, o, &compute_rates(scenario, &swapped)?);
    if exchanged == current {
        return Ok(0.0); // covers -inf on both sides
    }
    Ok(exchanged - current)
}

/// The analytic ceiling on exchange envy for proportional-fair slices:
/// `-ln(ln 2) - (1/ln 2 - 1) ln 2 = 0.059660...`, which rounds to 0.060.
pub fn envy_upper_bound_constant() -> f64 {
    let ln2 = std::f64::consts::LN_2;
    -ln2.ln() - (1.0 / ln2 - 1.0) * ln2
}

/// Capacity-equivalent comparison: the factor `kappa` by which every
/// capacity would have to be scaled for `baseline` utilities to reach
/// `target_utility`, and the same as a percentage `(kappa - 1) * 100`.
///
/// Scaling every capacity by `kappa` shifts a slice utility by `ln kappa`
/// when its fairness parameter is 1 and multiplies it by `kappa^(1-alpha)`
/// otherwise, so the scaled network utility is strictly increasing in
/// `kappa` and the equation has a unique root, found by bisection to a 1e-10
/// utility residual.
///
/// `per_slice_utilities` are the baseline's slice utilities (not share
/// weighted); they must be finite, and a slice with exactly zero utility
/// and `alpha != 1` makes the scaling degenerate (its utility never moves).
pub fn capacity_equivalent_gain(
    scenario: &NetworkScenario,
    target_utility: f64,
    per_slice_utilities: &[f64],
) -> Result<(f64, f64)> {
    if per_slice_utilities.len() != scenario.n_slices() {
        return Err(Error::InvalidParams(
            "per-slice utility count does not match the scenario".into(),
        ));
    }
    if !target_utility.is_finite() {
        return Err(Error::InvalidParams("target utility must be finite".into()));
    }
    for (o, (slice, &u)) in scenario
        .slices()
        .iter()
        .zip(per_slice_utilities)
        .enumerate()
    {
        let _ = o;
        if !u.is_finite() {
            return Err(Error::NonFiniteUtility { slice: slice.id.clone() });
        }
        if slice.alpha != 1.0 && u == 0.0 {
            return Err(Error::ZeroUtilityScaling { slice: slice.id.clone() });
        }
    }
    let scaled = |kappa: f64| -> f64 {
        scenario
            .slices()
            .iter()
            .zip(per_slice_utilities)
            .map(|(s, &u)| s.share * scale_utility(s.alpha, u, kappa))
            .sum()
    };
    // Bracket the root geometrically, then bisect on the utility residual.
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut guard = 0;
    while scaled(lo) > target_utility {
        lo *= 0.5;
        guard += 1;
        if guard > 4000 {
            return Err(Error::Numeric("capacity scaling bracket failed (low)".into()));
        }
    }
    guard = 0;
    while scaled(hi) < target_utility {
        hi *= 2.0;
        guard += 1;
        if guard > 4000 {
            return Err(Error::Numeric("capacity scaling bracket failed (high)".into()));
        }
    }
    let mut kappa = 0.5 * (lo + hi);
    for _ in 0..10_000 {
        kappa = 0.5 * (lo + hi);
        let value = scaled(kappa);
        if (value - target_utility).abs() <= 1e-10 {
            break;
        }
        if kappa == lo || kappa == hi {
            break;
        }
        if value < target_utility {
            lo = kappa;
        } else {
            hi = kappa;
        }
    }
    if (scaled(kappa) - target_utility).abs() > 1e-8 {
        return Err(Error::Numeric(format!(
            "capacity scaling residual {} did not meet tolerance",
            (scaled(kappa) - target_utility).abs()
        )));
    }
    Ok((kappa, (kappa - 1.0) * 100.0))
}

/// A metric that may be inapplicable, with the reason spelled out.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Value(f64),
    NotApplicable(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::NotApplicable(_) => None,
        }
    }
}

/// One directed envy measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvyEntry {
    pub from: String,
    pub to: String,
    pub envy: MetricValue,
}

/// Everything the metrics layer can say about one solved scenario.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    /// `U(w*) - U(NE)` in nats; applicable only when every slice is
    /// proportional fair.
    pub poa_gap: MetricValue,
    /// Directed envy for every requested slice pair.
    pub envy_matrix: Vec<EnvyEntry>,
    /// Extra capacity static slicing would need to match the equilibrium.
    pub gain_over_ss_percent: MetricValue,
    /// Extra capacity the equilibrium would need to match the social
    /// optimum (closed form for alpha = 1, best local optimum otherwise).
    pub loss_vs_so_percent: MetricValue,
    pub kappa_gain: MetricValue,
    pub kappa_loss: MetricValue,
    /// Free-form caveats, e.g. that the social optimum is a local one.
    pub flags: Vec<String>,
    /// Network utilities backing the percentages.
    pub utility_ne: f64,
    pub utility_ss: f64,
    pub utility_so: MetricValue,
    /// Per-slice utilities at the equilibrium and under static slicing.
    pub per_slice_ne: Vec<f64>,
    pub per_slice_ss: Vec<f64>,
}

/// Which metrics [`compute_metrics_report`] evaluates.
#[derive(Debug, Clone, Default)]
pub struct MetricsOptions {
    pub poa: bool,
    pub gain: bool,
    pub loss: bool,
    /// `None` skips envy; otherwise every ordered slice pair the mode
    /// accepts is measured and ineligible pairs are recorded as
    /// not-applicable entries.
    pub envy: Option<ExchangeMode>,
    /// Options for the numeric social optimum when some slice has
    /// `alpha != 1` and the optimum is needed.
    pub social_optimum: crate::baselines::SocialOptimumOptions,
}

/// Evaluates the requested metrics at an allocation (normally a certified
/// equilibrium).
pub fn compute_metrics_report(
    scenario: &NetworkScenario,
    allocation: &WeightAllocation,
    options: &MetricsOptions,
) -> Result<MetricsReport> {
    let rates = compute_rates(scenario, allocation)?;
    let per_slice_ne: Vec<f64> = (0..scenario.n_slices())
        .map(|o| slice_utility_from_rates(scenario, o, &rates))
        .collect();
    let utility_ne = network_utility_from_rates(scenario, &rates);
    let ss = crate::baselines::static_slicing(scenario)?;
    let all_log = scenario.slices().iter().all(|s| s.alpha == 1.0);
    let mut flags = Vec::new();

    let utility_so = if options.poa || options.loss {
        if all_log {
            MetricValue::Value(social_optimum_log(scenario)?.network_utility)
        } else {
            let numeric =
                crate::baselines::social_optimum_numeric(scenario, &options.social_optimum)?;
            flags.push("social optimum is a local optimum (alpha != 1)".to_string());
            MetricValue::Value(numeric.network_utility)
        }
    } else {
        MetricValue::NotApplicable("not requested".to_string())
    };

    let poa = if !options.poa {
        MetricValue::NotApplicable("not requested".to_string())
    } else if all_log {
        MetricValue::Value(poa_gap(scenario, allocation)?)
    } else {
        MetricValue::NotApplicable(
            "requires alpha = 1 on every slice; see the local-SO utility instead".to_string(),
        )
    };

    let (kappa_gain, gain_over_ss_percent) = if options.gain {
        let (kappa, percent) =
            capacity_equivalent_gain(scenario, utility_ne, &ss.utility_per_slice)?;
        (MetricValue::Value(kappa), MetricValue::Value(percent))
    } else {
        let na = || MetricValue::NotApplicable("not requested".to_string());
        (na(), na())
    };
    let (kappa_loss, loss_vs_so_percent) = match (&options.loss, &utility_so) {
        (true, MetricValue::Value(so)) => {
            let (kappa, percent) = capacity_equivalent_gain(scenario, *so, &per_slice_ne)?;
            (MetricValue::Value(kappa), MetricValue::Value(percent))
        }
        _ => {
            let na = || MetricValue::NotApplicable("not requested".to_string());
            (na(), na())
        }
    };

    let mut envy_matrix = Vec::new();
    if let Some(mode) = options.envy {
        for o in 0..scenario.n_slices() {
            for o2 in 0..scenario.n_slices() {
                if o == o2 {
                    continue;
                }
                let entry = match envy(scenario, allocation, o, o2, mode) {
                    Ok(value) => MetricValue::Value(value),
                    Err(Error::InvalidParams(reason)) => MetricValue::NotApplicable(reason),
                    Err(e) => return Err(e),
                };
                envy_matrix.push(EnvyEntry {
                    from: scenario.slices()[o].id.clone(),
                    to: scenario.slices()[o2].id.clone(),
                    envy: entry,
                });
            }
        }
    }

    Ok(MetricsReport {
        poa_gap: poa,
        envy_matrix,
        gain_over_ss_percent,
        loss_vs_so_percent,
        kappa_gain,
        kappa_loss,
        flags,
        utility_ne,
        utility_ss: ss.network_utility,
        utility_so,
        per_slice_ne,
        per_slice_ss: ss.utility_per_slice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::best_response::BestResponseOptions;
    use crate::dynamics::{nash_residual, run_dynamics, DynamicsOptions};
    use crate::model::testkit::{alloc, scenario};

    #[test]
    fn bound_constant_value() {
        let c = envy_upper_bound_constant();
        assert!((c - 0.05966010114160969).abs() < 1e-15);
        // Rounds to 0.060 and sits above the worst-case instance level.
        assert!((c * 1000.0).round() / 1000.0 == 0.060);
        assert!(c > 0.041);
        // Two-term recomputation at reduced precision.
        let coarse = 0.36651 - 0.30685;
        assert!((c - coarse).abs() < 5e-6);
    }

    #[test]
    fn exchange_direct_arithmetic() {
        // Slice 0 has 2 users at b0 with phi (0.5, 0.5); slice 1 aggregates
        // 0.4 there; after the exchange each slice-0 user carries 0.2.
        let sc = scenario(
            2,
            &[(0.5, 1.0), (0.5, 1.0)],
            &[(0, 0, 1.0, 0.5), (0, 0, 1.0, 0.3), (0, 1, 1.0, 0.2),
              (1, 0, 1.0, 0.4), (1, 1, 1.0, 0.6)],
        );
        let a = alloc(&sc, &[0.1, 0.15, 0.25, 0.4, 0.1]);
        // Strict mode applies: same footprint {b0, b1}, same share.
        let swapped = exchange_allocation(&sc, &a, 0, 1, ExchangeMode::Strict).unwrap();
        // Slice 0 at b0 takes 0.4 split by phi 0.5:0.3.
        assert!((swapped.weight(0) - 0.4 * 0.5 / 0.8).abs() < 1e-12);
        assert!((swapped.weight(1) - 0.4 * 0.3 / 0.8).abs() < 1e-12);
        // Slice 1 at b0 takes slice 0's 0.25.
        assert!((swapped.weight(3) - 0.25).abs() < 1e-12);
        // Loads preserved at every station.
        let before = compute_loads(&sc, &a).unwrap();
        let after = compute_loads(&sc, &swapped).unwrap();
        for b in 0..2 {
            assert!((before.total(b) - after.total(b)).abs() < 1e-15);
        }
    }

    #[test]
    fn exchange_identical_slices_is_identity() {
        let sc = scenario(
            1,
            &[(0.5, 1.0), (0.5, 1.0)],
            &[(0, 0, 1.0, 1.0), (1, 0, 1.0, 1.0)],
        );
        let a = alloc(&sc, &[0.5, 0.5]);
        let swapped = exchange_allocation(&sc, &a, 0, 1, ExchangeMode::Strict).unwrap();
        assert_eq!(swapped.weight(0), 0.5);
        assert_eq!(swapped.weight(1), 0.5);
        assert!((envy(&sc, &a, 0, 1, ExchangeMode::Strict).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn strict_mode_rejects_mismatches() {
        let sc = scenario(
            2,
            &[(0.5, 1.0), (0.5, 1.0)],
            &[(0, 0, 1.0, 1.0), (1, 0, 1.0, 0.5), (1, 1, 1.0, 0.5)],
        );
        let a = alloc(&sc, &[0.5, 0.25, 0.25]);
        assert!(exchange_allocation(&sc, &a, 0, 1, ExchangeMode::Strict).is_err());
        // Permissive mode works and zeroes the absent station.
        let swapped = exchange_allocation(&sc, &a, 0, 1, ExchangeMode::Permissive).unwrap();
        assert!((swapped.weight(0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn involution_on_priority_proportional_allocations() {
        // Exchange is an involution whenever within-station weights are
        // priority proportional, which holds at proportional-fair best
        // responses and at the closed-form social optimum.
        let sc = scenario(
            2,
            &[(0.5, 1.0), (0.5, 1.0)],
            &[(0, 0, 1.0, 0.6), (0, 1, 1.0, 0.4), (1, 0, 1.0, 0.3), (1, 1, 1.0, 0.7)],
        );
        let (_, report) = run_dynamics(&sc, None, &DynamicsOptions::default()).unwrap();
        let ne = report.final_allocation;
        let once = exchange_allocation(&sc, &ne, 0, 1, ExchangeMode::Strict).unwrap();
        let twice = exchange_allocation(&sc, &once, 0, 1, ExchangeMode::Strict).unwrap();
        for u in 0..sc.n_users() {
            assert!(
                (twice.weight(u) - ne.weight(u)).abs() <= 1e-15,
                "user {u}: {} vs {}",
                twice.weight(u),
                ne.weight(u)
            );
        }
    }

    #[test]
    fn poa_gap_zero_when_equilibrium_is_optimal() {
        // Symmetric single-station game: the equilibrium and the optimum
        // coincide.
        let sc = scenario(1, &[(0.5, 1.0), (0.5, 1.0)], &[(0, 0, 1.0, 1.0), (1, 0, 1.0, 1.0)]);
        let (_, report) = run_dynamics(&sc, None, &DynamicsOptions::default()).unwrap();
        assert!(nash_residual(&sc, &report.final_allocation, &BestResponseOptions::default())
            .unwrap()
            .abs()
            < 1e-9);
        let gap = poa_gap(&sc, &report.final_allocation).unwrap();
        assert!(gap.abs() < 1e-9, "gap {gap}");
    }

    #[test]
    fn poa_gap_requires_unit_alpha() {
        let sc = scenario(1, &[(0.5, 2.0), (0.5, 1.0)], &[(0, 0, 1.0, 1.0), (1, 0, 1.0, 1.0)]);
        let a = alloc(&sc, &[0.5, 0.5]);
        assert!(matches!(poa_gap(&sc, &a), Err(Error::UnsupportedAlpha { .. })));
    }

    #[test]
    fn capacity_gain_log_utilities() {
        // All alpha = 1 and a 0.1-nat utility gap: kappa = e^0.1.
        let sc = scenario(
            1,
            &[(0.5, 1.0), (0.5, 1.0)],
            &[(0, 0, 1.0, 1.0), (1, 0, 1.0, 1.0)],
        );
        let base = [-1.0, -2.0];
        let base_net = 0.5 * base[0] + 0.5 * base[1];
        let (kappa, percent) =
            capacity_equivalent_gain(&sc, base_net + 0.1, &base).unwrap();
        assert!((kappa - 0.1f64.exp()).abs() < 1e-9);
        assert!((percent - 10.517091808).abs() < 1e-6);
    }

    #[test]
    fn capacity_gain_power_law() {
        // A single effective slice with alpha = 2: utility -2 reaches -1 at
        // kappa = 2. The second slice only carries the share normalization.
        let sc = scenario(
            1,
            &[(0.999, 2.0), (0.001, 2.0)],
            &[(0, 0, 1.0, 1.0), (1, 0, 1.0, 1.0)],
        );
        let base = [-2.0, -2.0];
        let target = -1.0; // both slices at utility -1
        let (kappa, percent) = capacity_equivalent_gain(&sc, target, &base).unwrap();
        assert!((kappa - 2.0).abs() < 1e-9, "kappa {kappa}");
        assert!((percent - 100.0).abs() < 1e-6);
    }

    #[test]
    fn capacity_gain_mixed_population_residual() {
        let sc = scenario(
            1,
            &[(0.4, 1.0), (0.6, 2.5)],
            &[(0, 0, 1.0, 1.0), (1, 0, 1.0, 1.0)],
        );
        let base = [0.7, -1.3];
        let target = 0.4 * 0.7 + 0.6 * -1.3 + 0.25;
        let (kappa, _) = capacity_equivalent_gain(&sc, target, &base).unwrap();
        let scaled: f64 = sc
            .slices()
            .iter()
            .zip(&base)
            .map(|(s, &u)| s.share * scale_utility(s.alpha, u, kappa))
            .sum();
        assert!((scaled - target).abs() <= 1e-10);
    }

    #[test]
    fn capacity_gain_rejects_degenerate_slices() {
        let sc = scenario(
            1,
            &[(0.5, 2.0), (0.5, 1.0)],
            &[(0, 0, 1.0, 1.0), (1, 0, 1.0, 1.0)],
        );
        assert!(matches!(
            capacity_equivalent_gain(&sc, 0.5, &[0.0, 1.0]),
            Err(Error::ZeroUtilityScaling { .. })
        ));
        assert!(matches!(
            capacity_equivalent_gain(&sc, 0.5, &[f64::NEG_INFINITY, 1.0]),
            Err(Error::NonFiniteUtility { .. })
        ));
    }
}
