//! Domain types and the share-constrained proportional allocation arithmetic.
//!
//! A [`NetworkScenario`] is an immutable game instance: base stations, slices
//! holding shares of the infrastructure, and users attached to stations. A
//! [`WeightAllocation`] is the game state: one non-negative weight per user,
//! summing to the owning slice's share. Every operation here is a pure
//! function of its inputs, so concurrent read-only use is safe.

use std::collections::BTreeMap;

use crate::alpha::alpha_fair_value;
use crate::error::{Error, Result};

/// Free-form instance annotations plus the RNG seed that produced it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioMetadata {
    pub label: String,
    pub seed: Option<u64>,
    pub labels: BTreeMap<String, String>,
}

/// A tenant: a share of the infrastructure, a fairness parameter and users.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub id: String,
    /// Network share, in (0, 1). All shares of a scenario sum to one.
    pub share: f64,
    /// Fairness parameter of the slice's utility, > 0.
    pub alpha: f64,
    /// Ids of the slice's users, derived from the user list at construction.
    pub user_ids: Vec<String>,
}

impl SliceSpec {
    pub fn new(id: impl Into<String>, share: f64, alpha: f64) -> Self {
        SliceSpec {
            id: id.into(),
            share,
            alpha,
            user_ids: Vec::new(),
        }
    }
}

/// A user: attachment point, peak capacity and relative priority.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSpec {
    pub id: String,
    pub slice_id: String,
    pub base_station: String,
    /// Rate the user would get with the whole station to itself (> 0).
    pub capacity: f64,
    /// Relative priority within the slice (>= 0; slice priorities sum to 1).
    pub priority: f64,
}

/// An immutable game instance with a precomputed station/slice index.
#[derive(Debug, Clone)]
pub struct NetworkScenario {
    base_station_ids: Vec<String>,
    slices: Vec<SliceSpec>,
    users: Vec<UserSpec>,
    metadata: ScenarioMetadata,
    user_slice: Vec<usize>,
    user_station: Vec<usize>,
    station_users: Vec<Vec<usize>>,
    station_slices: Vec<Vec<usize>>,
    slice_users: Vec<Vec<usize>>,
    /// Per slice: (station index, users of the slice there), station-sorted.
    slice_stations: Vec<Vec<(usize, Vec<usize>)>>,
}

impl NetworkScenario {
    /// Builds a scenario and its lookup index.
    ///
    /// Only structural integrity is enforced here (ids resolve, no
    /// duplicates); numeric invariants such as share sums are checked by
    /// [`validate_scenario`], which reports rather than refuses, so that
    /// deliberately ill-formed instances can still be inspected.
    pub fn new(
        base_station_ids: Vec<String>,
        mut slices: Vec<SliceSpec>,
        users: Vec<UserSpec>,
        metadata: ScenarioMetadata,
    ) -> Result<Self> {
        if base_station_ids.is_empty() {
            return Err(Error::Scenario("no base stations".into()));
        }
        if slices.is_empty() {
            return Err(Error::Scenario("no slices".into()));
        }
        let mut station_index = BTreeMap::new();
        for (b, id) in base_station_ids.iter().enumerate() {
            if station_index.insert(id.clone(), b).is_some() {
                return Err(Error::Scenario(format!("duplicate base station id `{id}`")));
            }
        }
        let mut slice_index = BTreeMap::new();
        for (o, s) in slices.iter().enumerate() {
            if slice_index.insert(s.id.clone(), o).is_some() {
                return Err(Error::Scenario(format!("duplicate slice id `{}`", s.id)));
            }
        }
        let mut user_ids = BTreeMap::new();
        let mut user_slice = Vec::with_capacity(users.len());
        let mut user_station = Vec::with_capacity(users.len());
        for (u, spec) in users.iter().enumerate() {
            if user_ids.insert(spec.id.clone(), u).is_some() {
                return Err(Error::Scenario(format!("duplicate user id `{}`", spec.id)));
            }
            let o = *slice_index.get(&spec.slice_id).ok_or_else(|| {
                Error::Scenario(format!(
                    "user `{}` references unknown slice `{}`",
                    spec.id, spec.slice_id
                ))
            })?;
            let b = *station_index.get(&spec.base_station).ok_or_else(|| {
                Error::Scenario(format!(
                    "user `{}` references unknown base station `{}`",
                    spec.id, spec.base_station
                ))
            })?;
            user_slice.push(o);
            user_station.push(b);
        }

        let n_b = base_station_ids.len();
        let n_o = slices.len();
        let mut station_users = vec![Vec::new(); n_b];
        let mut slice_users = vec![Vec::new(); n_o];
        for u in 0..users.len() {
            station_users[user_station[u]].push(u);
            slice_users[user_slice[u]].push(u);
        }
        let mut station_slices = vec![Vec::new(); n_b];
        for (b, us) in station_users.iter().enumerate() {
            let mut present: Vec<usize> = us.iter().map(|&u| user_slice[u]).collect();
            present.sort_unstable();
            present.dedup();
            station_slices[b] = present;
        }
        let mut slice_stations = vec![Vec::new(); n_o];
        for (o, us) in slice_users.iter().enumerate() {
            let mut by_station: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &u in us {
                by_station.entry(user_station[u]).or_default().push(u);
            }
            slice_stations[o] = by_station.into_iter().collect();
        }
        // Derive the per-slice user id lists.
        for (o, s) in slices.iter_mut().enumerate() {
            s.user_ids = slice_users[o].iter().map(|&u| users[u].id.clone()).collect();
        }

        Ok(NetworkScenario {
            base_station_ids,
            slices,
            users,
            metadata,
            user_slice,
            user_station,
            station_users,
            station_slices,
            slice_users,
            slice_stations,
        })
    }

    pub fn base_station_ids(&self) -> &[String] {
        &self.base_station_ids
    }
    pub fn slices(&self) -> &[SliceSpec] {
        &self.slices
    }
    pub fn users(&self) -> &[UserSpec] {
        &self.users
    }
    pub fn metadata(&self) -> &ScenarioMetadata {
        &self.metadata
    }
    pub fn metadata_mut(&mut self) -> &mut ScenarioMetadata {
        &mut self.metadata
    }
    pub fn n_stations(&self) -> usize {
        self.base_station_ids.len()
    }
    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn slice_index(&self, id: &str) -> Option<usize> {
        self.slices.iter().position(|s| s.id == id)
    }
    pub fn station_index(&self, id: &str) -> Option<usize> {
        self.base_station_ids.iter().position(|b| b == id)
    }
    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.iter().position(|u| u.id == id)
    }

    pub fn slice_of_user(&self, u: usize) -> usize {
        self.user_slice[u]
    }
    pub fn station_of_user(&self, u: usize) -> usize {
        self.user_station[u]
    }
    pub fn users_of_slice(&self, o: usize) -> &[usize] {
        &self.slice_users[o]
    }
    pub fn users_at_station(&self, b: usize) -> &[usize] {
        &self.station_users[b]
    }
    pub fn slices_at_station(&self, b: usize) -> &[usize] {
        &self.station_slices[b]
    }
    /// The slice's footprint: (station, users of the slice there) pairs.
    pub fn slice_stations(&self, o: usize) -> &[(usize, Vec<usize>)] {
        &self.slice_stations[o]
    }
    /// Station indices where the slice has users.
    pub fn slice_footprint(&self, o: usize) -> Vec<usize> {
        self.slice_stations[o].iter().map(|&(b, _)| b).collect()
    }

    /// A station is sole-occupancy when exactly one slice has users there.
    /// That slice's users receive the whole station regardless of weights;
    /// by convention they carry zero weight.
    pub fn is_sole_occupancy(&self, b: usize) -> bool {
        self.station_slices[b].len() == 1
    }
    /// A station is contested when at least two slices have users there.
    pub fn is_contested(&self, b: usize) -> bool {
        self.station_slices[b].len() >= 2
    }

    /// Log of the within-station split coefficient of one user,
    /// `ln beta_u = (1/alpha) ln phi_u + (1/alpha - 1) ln c_u`.
    ///
    /// `-inf` when the priority is zero. Working in log space keeps the
    /// extreme fairness parameters of the random-scenario envelope (alpha
    /// down to 0.01) out of overflow territory.
    pub(crate) fn ln_beta(&self, u: usize) -> f64 {
        let spec = &self.users[u];
        let alpha = self.slices[self.user_slice[u]].alpha;
        if spec.priority <= 0.0 {
            return f64::NEG_INFINITY;
        }
        spec.priority.ln() / alpha + (1.0 / alpha - 1.0) * spec.capacity.ln()
    }

    /// Within-slice, within-station proportional split derived from the
    /// beta coefficients: `x_u = beta_u / sum(beta_v)` over the slice's
    /// users at the user's station. Falls back to a uniform split when all
    /// betas vanish (all priorities zero at that station).
    ///
    /// Proportions below 1e-250 are flushed to exact zero. Extreme
    /// fairness parameters (1/alpha up to 100) push dominated users into
    /// the denormal range, where products with the station budget round to
    /// zero in some rounds and not others; flushing keeps such users at a
    /// consistent exact zero so the relative-change machinery can exclude
    /// them.
    pub(crate) fn beta_split(&self, station_users: &[usize]) -> Vec<f64> {
        let lns: Vec<f64> = station_users.iter().map(|&u| self.ln_beta(u)).collect();
        let m = lns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return vec![1.0 / station_users.len() as f64; station_users.len()];
        }
        let weights: Vec<f64> = lns
            .iter()
            .map(|&l| {
                let x = (l - m).exp();
                if x < 1e-250 {
                    0.0
                } else {
                    x
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }
}

/// The game state: one weight per user, aligned with `scenario.users()`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAllocation {
    weights: Vec<f64>,
}

impl WeightAllocation {
    /// Wraps a weight vector aligned with the scenario's user order.
    pub fn new(scenario: &NetworkScenario, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != scenario.n_users() {
            return Err(Error::Allocation(format!(
                "expected {} weights, got {}",
                scenario.n_users(),
                weights.len()
            )));
        }
        Ok(WeightAllocation { weights })
    }

    /// Builds an allocation from a user-id keyed map. Every user must be
    /// present and no unknown ids are allowed.
    pub fn from_map(scenario: &NetworkScenario, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut weights = vec![f64::NAN; scenario.n_users()];
        for (id, &w) in map {
            let u = scenario
                .user_index(id)
                .ok_or_else(|| Error::Allocation(format!("unknown user id `{id}`")))?;
            weights[u] = w;
        }
        if let Some(u) = weights.iter().position(|w| w.is_nan()) {
            return Err(Error::Allocation(format!(
                "missing weight for user `{}`",
                scenario.users()[u].id
            )));
        }
        Ok(WeightAllocation { weights })
    }

    /// Per-slice uniform weights `s_o / |U^o|`, zero at sole-occupancy
    /// stations. Handy as a strictly positive starting point.
    pub fn uniform(scenario: &NetworkScenario) -> Self {
        let mut weights = vec![0.0; scenario.n_users()];
        for (o, slice) in scenario.slices().iter().enumerate() {
            let eligible: Vec<usize> = scenario
                .users_of_slice(o)
                .iter()
                .copied()
                .filter(|&u| scenario.is_contested(scenario.station_of_user(u)))
                .collect();
            let pool = if eligible.is_empty() { &[][..] } else { &eligible[..] };
            for &u in pool {
                weights[u] = slice.share / pool.len() as f64;
            }
        }
        WeightAllocation { weights }
    }

    pub fn weight(&self, u: usize) -> f64 {
        self.weights[u]
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn set_weight(&mut self, u: usize, w: f64) {
        self.weights[u] = w;
    }

    pub fn to_map(&self, scenario: &NetworkScenario) -> BTreeMap<String, f64> {
        scenario
            .users()
            .iter()
            .zip(&self.weights)
            .map(|(u, &w)| (u.id.clone(), w))
            .collect()
    }

    /// Checks the allocation's own invariants: non-negative weights,
    /// per-slice budgets met, zero weight at sole-occupancy stations.
    pub fn check(&self, scenario: &NetworkScenario, tol: f64) -> Vec<String> {
        let mut issues = Vec::new();
        for (u, &w) in self.weights.iter().enumerate() {
            if w < 0.0 {
                issues.push(format!("user `{}` has negative weight {w}", scenario.users()[u].id));
            }
            if w != 0.0 && scenario.is_sole_occupancy(scenario.station_of_user(u)) {
                issues.push(format!(
                    "user `{}` at sole-occupancy station carries weight {w} (convention is 0)",
                    scenario.users()[u].id
                ));
            }
        }
        for (o, slice) in scenario.slices().iter().enumerate() {
            let total: f64 = scenario.users_of_slice(o).iter().map(|&u| self.weights[u]).sum();
            // Budget applies to contested stations; sole-occupancy users sit
            // at zero, so the full-slice sum still has to meet the share
            // unless the slice has no contested station at all.
            let has_contested = scenario
                .slice_stations(o)
                .iter()
                .any(|&(b, _)| scenario.is_contested(b));
            if has_contested && (total - slice.share).abs() > tol {
                issues.push(format!(
                    "slice `{}` weights sum to {total}, share is {}",
                    slice.id, slice.share
                ));
            }
        }
        issues
    }
}

/// Per-station total loads with per-slice decompositions on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    total: Vec<f64>,
    /// `per_slice[o][b]` is the weight slice `o` places at station `b`.
    per_slice: Vec<Vec<f64>>,
}

impl LoadVector {
    /// Total load `l_b` at one station.
    pub fn total(&self, b: usize) -> f64 {
        self.total[b]
    }
    pub fn totals(&self) -> &[f64] {
        &self.total
    }
    /// Slice `o`'s own aggregate at station `b`.
    pub fn slice_load(&self, o: usize, b: usize) -> f64 {
        self.per_slice[o][b]
    }
    /// Aggregate weight of everyone but slice `o` at station `b`, summed
    /// directly over the other slices to avoid cancellation.
    pub fn others_load(&self, o: usize, b: usize) -> f64 {
        self.per_slice
            .iter()
            .enumerate()
            .filter(|&(o2, _)| o2 != o)
            .map(|(_, row)| row[b])
            .sum()
    }
}

/// Sums weights per station and per (slice, station).
pub fn compute_loads(scenario: &NetworkScenario, allocation: &WeightAllocation) -> Result<LoadVector> {
    if allocation.weights().len() != scenario.n_users() {
        return Err(Error::Allocation("allocation does not match scenario".into()));
    }
    let mut per_slice = vec![vec![0.0; scenario.n_stations()]; scenario.n_slices()];
    for u in 0..scenario.n_users() {
        per_slice[scenario.slice_of_user(u)][scenario.station_of_user(u)] += allocation.weight(u);
    }
    let total = (0..scenario.n_stations())
        .map(|b| per_slice.iter().map(|row| row[b]).sum())
        .collect();
    Ok(LoadVector { total, per_slice })
}

/// Per-user rates, same units as the capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector {
    rates: Vec<f64>,
}

impl RateVector {
    pub fn rate(&self, u: usize) -> f64 {
        self.rates[u]
    }
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
    pub(crate) fn from_raw(rates: Vec<f64>) -> Self {
        RateVector { rates }
    }
}

/// Rates under the share-constrained proportional allocation rule.
///
/// At a contested station each user gets the fraction `w_u / l_b` of the
/// resource, i.e. `r_u = (w_u / l_b) c_u`. At a sole-occupancy station the
/// occupying slice receives everything regardless of its (zero) weights;
/// its users split the station proportionally to their beta coefficients,
/// the same within-station rule static slicing uses.
pub fn compute_rates(scenario: &NetworkScenario, allocation: &WeightAllocation) -> Result<RateVector> {
    let loads = compute_loads(scenario, allocation)?;
    let mut rates = vec![0.0; scenario.n_users()];
    for b in 0..scenario.n_stations() {
        let users = scenario.users_at_station(b);
        if users.is_empty() {
            continue;
        }
        if scenario.is_sole_occupancy(b) {
            let split = scenario.beta_split(users);
            for (&u, x) in users.iter().zip(split) {
                rates[u] = x * scenario.users()[u].capacity;
            }
        } else {
            let l = loads.total(b);
            if l <= 0.0 {
                return Err(Error::DegenerateAllocation {
                    station: scenario.base_station_ids()[b].clone(),
                });
            }
            for &u in users {
                rates[u] = allocation.weight(u) / l * scenario.users()[u].capacity;
            }
        }
    }
    Ok(RateVector { rates })
}

/// Priority-weighted alpha-fair utility of one slice given precomputed
/// rates. Zero-priority users are skipped, which keeps comparisons total
/// even when such a user has zero rate.
pub fn slice_utility_from_rates(scenario: &NetworkScenario, o: usize, rates: &RateVector) -> f64 {
    let alpha = scenario.slices()[o].alpha;
    let mut total = 0.0;
    for &u in scenario.users_of_slice(o) {
        let phi = scenario.users()[u].priority;
        if phi > 0.0 {
            total += phi * alpha_fair_value(alpha, rates.rate(u));
        }
    }
    total
}

/// Priority-weighted alpha-fair utility of one slice.
pub fn slice_utility(
    scenario: &NetworkScenario,
    o: usize,
    allocation: &WeightAllocation,
) -> Result<f64> {
    let rates = compute_rates(scenario, allocation)?;
    Ok(slice_utility_from_rates(scenario, o, &rates))
}

/// Share-weighted overall network utility `sum_o s_o U^o(w)`.
pub fn network_utility(scenario: &NetworkScenario, allocation: &WeightAllocation) -> Result<f64> {
    let rates = compute_rates(scenario, allocation)?;
    Ok(network_utility_from_rates(scenario, &rates))
}

/// Share-weighted overall network utility from precomputed rates.
pub fn network_utility_from_rates(scenario: &NetworkScenario, rates: &RateVector) -> f64 {
    scenario
        .slices()
        .iter()
        .enumerate()
        .map(|(o, s)| s.share * slice_utility_from_rates(scenario, o, rates))
        .sum()
}

/// Outcome of [`validate_scenario`]: hard invariant violations and
/// advisory warnings (competition-at-all-resources violations are warnings
/// because some analytic instances break it by design).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub sole_occupancy_stations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

/// Checks the numeric invariants of a scenario and flags sole-occupancy
/// stations. Report-only: nothing here fails.
pub fn validate_scenario(scenario: &NetworkScenario) -> ValidationReport {
    let mut report = ValidationReport::default();
    let share_sum: f64 = scenario.slices().iter().map(|s| s.share).sum();
    if (share_sum - 1.0).abs() > 1e-9 {
        report
            .errors
            .push(format!("slice shares sum to {share_sum}, expected 1"));
    }
    for (o, slice) in scenario.slices().iter().enumerate() {
        if !(slice.share > 0.0 && slice.share < 1.0) {
            report
                .errors
                .push(format!("slice `{}` share {} outside (0, 1)", slice.id, slice.share));
        }
        if slice.alpha <= 0.0 {
            report
                .errors
                .push(format!("slice `{}` alpha {} must be > 0", slice.id, slice.alpha));
        }
        let users = scenario.users_of_slice(o);
        if users.is_empty() {
            report.errors.push(format!("slice `{}` has no users", slice.id));
            continue;
        }
        let phi_sum: f64 = users.iter().map(|&u| scenario.users()[u].priority).sum();
        if (phi_sum - 1.0).abs() > 1e-9 {
            report.errors.push(format!(
                "slice `{}` priorities sum to {phi_sum}, expected 1",
                slice.id
            ));
        }
    }
    for user in scenario.users() {
        if user.capacity <= 0.0 {
            report
                .errors
                .push(format!("user `{}` capacity {} must be > 0", user.id, user.capacity));
        }
        if user.priority < 0.0 {
            report
                .errors
                .push(format!("user `{}` priority {} must be >= 0", user.id, user.priority));
        }
    }
    for b in 0..scenario.n_stations() {
        if scenario.is_sole_occupancy(b) {
            let id = scenario.base_station_ids()[b].clone();
            report.warnings.push(format!(
                "station `{id}` has users from a single slice (no competition there)"
            ));
            report.sole_occupancy_stations.push(id);
        }
    }
    report
}
