//! Scenario construction: randomized populations, spatial traffic
//! patterns, and the analytic instances with known optimality gaps and
//! envy levels.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::best_response::{best_response_to_loads, BestResponseOptions};
use crate::error::{Error, Result};
use crate::model::{NetworkScenario, ScenarioMetadata, SliceSpec, UserSpec};

/// How user capacities are drawn.
///
/// Capacity sampling stands in for any physical-layer model: the default
/// log-normal spread mimics the heavy-tailed rate diversity of real
/// deployments without modeling propagation.
#[derive(Debug, Clone, PartialEq)]
pub enum CapacitySampler {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl Default for CapacitySampler {
    fn default() -> Self {
        CapacitySampler::LogNormal {
            mu: 10.0f64.ln(),
            sigma: 0.5,
        }
    }
}

impl CapacitySampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        match self {
            CapacitySampler::Constant(c) => Ok(*c),
            CapacitySampler::Uniform { lo, hi } => Ok(rng.gen_range(*lo..=*hi)),
            CapacitySampler::LogNormal { mu, sigma } => {
                let dist = LogNormal::new(*mu, *sigma)
                    .map_err(|e| Error::InvalidParams(format!("log-normal: {e}")))?;
                Ok(dist.sample(rng))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            CapacitySampler::Constant(c) if *c <= 0.0 => {
                Err(Error::InvalidParams("constant capacity must be > 0".into()))
            }
            CapacitySampler::Uniform { lo, hi } if !(0.0 < *lo && lo <= hi) => {
                Err(Error::InvalidParams("uniform capacity needs 0 < lo <= hi".into()))
            }
            CapacitySampler::LogNormal { sigma, .. } if *sigma < 0.0 => {
                Err(Error::InvalidParams("log-normal sigma must be >= 0".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Fairness parameters per slice: one uniform draw per slice from a range,
/// or an explicit list.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaRule {
    Range { lo: f64, hi: f64 },
    PerSlice(Vec<f64>),
}

/// How slice shares are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShareRule {
    Equal,
    RandomSimplex,
}

/// Randomized-population knobs. The default ranges reproduce the sampling
/// envelope of the large-scale experiments: 2-12 slices, 10-90 stations,
/// 3-15 users per station, fairness parameters in [0.01, 30], priority
/// vectors uniform on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomScenarioParams {
    pub n_slices: (usize, usize),
    pub n_stations: (usize, usize),
    /// Users per station (total users = density * stations).
    pub user_density: (f64, f64),
    pub alpha: AlphaRule,
    pub share_rule: ShareRule,
    pub capacity: CapacitySampler,
    pub seed: u64,
    /// Re-attach users at single-slice stations so that every non-empty
    /// station hosts at least two slices.
    pub require_competition: bool,
    /// Attempt cap for the re-attachment loop.
    pub max_retries: u32,
}

impl Default for RandomScenarioParams {
    fn default() -> Self {
        RandomScenarioParams {
            n_slices: (2, 12),
            n_stations: (10, 90),
            user_density: (3.0, 15.0),
            alpha: AlphaRule::Range { lo: 0.01, hi: 30.0 },
            share_rule: ShareRule::RandomSimplex,
            capacity: CapacitySampler::default(),
            seed: 0,
            require_competition: true,
            max_retries: 100,
        }
    }
}

impl RandomScenarioParams {
    fn validate(&self) -> Result<()> {
        if self.n_slices.0 < 2 || self.n_slices.0 > self.n_slices.1 {
            return Err(Error::InvalidParams("slice range needs 2 <= lo <= hi".into()));
        }
        if self.n_stations.0 < 1 || self.n_stations.0 > self.n_stations.1 {
            return Err(Error::InvalidParams("station range needs 1 <= lo <= hi".into()));
        }
        if !(self.user_density.0 > 0.0 && self.user_density.0 <= self.user_density.1) {
            return Err(Error::InvalidParams("density range needs 0 < lo <= hi".into()));
        }
        match &self.alpha {
            AlphaRule::Range { lo, hi } if !(*lo > 0.0 && lo <= hi) => {
                return Err(Error::InvalidParams("alpha range needs 0 < lo <= hi".into()));
            }
            AlphaRule::PerSlice(list) if list.iter().any(|&a| a <= 0.0) => {
                return Err(Error::InvalidParams("per-slice alphas must be > 0".into()));
            }
            _ => {}
        }
        self.capacity.validate()
    }
}

fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

fn sample_range_usize(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Moves users away from single-slice stations until every non-empty
/// station hosts at least two slices, or the retry cap is hit.
fn enforce_competition(
    attachments: &mut [usize],
    owners: &[usize],
    n_stations: usize,
    rng: &mut ChaCha8Rng,
    max_retries: u32,
) -> bool {
    for _ in 0..max_retries {
        let mut slices_at: Vec<Vec<usize>> = vec![Vec::new(); n_stations];
        for (u, &b) in attachments.iter().enumerate() {
            if !slices_at[b].contains(&owners[u]) {
                slices_at[b].push(owners[u]);
            }
        }
        let violating: Vec<usize> = (0..n_stations).filter(|&b| slices_at[b].len() == 1).collect();
        if violating.is_empty() {
            return true;
        }
        for (u, b) in attachments.iter_mut().enumerate() {
            let _ = u;
            if violating.contains(b) {
                *b = rng.gen_range(0..n_stations);
            }
        }
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    n_stations: usize,
    shares: &[f64],
    alphas: &[f64],
    owners: &[usize],
    attachments: &[usize],
    capacities: &[f64],
    priorities: &[f64],
    metadata: ScenarioMetadata,
) -> Result<NetworkScenario> {
    let stations: Vec<String> = (0..n_stations).map(|b| format!("b{b}")).collect();
    let slices: Vec<SliceSpec> = shares
        .iter()
        .zip(alphas)
        .enumerate()
        .map(|(o, (&share, &alpha))| SliceSpec::new(format!("s{o}"), share, alpha))
        .collect();
    let users: Vec<UserSpec> = owners
        .iter()
        .enumerate()
        .map(|(u, &o)| UserSpec {
            id: format!("u{u}"),
            slice_id: format!("s{o}"),
            base_station: format!("b{}", attachments[u]),
            capacity: capacities[u],
            priority: priorities[u],
        })
        .collect();
    NetworkScenario::new(stations, slices, users, metadata)
}

/// Draws a random scenario; identical parameters and seed give an
/// identical scenario.
pub fn random_scenario(params: &RandomScenarioParams) -> Result<NetworkScenario> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_slices = sample_range_usize(&mut rng, params.n_slices);
    let n_stations = sample_range_usize(&mut rng, params.n_stations);
    let density = rng.gen_range(params.user_density.0..=params.user_density.1);
    let n_users = ((density * n_stations as f64).round() as usize).max(n_slices);

    // Owners: one user per slice guaranteed, the rest uniform.
    let mut owners: Vec<usize> = (0..n_slices).collect();
    while owners.len() < n_users {
        owners.push(rng.gen_range(0..n_slices));
    }
    let mut attachments: Vec<usize> = (0..n_users).map(|_| rng.gen_range(0..n_stations)).collect();
    if params.require_competition {
        let ok = enforce_competition(&mut attachments, &owners, n_stations, &mut rng, params.max_retries);
        if !ok {
            return Err(Error::InvalidParams(format!(
                "could not place users so that every station hosts two slices \
                 within {} retries (seed {})",
                params.max_retries, params.seed
            )));
        }
    }
    let shares = match params.share_rule {
        ShareRule::Equal => vec![1.0 / n_slices as f64; n_slices],
        ShareRule::RandomSimplex => simplex_point(&mut rng, n_slices),
    };
    let alphas: Vec<f64> = match &params.alpha {
        AlphaRule::Range { lo, hi } => (0..n_slices).map(|_| rng.gen_range(*lo..=*hi)).collect(),
        AlphaRule::PerSlice(list) => {
            if list.len() != n_slices {
                return Err(Error::InvalidParams(format!(
                    "{} per-slice alphas for {} slices",
                    list.len(),
                    n_slices
                )));
            }
            list.clone()
        }
    };
    // Priorities: uniform simplex per slice.
    let mut priorities = vec![0.0; n_users];
    for o in 0..n_slices {
        let members: Vec<usize> = (0..n_users).filter(|&u| owners[u] == o).collect();
        let point = simplex_point(&mut rng, members.len());
        for (&u, &phi) in members.iter().zip(&point) {
            priorities[u] = phi;
        }
    }
    let capacities: Vec<f64> = (0..n_users)
        .map(|_| params.capacity.sample(&mut rng))
        .collect::<Result<_>>()?;

    let metadata = ScenarioMetadata {
        label: "random".into(),
        seed: Some(params.seed),
        labels: BTreeMap::new(),
    };
    assemble(
        n_stations, &shares, &alphas, &owners, &attachments, &capacities, &priorities, metadata,
    )
}

/// The four spatial load patterns used for the traffic-mix experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    /// Every slice spreads its users uniformly.
    Uniform,
    /// All slices concentrate on one common hotspot set.
    OverlappingHotspots,
    /// Each slice concentrates on its own disjoint hotspot set.
    NonOverlappingHotspots,
    /// Two slices share one hotspot set, two stay uniform.
    Mixed,
}

impl PatternKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(PatternKind::Uniform),
            "overlapping" => Ok(PatternKind::OverlappingHotspots),
            "non-overlapping" => Ok(PatternKind::NonOverlappingHotspots),
            "mixed" => Ok(PatternKind::Mixed),
            other => Err(Error::InvalidParams(format!(
                "unknown pattern `{other}` (expected uniform, overlapping, \
                 non-overlapping or mixed)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PatternKind::Uniform => "uniform",
            PatternKind::OverlappingHotspots => "overlapping",
            PatternKind::NonOverlappingHotspots => "non-overlapping",
            PatternKind::Mixed => "mixed",
        }
    }
}

/// Knobs for [`patterned_scenario`]: 4 equal-share slices by default, with
/// a hotspot concentrating 70% of a slice's users on 20% of the stations.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternParams {
    pub n_slices: usize,
    pub n_stations: usize,
    pub users_per_slice: usize,
    pub alpha: f64,
    /// Fraction of a hotspot slice's users attached inside its hotspot.
    pub hotspot_mass: f64,
    /// Fraction of stations forming one hotspot set.
    pub hotspot_station_frac: f64,
    pub capacity: CapacitySampler,
    pub seed: u64,
}

impl Default for PatternParams {
    fn default() -> Self {
        PatternParams {
            n_slices: 4,
            n_stations: 20,
            users_per_slice: 25,
            alpha: 1.0,
            hotspot_mass: 0.7,
            hotspot_station_frac: 0.2,
            capacity: CapacitySampler::default(),
            seed: 0,
        }
    }
}

/// Builds a scenario with the requested spatial load pattern. Hotspot
/// patterns naturally create stations served by a single slice; those are
/// left in place (the engine's sole-occupancy convention handles them) and
/// surface as validation warnings, not errors.
pub fn patterned_scenario(kind: PatternKind, params: &PatternParams) -> Result<NetworkScenario> {
    if params.n_slices < 2 {
        return Err(Error::InvalidParams("need at least two slices".into()));
    }
    if !(params.hotspot_mass > 0.0 && params.hotspot_mass <= 1.0)
        || !(params.hotspot_station_frac > 0.0 && params.hotspot_station_frac < 1.0)
    {
        return Err(Error::InvalidParams("hotspot fractions out of range".into()));
    }
    params.capacity.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_stations = params.n_stations;
    let hotspot_size = ((n_stations as f64 * params.hotspot_station_frac).round() as usize).max(1);

    // Hotspot sets per slice (None = uniform slice).
    let mut station_perm: Vec<usize> = (0..n_stations).collect();
    for i in (1..station_perm.len()).rev() {
        let j = rng.gen_range(0..=i);
        station_perm.swap(i, j);
    }
    let shared: Vec<usize> = station_perm[..hotspot_size].to_vec();
    let hotspot_of = |o: usize| -> Option<Vec<usize>> {
        match kind {
            PatternKind::Uniform => None,
            PatternKind::OverlappingHotspots => Some(shared.clone()),
            PatternKind::NonOverlappingHotspots => {
                let start = o * hotspot_size;
                if start + hotspot_size > n_stations {
                    None
                } else {
                    Some(station_perm[start..start + hotspot_size].to_vec())
                }
            }
            PatternKind::Mixed => {
                if o < 2 {
                    Some(shared.clone())
                } else {
                    None
                }
            }
        }
    };
    if kind == PatternKind::NonOverlappingHotspots
        && params.n_slices * hotspot_size > n_stations
    {
        return Err(Error::InvalidParams(format!(
            "{} disjoint hotspots of {hotspot_size} stations do not fit in {n_stations}",
            params.n_slices
        )));
    }

    let n_users = params.n_slices * params.users_per_slice;
    let mut owners = Vec::with_capacity(n_users);
    let mut attachments = Vec::with_capacity(n_users);
    for o in 0..params.n_slices {
        let hotspot = hotspot_of(o);
        for _ in 0..params.users_per_slice {
            owners.push(o);
            let b = match &hotspot {
                Some(set) if rng.gen::<f64>() < params.hotspot_mass => {
                    set[rng.gen_range(0..set.len())]
                }
                Some(set) => loop {
                    let b = rng.gen_range(0..n_stations);
                    if !set.contains(&b) {
                        break b;
                    }
                },
                None => rng.gen_range(0..n_stations),
            };
            attachments.push(b);
        }
    }
    let shares = vec![1.0 / params.n_slices as f64; params.n_slices];
    let alphas = vec![params.alpha; params.n_slices];
    let mut priorities = vec![0.0; n_users];
    for o in 0..params.n_slices {
        let members: Vec<usize> = (0..n_users).filter(|&u| owners[u] == o).collect();
        let point = simplex_point(&mut rng, members.len());
        for (&u, &phi) in members.iter().zip(&point) {
            priorities[u] = phi;
        }
    }
    let capacities: Vec<f64> = (0..n_users)
        .map(|_| params.capacity.sample(&mut rng))
        .collect::<Result<_>>()?;
    let mut labels = BTreeMap::new();
    labels.insert("pattern".into(), kind.name().to_string());
    for o in 0..params.n_slices {
        if let Some(mut set) = hotspot_of(o) {
            set.sort_unstable();
            let ids: Vec<String> = set.iter().map(|b| format!("b{b}")).collect();
            labels.insert(format!("hotspot-s{o}"), ids.join(","));
        }
    }
    let metadata = ScenarioMetadata {
        label: format!("pattern-{}", kind.name()),
        seed: Some(params.seed),
        labels,
    };
    assemble(
        n_stations, &shares, &alphas, &owners, &attachments, &capacities, &priorities, metadata,
    )
}

/// The two-station, two-slice family whose optimality gap is known in
/// closed form.
///
/// Slice 1 has `m` unit-capacity users at station 1 (which only it serves)
/// and one at station 2; slice 2 has a single user at station 2. All
/// utilities are logarithmic and slice-1 priorities are uniform. Station 1
/// deliberately violates the competition assumption, which is what makes
/// the equilibrium concentrate slice 1's whole budget at station 2.
#[derive(Debug, Clone)]
pub struct TightGapInstance {
    pub scenario: NetworkScenario,
    /// Network utility of the closed-form social optimum.
    pub social_utility: f64,
    /// Network utility of the equilibrium.
    pub nash_utility: f64,
    /// Their difference at this `m`.
    pub gap: f64,
    /// The large-`m` limit of the gap, `s2 ln((s1+s2)/s2)`.
    pub gap_limit: f64,
}

/// Builds the tight-gap family member for a given `m >= 1` and shares.
/// Shares not summing to one are accepted (the closed forms still apply)
/// but leave a scenario that fails share-sum validation; a note is added
/// to the metadata in that case.
pub fn poa_tight_instance(m: usize, s1: f64, s2: f64) -> Result<TightGapInstance> {
    if m < 1 {
        return Err(Error::InvalidParams("m must be at least 1".into()));
    }
    if !(s1 > 0.0 && s2 > 0.0 && s1 < 1.0 && s2 < 1.0) {
        return Err(Error::InvalidParams("shares must lie in (0, 1)".into()));
    }
    let mut labels = BTreeMap::new();
    labels.insert("family".into(), "tight-gap".into());
    labels.insert("m".into(), m.to_string());
    if (s1 + s2 - 1.0).abs() > 1e-9 {
        labels.insert(
            "warning".into(),
            format!("shares sum to {}, not 1", s1 + s2),
        );
    }
    let stations = vec!["b0".to_string(), "b1".to_string()];
    let slices = vec![
        SliceSpec::new("s0", s1, 1.0),
        SliceSpec::new("s1", s2, 1.0),
    ];
    let phi = 1.0 / (m + 1) as f64;
    let mut users = Vec::new();
    for k in 0..m {
        users.push(UserSpec {
            id: format!("u{k}"),
            slice_id: "s0".into(),
            base_station: "b0".into(),
            capacity: 1.0,
            priority: phi,
        });
    }
    users.push(UserSpec {
        id: format!("u{m}"),
        slice_id: "s0".into(),
        base_station: "b1".into(),
        capacity: 1.0,
        priority: phi,
    });
    users.push(UserSpec {
        id: format!("u{}", m + 1),
        slice_id: "s1".into(),
        base_station: "b1".into(),
        capacity: 1.0,
        priority: 1.0,
    });
    let scenario = NetworkScenario::new(
        stations,
        slices,
        users,
        ScenarioMetadata {
            label: "tight-gap".into(),
            seed: None,
            labels,
        },
    )?;

    let mf = m as f64;
    let q = s1 / (mf + 1.0);
    let station1_term = q * mf * (1.0 / mf).ln();
    let social_utility =
        station1_term + q * (q / (q + s2)).ln() + s2 * (s2 / (q + s2)).ln();
    let nash_utility =
        station1_term + q * (s1 / (s1 + s2)).ln() + s2 * (s2 / (s1 + s2)).ln();
    Ok(TightGapInstance {
        scenario,
        social_utility,
        nash_utility,
        gap: social_utility - nash_utility,
        gap_limit: s2 * ((s1 + s2) / s2).ln(),
    })
}

/// Which branch of the worst-case envy family an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvyBranch {
    /// The second station's foreign load is at least one priority unit
    /// (`x >= 1`); the construction uses two filler slices.
    XAtLeastOne,
    /// `x < 1`; a single filler slice at station 1 suffices.
    XBelowOne,
}

/// A constructed two-station instance realizing an analytic envy level in
/// the small-share limit.
#[derive(Debug, Clone)]
pub struct EnvyInstance {
    pub scenario: NetworkScenario,
    /// Index of the envious slice.
    pub slice_o: usize,
    /// Index of the envied slice.
    pub slice_other: usize,
    pub branch: EnvyBranch,
    /// Root of `z^2 + x z - x = 0`: the load ratio the published family
    /// uses for its limit expression.
    pub x_hat: f64,
    /// Root of `phi1 z^2 + x z - x = 0`: the load ratio the equilibrium
    /// actually approaches (the published quadratic drops the `phi1`
    /// factor; see `analytic_envy_consistent`).
    pub y_hat: f64,
    /// The published branch expression, evaluated verbatim (with its
    /// `x_hat` root and its printed signs).
    pub analytic_envy_displayed: f64,
    /// The branch expression rederived from the construction itself: same
    /// shape, but with `y_hat` and the sign the exchange arithmetic gives.
    /// Direct envy computation converges to this value as the share
    /// shrinks.
    pub analytic_envy_consistent: f64,
}

/// Positive root of `z^2 + x z - x = 0`.
pub fn x_hat(x: f64) -> f64 {
    (-x + (x * x + 4.0 * x).sqrt()) / 2.0
}

/// Positive root of `phi1 z^2 + x z - x = 0` (reduces to [`x_hat`] at
/// `phi1 = 1`).
pub fn y_hat(x: f64, phi1: f64) -> f64 {
    (-x + (x * x + 4.0 * x * phi1).sqrt()) / (2.0 * phi1)
}

/// The published branch expression with a caller-chosen root.
fn branch_expression(x: f64, phi1: f64, root: f64, consistent_sign: bool) -> f64 {
    let phi2 = 1.0 - phi1;
    if x >= 1.0 {
        phi1 * (phi1 / (1.0 - root + root * phi1)).ln() - phi2 * root.ln()
    } else {
        let first = phi1 * ((1.0 - x + x * phi1) / (1.0 - root + root * phi1)).ln();
        let second = phi2 * (x / root).ln();
        if consistent_sign {
            first + second
        } else {
            first - second
        }
    }
}

/// Builds the two-station envy instance for `(x, phi1)` at share `s_o`.
///
/// Slice `o` has one user per station with priorities `(phi1, 1 - phi1)`;
/// the foreign loads are pinned to `a_1 = 1 - s_o - x phi2 s_o` and
/// `a_2 = x phi2 s_o` by filler slices, and the envied slice's priorities
/// are tuned so that its best response lands exactly on the target
/// exchange weights. The resulting profile is an exact equilibrium at
/// finite `s_o`, and its exchange envy approaches the branch expression as
/// `s_o` shrinks.
pub fn envy_instance_family(x: f64, phi1: f64, share: f64) -> Result<EnvyInstance> {
    if x <= 0.0 {
        return Err(Error::InvalidParams("x must be > 0".into()));
    }
    if !(phi1 > 0.0 && phi1 < 1.0) {
        return Err(Error::InvalidParams("phi1 must lie strictly inside (0, 1)".into()));
    }
    let phi2 = 1.0 - phi1;
    let a1 = 1.0 - share - x * phi2 * share;
    let a2 = x * phi2 * share;
    if share <= 0.0 || a1 <= phi1 * share || a1 <= (1.0 - x * phi2) * share {
        return Err(Error::InvalidParams(
            "share too large for this (x, phi1): the filler slice at station 1 \
             would need a non-positive share"
                .into(),
        ));
    }

    // The target exchange weights of the envied slice.
    let branch = if x >= 1.0 { EnvyBranch::XAtLeastOne } else { EnvyBranch::XBelowOne };
    let (target1, target2) = match branch {
        EnvyBranch::XAtLeastOne => (phi1 * share, phi2 * share),
        EnvyBranch::XBelowOne => ((1.0 - x * phi2) * share, x * phi2 * share),
    };

    // Solve the envious slice's exact best response against the pinned
    // loads on a creation-time copy of the geometry.
    let probe = build_envy_scenario(share, phi1, a1, a2, target1, target2, 0.5, branch)?;
    let opts = BestResponseOptions::default();
    let others = vec![a1, a2];
    let response = best_response_to_loads(&probe, 0, &others, &opts)?;
    let d1 = response[0].1;
    let d2 = response[1].1;

    // Priorities of the envied slice: the unique ratio that makes its best
    // response equal the target weights, given the envious slice's weights.
    // With a'_b + target_b = a_b + d_b the fixed-point ratio collapses to
    // the closed form below.
    let ratio = (target1 / target2) * ((a2 - target2 + d2) / (a2 + d2))
        * ((a1 + d1) / (a1 - target1 + d1));
    let phi_t2 = 1.0 / (1.0 + ratio);
    let phi_t1 = 1.0 - phi_t2;

    let scenario = build_envy_scenario(share, phi1, a1, a2, target1, target2, phi_t1, branch)?;
    Ok(EnvyInstance {
        scenario,
        slice_o: 0,
        slice_other: 1,
        branch,
        x_hat: x_hat(x),
        y_hat: y_hat(x, phi1),
        analytic_envy_displayed: branch_expression(x, phi1, x_hat(x), false),
        analytic_envy_consistent: branch_expression(x, phi1, y_hat(x, phi1), true),
    })
}

#[allow(clippy::too_many_arguments)]
fn build_envy_scenario(
    share: f64,
    phi1: f64,
    a1: f64,
    a2: f64,
    target1: f64,
    target2: f64,
    phi_t1: f64,
    branch: EnvyBranch,
) -> Result<NetworkScenario> {
    let stations = vec!["b0".to_string(), "b1".to_string()];
    let mut slices = vec![
        SliceSpec::new("envious", share, 1.0),
        SliceSpec::new("envied", share, 1.0),
        SliceSpec::new("filler1", a1 - target1, 1.0),
    ];
    let mut users = vec![
        UserSpec {
            id: "o-b0".into(),
            slice_id: "envious".into(),
            base_station: "b0".into(),
            capacity: 1.0,
            priority: phi1,
        },
        UserSpec {
            id: "o-b1".into(),
            slice_id: "envious".into(),
            base_station: "b1".into(),
            capacity: 1.0,
            priority: 1.0 - phi1,
        },
        UserSpec {
            id: "e-b0".into(),
            slice_id: "envied".into(),
            base_station: "b0".into(),
            capacity: 1.0,
            priority: phi_t1,
        },
        UserSpec {
            id: "e-b1".into(),
            slice_id: "envied".into(),
            base_station: "b1".into(),
            capacity: 1.0,
            priority: 1.0 - phi_t1,
        },
        UserSpec {
            id: "f1".into(),
            slice_id: "filler1".into(),
            base_station: "b0".into(),
            capacity: 1.0,
            priority: 1.0,
        },
    ];
    if branch == EnvyBranch::XAtLeastOne && a2 - target2 > 0.0 {
        slices.push(SliceSpec::new("filler2", a2 - target2, 1.0));
        users.push(UserSpec {
            id: "f2".into(),
            slice_id: "filler2".into(),
            base_station: "b1".into(),
            capacity: 1.0,
            priority: 1.0,
        });
    }
    let mut labels = BTreeMap::new();
    labels.insert("family".into(), "worst-case-envy".into());
    NetworkScenario::new(
        stations,
        slices,
        users,
        ScenarioMetadata {
            label: "envy-family".into(),
            seed: None,
            labels,
        },
    )
}

/// Numeric search for the largest value of the consistent branch
/// expression over a grid of `(x, phi1)`. The published worst case is
/// 0.041; the displayed expression instead diverges as `x` shrinks, which
/// is why the search uses the consistent form (see [`EnvyInstance`]).
pub fn envy_family_search(grid_x: usize, grid_phi: usize) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..grid_x {
        // Log-spaced x in [0.05, 20].
        let t = i as f64 / (grid_x - 1) as f64;
        let x = 0.05 * (20.0f64 / 0.05).powf(t);
        for j in 1..grid_phi {
            let phi1 = j as f64 / grid_phi as f64;
            let value = branch_expression(x, phi1, y_hat(x, phi1), true);
            if value > best.0 {
                best = (value, x, phi1);
            }
        }
    }
    best
}
