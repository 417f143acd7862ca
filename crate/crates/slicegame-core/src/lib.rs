//! A network-slicing game engine built on share-constrained proportional
//! allocation.
//!
//! Tenants (slices) hold fixed shares of a pool of base stations and split
//! those shares into per-user weights; each station's capacity is divided
//! among its users proportionally to the weights. A slice that optimizes
//! its own alpha-fair utility against the others' aggregate loads plays a
//! best response, and the induced game is what this crate models:
//!
//! - [`model`]: scenarios, allocations, loads, rates, utilities;
//! - [`best_response`]: the per-slice solver, its fixed-point certificate,
//!   and the protective allocation that never falls below static slicing;
//! - [`dynamics`]: sequential best-response rounds, convergence tracking
//!   and equilibrium certification;
//! - [`baselines`]: static slicing and the social optimum;
//! - [`metrics`]: optimality gap, exchange envy, capacity-equivalent
//!   gain/loss;
//! - [`scenarios`]: random populations, spatial traffic patterns and the
//!   analytic worst-case families.
//!
//! ```
//! use slicegame_core::prelude::*;
//!
//! let scenario = random_scenario(&RandomScenarioParams {
//!     n_slices: (2, 3),
//!     n_stations: (4, 6),
//!     user_density: (3.0, 4.0),
//!     alpha: AlphaRule::Range { lo: 1.0, hi: 2.0 },
//!     seed: 7,
//!     ..RandomScenarioParams::default()
//! })?;
//! let (_, report) = run_dynamics(&scenario, None, &DynamicsOptions::default())?;
//! assert!(report.converged);
//! assert!(report.nash_residual < 1e-6);
//! # Ok::<(), slicegame_core::Error>(())
//! ```

pub mod alpha;
pub mod baselines;
pub mod best_response;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod model;
pub mod scenarios;

pub use error::{Error, Result};

/// One-stop imports for the common workflow.
pub mod prelude {
    pub use crate::alpha::{alpha_fair_deriv, alpha_fair_value, scale_utility};
    pub use crate::baselines::{
        project_to_simplex, social_gradient, social_optimum_log, social_optimum_numeric,
        static_slicing, BaselineResult, SocialOptimumOptions,
    };
    pub use crate::best_response::{
        apply_slice_weights, best_response, best_response_to_loads, beta_coefficients,
        protective_allocation, stationarity_residual, stationarity_residual_perturbed,
        BestResponseOptions, BetaCoefficients,
    };
    pub use crate::dynamics::{
        default_initial_allocation, lyapunov, nash_residual, round_deltas, run_dynamics,
        DynamicsOptions, EquilibriumReport, GameTrace, StoppingRule, UpdateOrder,
    };
    pub use crate::error::{Error, Result};
    pub use crate::metrics::{
        capacity_equivalent_gain, compute_metrics_report, envy, envy_upper_bound_constant,
        exchange_allocation, poa_gap, EnvyEntry, ExchangeMode, MetricValue, MetricsOptions,
        MetricsReport,
    };
    pub use crate::model::{
        compute_loads, compute_rates, network_utility, network_utility_from_rates,
        slice_utility, slice_utility_from_rates, validate_scenario, LoadVector, NetworkScenario,
        RateVector, ScenarioMetadata, SliceSpec, UserSpec, ValidationReport, WeightAllocation,
    };
    pub use crate::scenarios::{
        envy_family_search, envy_instance_family, patterned_scenario, poa_tight_instance,
        random_scenario, x_hat, y_hat, AlphaRule, CapacitySampler, EnvyBranch, EnvyInstance,
        PatternKind, PatternParams, RandomScenarioParams, ShareRule, TightGapInstance,
    };
}
