//! The alpha-fair utility family.
//!
//! A single parameter `alpha > 0` interpolates between throughput-oriented
//! and egalitarian allocations: `alpha = 1` is proportional fairness,
//! `alpha = 2` potential-delay fairness, and `alpha -> inf` approaches
//! max-min fairness. Natural logarithms are used throughout, so utilities
//! are measured in nats.

/// Value of the alpha-fair utility at rate `rate`.
///
/// `rate^(1-alpha) / (1-alpha)` for `alpha != 1`, `ln(rate)` for `alpha = 1`.
/// At `rate = 0` with `alpha >= 1` this returns `-inf` (a representable
/// sentinel, never a panic); with `alpha < 1` it returns `0`.
pub fn alpha_fair_value(alpha: f64, rate: f64) -> f64 {
    debug_assert!(alpha > 0.0, "alpha must be positive");
    debug_assert!(rate >= 0.0, "rate must be non-negative");
    if alpha == 1.0 {
        rate.ln()
    } else {
        rate.powf(1.0 - alpha) / (1.0 - alpha)
    }
}

/// Marginal utility `d/dr` of the alpha-fair value: `rate^(-alpha)`.
///
/// Returns `+inf` at `rate = 0`.
pub fn alpha_fair_deriv(alpha: f64, rate: f64) -> f64 {
    debug_assert!(alpha > 0.0, "alpha must be positive");
    debug_assert!(rate >= 0.0, "rate must be non-negative");
    rate.powf(-alpha)
}

/// Utility shift caused by scaling every rate by `kappa`.
///
/// For `alpha = 1` the utility of a unit-priority mass gains `ln(kappa)`;
/// for `alpha != 1` it is multiplied by `kappa^(1-alpha)`. This is the
/// exact transformation law of the family above and is what makes
/// capacity-equivalent comparisons well defined.
pub fn scale_utility(alpha: f64, utility: f64, kappa: f64) -> f64 {
    debug_assert!(kappa > 0.0, "kappa must be positive");
    if alpha == 1.0 {
        utility + kappa.ln()
    } else {
        kappa.powf(1.0 - alpha) * utility
    }
}
