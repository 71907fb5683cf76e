//! Central numeric tolerances and solver budgets.
//!
//! Every threshold used by a check in this crate lives here so that the CLI
//! can override them uniformly (`--tol-*` flags) and tests pin them in one
//! place.

use serde::{Deserialize, Serialize};

/// Numeric tolerances and iteration budgets shared across the crate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max allowed deviation from Hermiticity, `max |m - m^dag|`.
    pub hermiticity: f64,
    /// A matrix counts as PSD when its minimum eigenvalue is `>= -psd_min_eig`.
    pub psd_min_eig: f64,
    /// Hilbert-Schmidt coefficients with absolute value below this are
    /// treated as absent when classifying term types.
    pub coeff_zero: f64,
    /// Max allowed deviation when comparing probability marginals across
    /// settings (signaling checks) and when probabilities must sum to one.
    pub marginal: f64,
    /// Max residual for reduced/conditional recomposition identities.
    pub recomposition: f64,
    /// Residual threshold below which a splitting-iteration candidate
    /// counts as a feasibility witness.
    pub feasibility_residual: f64,
    /// Iteration budget for the feasibility splitting iteration.
    pub feasibility_budget: usize,
    /// Slack allowed when re-validating a feasibility witness independently
    /// of the solver that produced it.
    pub witness_slack: f64,
    /// Feasibility tolerance of the floating-point simplex.
    pub lp_feasibility: f64,
    /// Second-largest eigenvalue threshold for the rank-one certificate.
    pub rank_one: f64,
    /// Max sweeps for seesaw strategy optimization.
    pub seesaw_sweeps: usize,
    /// Round-trip tolerance for matrix JSON serialization.
    pub json_round_trip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermiticity: 1e-9,
            psd_min_eig: 1e-10,
            coeff_zero: 1e-10,
            marginal: 1e-9,
            recomposition: 1e-10,
            feasibility_residual: 1e-7,
            feasibility_budget: 20_000,
            witness_slack: 1e-7,
            lp_feasibility: 1e-9,
            rank_one: 1e-10,
            seesaw_sweeps: 200,
            json_round_trip: 1e-12,
        }
    }
}

/// Environment variable consulted for the default RNG seed.
pub const SEED_ENV: &str = "CAUSALITY_KIT_SEED";

/// Default seed when `CAUSALITY_KIT_SEED` is unset.
pub const DEFAULT_SEED: u64 = 0x0c41_5a11;

/// Resolve the RNG seed: explicit argument, else environment, else default.
pub fn resolve_seed(explicit: Option<u64>) -> u64 {
    if let Some(s) = explicit {
        return s;
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        if let Ok(s) = v.trim().parse::<u64>() {
            return s;
        }
    }
    DEFAULT_SEED
}
