//! Numerical thresholds shared by every module.
//!
//! Rank and definiteness decisions all use the same relative tolerance so
//! that edge classification, nullspace extraction and subspace algebra never
//! disagree about what counts as zero.

/// Relative eigenvalue threshold for PSD validation and definite/semidefinite
/// classification. Scaled by `max(1, max |eigenvalue|)`.
pub const PSD_TOL: f64 = 1e-9;

/// Relative threshold for rank decisions (nullspaces, subspace sums).
pub const RANK_TOL: f64 = PSD_TOL;

/// Absolute bound on `|A - A^T|` entries accepted before symmetrization.
pub const SYM_TOL: f64 = 1e-12;

/// Default per-query budget of simple paths for cluster membership tests.
pub const DEFAULT_MAX_PATHS: usize = 10_000;

/// Default threshold on the state-derivative norm that ends a simulation.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-9;

/// Default absolute distance under which two agent states are grouped.
pub const DEFAULT_GROUP_TOL: f64 = 1e-5;

/// Tolerances applied when validating and classifying a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub psd_tol: f64,
    pub sym_tol: f64,
    pub rank_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd_tol: PSD_TOL,
            sym_tol: SYM_TOL,
            rank_tol: RANK_TOL,
        }
    }
}

impl Tolerances {
    /// Same threshold for PSD checks and rank decisions.
    pub fn with_rank_tol(tol: f64) -> Self {
        Self {
            psd_tol: tol,
            rank_tol: tol,
            ..Self::default()
        }
    }
}

/// Scale used by relative eigenvalue thresholds.
pub(crate) fn eig_scale(max_abs: f64) -> f64 {
    max_abs.max(1.0)
}
