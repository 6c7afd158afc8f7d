//! Linear algebra on the Hilbert space of symmetric matrices.
//!
//! The state space of every model in this crate is the set of symmetric
//! `dim x dim` real matrices equipped with the trace inner product
//! `<u, v> = tr(u v)`; the cone of interest is its positive semidefinite
//! subset. This module provides:
//!
//! * [`SymOp`] — compact upper-triangle storage for symmetric matrices, with
//!   the trace inner product, orthonormal-basis coordinates, and
//!   leading-block projections;
//! * [`LinearDrift`] — linear maps on symmetric matrices in either a
//!   structured form `u -> C u + u C^T + sum_j <u, A_j> H_j` or a dense
//!   coordinate-matrix form, with exact adjoints;
//! * eigenvalue utilities ([`SymOp::min_eigenvalue`], [`SymOp::psd_clamp`])
//!   used to keep numerical flows on the positive cone;
//! * [`flow::drift_flow`] — the linear flow `v' = B^*(v)` by fixed-step RK4,
//!   and a scaling-and-squaring matrix exponential oracle for validating it;
//! * [`WeightModel`] — weighted norms that grade how much of an operator
//!   lives outside a leading block, used by convergence-rate bounds.

mod drift;
mod flow;
mod symop;
mod weights;

pub use drift::LinearDrift;
pub use flow::{drift_flow, drift_flow_expm, drift_flow_grid, expm};
pub use symop::SymOp;
pub use weights::WeightModel;

use thiserror::Error;

/// Errors from linear-algebra kernels.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// Two operands live in different ambient dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The ambient dimension must be at least one.
    #[error("invalid ambient dimension {0}; must be at least 1")]
    InvalidDimension(usize),

    /// Input matrix entries are supposed to be symmetric but are not.
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asym:.3e}")]
    NotSymmetric { max_asym: f64 },

    /// Input contained a NaN or infinity where a finite value is required.
    #[error("non-finite entry in {context}")]
    NonFinite { context: &'static str },

    /// An eigenvalue fell below the negative tolerance allowed by clamping.
    #[error(
        "cone violation: minimum eigenvalue {min_eig:.6e} is below the clamp tolerance -{tol:.3e}"
    )]
    ConeViolation { min_eig: f64, tol: f64 },

    /// Weight sequence rejected by [`WeightModel::new`].
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),

    /// A drift constructor received inconsistently sized data.
    #[error("invalid drift data: {0}")]
    InvalidDrift(String),
}

/// Trace (Frobenius) inner product `<u, v> = tr(u v)` of two symmetric
/// matrices.
///
/// # Panics
///
/// Panics if the operands have different ambient dimensions.
pub fn hs_inner(u: &SymOp, v: &SymOp) -> f64 {
    u.inner(v)
}

/// Projection onto the leading `d x d` block: entries with a row or column
/// index beyond `d` are zeroed, the rest are kept exactly.
///
/// `d = 0` maps everything to zero; `d >= dim` is the identity.
pub fn project(d: usize, u: &SymOp) -> SymOp {
    u.project(d)
}

/// Jump-size truncation: returns `xi` itself when `|xi| <= 1` (Frobenius
/// norm, boundary included) and zero otherwise.
///
/// Small jumps are compensated in drifts and Riccati right-hand sides; this
/// function is the single definition of "small" shared by all of them.
pub fn truncation_chi(xi: &SymOp) -> SymOp {
    if xi.norm() <= 1.0 {
        xi.clone()
    } else {
        SymOp::zeros(xi.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_keeps_boundary_and_drops_large() {
        // Unit-norm jump: kept (boundary belongs to the small-jump set).
        let xi = SymOp::basis(3, 0, 0);
        assert_eq!(truncation_chi(&xi), xi);

        // Norm 2: truncated to zero.
        let big = xi.scale(2.0);
        assert_eq!(truncation_chi(&big), SymOp::zeros(3));

        // Just above the boundary.
        let above = xi.scale(1.0 + 1e-12);
        assert_eq!(truncation_chi(&above), SymOp::zeros(3));
    }
}
