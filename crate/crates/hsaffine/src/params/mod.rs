//! Admissible parameter sets and their finite-rank projections.
//!
//! A model instance is a quadruple `(b, B, m, mu)` on symmetric `dim x dim`
//! matrices:
//!
//! * `b` — constant drift, a symmetric matrix;
//! * `B` — linear drift, a [`LinearDrift`];
//! * `m` — a finite atomic measure of state-independent jumps: atoms
//!   `(xi_k, w_k)` fire at constant rate `w_k`;
//! * `mu` — an operator-valued kernel of state-dependent jumps: atoms
//!   `(xi_k, G_k)` fire at rate `<x, G_k> / |xi_k|^2` in state `x`.
//!
//! Admissibility is the set of conditions under which the induced process
//! exists and stays on the positive semidefinite cone: jump directions and
//! kernel operators must be positive, the constant drift must dominate the
//! compensator of small constant-rate jumps, and the linear drift must point
//! inward at the cone boundary once the small state-dependent jumps are
//! compensated ([`validate_admissible`]).
//!
//! [`project_params`] compresses an instance onto the leading `d x d` block.
//! Jumps whose direction survives projection but leaves the unit ball —
//! or enters it — change truncation status, and the projection absorbs the
//! resulting compensator differences into the constant and linear drifts so
//! that the projected instance is again admissible as it stands.

mod builders;
mod project;
mod schema;
mod validate;

pub use builders::{
    build_generic_example, build_simple_example, generic_demo, random_admissible, simple_demo,
};
pub use project::project_params;
pub use schema::{from_json_str, to_json_string};
pub use validate::{inward_margin, validate_admissible, ValidationReport, ViolationDetail};

use crate::linalg::{LinalgError, LinearDrift, SymOp};
use thiserror::Error;

/// Errors from parameter construction, validation, and serialization.
#[derive(Debug, Error)]
pub enum ParamsError {
    /// Input JSON was malformed or violated the schema's shape/positivity
    /// requirements.
    #[error("parameter schema: {0}")]
    Schema(String),

    /// A validated admissibility condition failed.
    #[error("admissibility violated ({clause}): {detail}")]
    NotAdmissible { clause: String, detail: String },

    /// Builder received inconsistent input.
    #[error("builder input: {0}")]
    BuilderInput(String),

    /// Underlying linear-algebra failure.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One state-independent jump: direction `xi` fires at constant rate `w`.
#[derive(Debug, Clone)]
pub struct MAtom {
    /// Jump direction (a nonzero positive semidefinite matrix).
    pub xi: SymOp,
    /// Constant arrival rate.
    pub w: f64,
}

/// Finite atomic measure of state-independent jumps.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    dim: usize,
    /// The atoms; may be empty.
    pub atoms: Vec<MAtom>,
}

impl AtomicMeasure {
    /// The empty measure in ambient dimension `dim`.
    pub fn empty(dim: usize) -> Self {
        AtomicMeasure {
            dim,
            atoms: Vec::new(),
        }
    }

    /// Wraps atoms after shape checks: matching dimensions, finite
    /// nonnegative rates, nonzero finite directions.
    pub fn new(dim: usize, atoms: Vec<MAtom>) -> Result<Self, ParamsError> {
        for (k, atom) in atoms.iter().enumerate() {
            if atom.xi.dim() != dim {
                return Err(ParamsError::Linalg(LinalgError::DimensionMismatch {
                    expected: dim,
                    got: atom.xi.dim(),
                }));
            }
            if !atom.xi.is_finite() || !atom.w.is_finite() {
                return Err(ParamsError::BuilderInput(format!(
                    "jump atom {k} has non-finite data"
                )));
            }
            if atom.w < 0.0 {
                return Err(ParamsError::BuilderInput(format!(
                    "jump atom {k} has negative rate {}",
                    atom.w
                )));
            }
            if atom.xi.norm() == 0.0 {
                return Err(ParamsError::BuilderInput(format!(
                    "jump atom {k} has zero direction"
                )));
            }
        }
        Ok(AtomicMeasure { dim, atoms })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Second moment `sum_k w_k |xi_k|^2`, the quantity growth bounds track.
    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.w * a.xi.inner(&a.xi)).sum()
    }
}

/// One state-dependent jump family: direction `xi` fires at rate
/// `<x, G> / |xi|^2` in state `x`.
#[derive(Debug, Clone)]
pub struct MuAtom {
    /// Jump direction (a nonzero positive semidefinite matrix).
    pub xi: SymOp,
    /// Positive semidefinite rate operator.
    pub g: SymOp,
}

/// Finite operator-valued kernel of state-dependent jumps.
#[derive(Debug, Clone)]
pub struct OperatorValuedMeasure {
    dim: usize,
    /// The atoms; may be empty.
    pub atoms: Vec<MuAtom>,
}

impl OperatorValuedMeasure {
    /// The empty kernel in ambient dimension `dim`.
    pub fn empty(dim: usize) -> Self {
        OperatorValuedMeasure {
            dim,
            atoms: Vec::new(),
        }
    }

    /// Wraps atoms after shape checks: matching dimensions, finite entries,
    /// nonzero directions.
    pub fn new(dim: usize, atoms: Vec<MuAtom>) -> Result<Self, ParamsError> {
        for (k, atom) in atoms.iter().enumerate() {
            if atom.xi.dim() != dim || atom.g.dim() != dim {
                return Err(ParamsError::Linalg(LinalgError::DimensionMismatch {
                    expected: dim,
                    got: atom.xi.dim().min(atom.g.dim()),
                }));
            }
            if !atom.xi.is_finite() || !atom.g.is_finite() {
                return Err(ParamsError::BuilderInput(format!(
                    "kernel atom {k} has non-finite data"
                )));
            }
            if atom.xi.norm() == 0.0 {
                return Err(ParamsError::BuilderInput(format!(
                    "kernel atom {k} has zero direction"
                )));
            }
        }
        Ok(OperatorValuedMeasure { dim, atoms })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total kernel mass `sum_k G_k`.
    pub fn total_mass(&self) -> SymOp {
        let mut out = SymOp::zeros(self.dim);
        for atom in &self.atoms {
            out.axpy(1.0, &atom.g);
        }
        out
    }
}

/// A full model instance `(b, B, m, mu)` in ambient dimension `dim`.
///
/// Construction checks shapes only; whether the instance actually satisfies
/// the admissibility conditions is decided by [`validate_admissible`].
#[derive(Debug, Clone)]
pub struct AdmissibleParameters {
    /// Ambient dimension.
    pub dim: usize,
    /// Constant drift.
    pub b: SymOp,
    /// Linear drift.
    pub b_lin: LinearDrift,
    /// State-independent jump measure.
    pub m: AtomicMeasure,
    /// State-dependent jump kernel.
    pub mu: OperatorValuedMeasure,
}

impl AdmissibleParameters {
    /// Assembles an instance, checking that every component lives in the
    /// same ambient dimension.
    pub fn new(
        dim: usize,
        b: SymOp,
        b_lin: LinearDrift,
        m: AtomicMeasure,
        mu: OperatorValuedMeasure,
    ) -> Result<Self, ParamsError> {
        if dim == 0 {
            return Err(ParamsError::Linalg(LinalgError::InvalidDimension(0)));
        }
        for got in [b.dim(), b_lin.dim(), m.dim(), mu.dim()] {
            if got != dim {
                return Err(ParamsError::Linalg(LinalgError::DimensionMismatch {
                    expected: dim,
                    got,
                }));
            }
        }
        if !b.is_finite() {
            return Err(ParamsError::BuilderInput("non-finite constant drift".into()));
        }
        Ok(AdmissibleParameters { dim, b, b_lin, m, mu })
    }
}

/// Compensator of small state-independent jumps:
/// `I_m = sum_{|xi_k| <= 1} w_k xi_k`.
///
/// Admissibility requires the constant drift to dominate this matrix
/// (`b - I_m` positive semidefinite).
pub fn compute_i_m(m: &AtomicMeasure) -> SymOp {
    let mut out = SymOp::zeros(m.dim());
    for atom in &m.atoms {
        if atom.xi.norm() <= 1.0 {
            out.axpy(atom.w, &atom.xi);
        }
    }
    out
}

/// Per-atom state-dependent jump rates `<x, G_k> / |xi_k|^2` in state `x`.
///
/// # Panics
///
/// Panics if `x` lives in a different dimension than the kernel.
pub fn kernel_weights(mu: &OperatorValuedMeasure, x: &SymOp) -> Vec<f64> {
    assert_eq!(mu.dim(), x.dim(), "kernel weights across dimensions");
    mu.atoms
        .iter()
        .map(|atom| x.inner(&atom.g) / atom.xi.inner(&atom.xi))
        .collect()
}

/// A compensated kernel atom of a projected instance: jump direction `zeta`
/// with rate operator scaling `g_scaled = P_d G / |xi|^2`, where `|xi|` is
/// the direction's norm *before* projection.
///
/// Keeping the original-norm scaling is what makes the projected Riccati
/// operator the exact compression of the full one.
#[derive(Debug, Clone)]
pub struct KernelAtom {
    /// Projected jump direction `P_d xi`.
    pub zeta: SymOp,
    /// Projected rate operator divided by the original squared norm.
    pub g_scaled: SymOp,
}

/// A parameter set compressed onto the leading `level x level` block.
///
/// Produced by [`project_params`]; all matrices are stored in the ambient
/// dimension with exact zeroes outside the block, so projected and full
/// instances can be mixed freely in arithmetic.
#[derive(Debug, Clone)]
pub struct ProjectedParameters {
    /// Block size `d`.
    pub level: usize,
    /// Ambient dimension the matrices are stored in.
    pub dim: usize,
    /// Projected constant drift, including compensation for jumps whose
    /// truncation status changed.
    pub b_d: SymOp,
    /// Projected linear drift, including kernel-jump compensation couplings.
    pub b_lin_d: LinearDrift,
    /// Projected state-independent jump measure (atoms that vanish under
    /// projection are removed).
    pub m_d: AtomicMeasure,
    /// Projected state-dependent kernel `(P_d xi, P_d G)`.
    pub mu_d: OperatorValuedMeasure,
    /// Kernel atoms with original-norm rate scaling, driving the projected
    /// Riccati operator and the simulator's state-dependent rates.
    pub kernel_atoms: Vec<KernelAtom>,
    /// Number of atoms dropped because their projected direction was nonzero
    /// but below norm `1e-14` — too degenerate to carry a jump.
    pub dropped_tiny: usize,
}

impl ProjectedParameters {
    /// Re-embeds the projected system as an ordinary parameter set (same
    /// ambient dimension, all data supported on the leading block).
    ///
    /// The kernel atoms' original-norm scaling is not representable in the
    /// plain parameter form, so the returned instance scales rates by the
    /// *projected* norms; the two agree whenever every kernel direction was
    /// already supported on the block.
    pub fn to_params(&self) -> AdmissibleParameters {
        AdmissibleParameters {
            dim: self.dim,
            b: self.b_d.clone(),
            b_lin: self.b_lin_d.clone(),
            m: self.m_d.clone(),
            mu: self.mu_d.clone(),
        }
    }
}
