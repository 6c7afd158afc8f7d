//! Finite-rank affine pure-jump processes on the cone of positive
//! semidefinite symmetric matrices.
//!
//! The library models Markov processes whose state is a positive semidefinite
//! `dim x dim` matrix and whose jump behaviour is affine in the state: the
//! process jumps by a positive semidefinite increment `xi_k` at rate
//! `w_k + <x, S_k>`. Everything is phrased in the Hilbert space of symmetric
//! matrices under the trace (Frobenius) inner product.
//!
//! The crate is organised in layers:
//!
//! * [`linalg`] — symmetric-matrix storage, the trace inner product,
//!   leading-block projections, linear drift maps and their adjoints,
//!   eigenvalue clamping, drift flows and a matrix-exponential oracle.
//! * [`params`] — admissible parameter sets `(b, B, m, mu)`, their
//!   validation, leading-block projection with small-jump compensation,
//!   canonical example builders, randomized instances, and a JSON schema.
//! * [`riccati`] — the generalized Riccati flow `(phi, psi)` driving the
//!   Laplace transform `exp(-phi(t) - <x, psi(t)>)`, solved by a fixed-step
//!   RK4 integrator with positive-cone clamping, plus computable a priori
//!   error constants for the finite-rank truncation.
//! * [`simulate`] — exact simulation of the finite-rank process by thinning
//!   of state-dependent jump intensities, with Monte Carlo estimators for
//!   the Laplace transform, martingale residuals, the quadratic bracket of
//!   jump functionals, and second-moment bounds.
//! * [`converge`] — truncation-level sweeps comparing realized Galerkin
//!   errors against the certified bounds, and a diagnostic for the
//!   infinite-variation regime of the jump part.
//!
//! Supporting modules: [`rng`] (a small counter-based deterministic RNG so
//! that simulation output is a pure function of `(seed, path, window)`) and
//! [`fmt`] (17-significant-digit JSON/CSV float formatting so artifacts
//! round-trip exactly).

pub mod converge;
pub mod fmt;
pub mod linalg;
pub mod params;
pub mod riccati;
pub mod rng;
pub mod simulate;

pub use linalg::{
    hs_inner, project, truncation_chi, LinalgError, LinearDrift, SymOp, WeightModel,
};
pub use params::{
    build_generic_example, build_simple_example, compute_i_m, kernel_weights, project_params,
    random_admissible, validate_admissible, AdmissibleParameters, AtomicMeasure,
    OperatorValuedMeasure, ParamsError, ProjectedParameters, ValidationReport,
};
pub use riccati::{
    error_bound, eval_f, eval_f_d, eval_r, eval_r_d, flow_check, galerkin_error, solve_riccati,
    vnorm_rate, ErrorBound, RiccatiSolution, SolverError,
};
pub use simulate::{
    bracket_check, build_jump_system, martingale_residual, mc_laplace, mc_laplace_multi,
    moment_bound_check, simulate_path, JumpAtom, JumpSystem, MCReport, PathRecord, SimError,
    TestFunction,
};
pub use converge::{
    infinite_variation_diagnostic, sweep, ConvergeError, SweepOptions, SweepResult,
    VariationDiagnostic,
};
