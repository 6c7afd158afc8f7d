//! Admissibility validation.
//!
//! The conditions checked here are exactly those under which the jump
//! process exists on the positive semidefinite cone:
//!
//! 1. *jump directions* — every constant-rate atom is a nonzero positive
//!    semidefinite direction with a finite nonnegative rate;
//! 2. *drift floor* — `b - I_m` is positive semidefinite, where `I_m` is the
//!    compensator of small constant-rate jumps;
//! 3. *kernel atoms* — every state-dependent atom has a nonzero positive
//!    semidefinite direction and a positive semidefinite rate operator;
//! 4. *inward drift margin* — for positive semidefinite `u, x` with
//!    `<u, x> = 0`, the compensated linear drift points inward:
//!    `<B^*(u), x> - sum_k <chi(xi_k), u> <G_k, x> / |xi_k|^2 >= 0`.
//!
//! Conditions 1–3 are finite checks. Condition 4 quantifies over the cone
//! boundary, so it is tested on the canonical orthogonal pairs
//! `(e_i (x) e_i, e_j (x) e_j)` plus a configurable number of random
//! orthogonal pairs `(Q diag(0, kappa) Q^T, Q diag(lambda, 0) Q^T)` with
//! Haar-ish orthogonal `Q`.

use super::{AdmissibleParameters, ParamsError};
use crate::linalg::{hs_inner, truncation_chi, SymOp};
use crate::rng::Stream;
use nalgebra::DMatrix;
use serde::Serialize;

/// Tolerance below which a matrix that should be positive semidefinite by
/// construction is still accepted (guards against representation roundoff).
const PSD_ATOM_TOL: f64 = 1e-12;

/// Outcome of [`validate_admissible`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// Whether every condition held within tolerance.
    pub valid: bool,
    /// Number of random boundary pairs tested for the margin condition.
    pub n_samples: usize,
    /// Margin tolerance used (violations milder than `-tol` pass).
    pub tol: f64,
    /// Smallest inward margin seen over canonical and sampled pairs.
    pub worst_margin: f64,
    /// Minimum eigenvalue of `b - I_m`.
    pub drift_floor_min_eig: f64,
    /// Second moment of the constant-rate jump measure.
    pub second_moment: f64,
    /// First violation encountered, if any.
    pub violation: Option<ViolationDetail>,
}

/// Which condition failed and how.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationDetail {
    /// Condition label: `jump directions`, `drift floor`, `kernel atoms`,
    /// or `inward margin`.
    pub clause: String,
    /// Human-readable description with the offending values.
    pub detail: String,
}

impl ValidationReport {
    /// Converts a failed report into an error, for call sites that require
    /// admissibility.
    pub fn ensure(&self) -> Result<(), ParamsError> {
        match (&self.violation, self.valid) {
            (None, true) => Ok(()),
            (Some(v), _) => Err(ParamsError::NotAdmissible {
                clause: v.clause.clone(),
                detail: v.detail.clone(),
            }),
            (None, false) => Err(ParamsError::NotAdmissible {
                clause: "unknown".into(),
                detail: "report marked invalid without detail".into(),
            }),
        }
    }
}

/// Inward drift margin at an orthogonal cone-boundary pair `(u, x)`:
/// `<B^*(u), x> - sum_k <chi(xi_k), u> <G_k, x> / |xi_k|^2`.
///
/// For admissible parameters this is nonnegative whenever `u` and `x` are
/// positive semidefinite with `<u, x> = 0`.
pub fn inward_margin(p: &AdmissibleParameters, u: &SymOp, x: &SymOp) -> f64 {
    let mut margin = hs_inner(&p.b_lin.apply_adjoint(u), x);
    for atom in &p.mu.atoms {
        let chi = truncation_chi(&atom.xi);
        let chi_u = hs_inner(&chi, u);
        if chi_u != 0.0 {
            margin -= chi_u * hs_inner(&atom.g, x) / atom.xi.inner(&atom.xi);
        }
    }
    margin
}

/// Draws a random orthogonal matrix by QR-factorizing a Gaussian matrix.
fn random_orthogonal(dim: usize, s: &mut Stream) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| s.normal());
    g.qr().q()
}

/// Checks the admissibility conditions, sampling the inward-margin condition
/// at `n_samples` random orthogonal boundary pairs on top of the canonical
/// basis pairs.
///
/// Margins are accepted down to `-tol` to absorb roundoff in models that
/// satisfy the condition with equality by construction. The same tolerance
/// bounds how far `b - I_m` may dip below the cone.
pub fn validate_admissible(
    p: &AdmissibleParameters,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> ValidationReport {
    let mut report = ValidationReport {
        valid: true,
        n_samples,
        tol,
        worst_margin: f64::INFINITY,
        drift_floor_min_eig: f64::NAN,
        second_moment: p.m.second_moment(),
        violation: None,
    };
    let fail = |report: &mut ValidationReport, clause: &str, detail: String| {
        report.valid = false;
        if report.violation.is_none() {
            report.violation = Some(ViolationDetail {
                clause: clause.into(),
                detail,
            });
        }
    };

    // 1. Constant-rate jump directions.
    for (k, atom) in p.m.atoms.iter().enumerate() {
        let min_eig = atom.xi.min_eigenvalue();
        if min_eig < -PSD_ATOM_TOL {
            fail(
                &mut report,
                "jump directions",
                format!("atom {k}: direction has eigenvalue {min_eig:.3e}"),
            );
        }
        if atom.xi.norm() == 0.0 {
            fail(&mut report, "jump directions", format!("atom {k}: zero direction"));
        }
        if !(atom.w >= 0.0 && atom.w.is_finite()) {
            fail(
                &mut report,
                "jump directions",
                format!("atom {k}: rate {} invalid", atom.w),
            );
        }
    }

    // 2. Drift floor b - I_m.
    let floor = p.b.sub(&super::compute_i_m(&p.m));
    let floor_eig = floor.min_eigenvalue();
    report.drift_floor_min_eig = floor_eig;
    if floor_eig < -tol {
        fail(
            &mut report,
            "drift floor",
            format!("b - I_m has eigenvalue {floor_eig:.6e} below -{tol:.1e}"),
        );
    }

    // 3. Kernel atoms.
    for (k, atom) in p.mu.atoms.iter().enumerate() {
        let dir_eig = atom.xi.min_eigenvalue();
        if dir_eig < -PSD_ATOM_TOL {
            fail(
                &mut report,
                "kernel atoms",
                format!("atom {k}: direction has eigenvalue {dir_eig:.3e}"),
            );
        }
        if atom.xi.norm() == 0.0 {
            fail(&mut report, "kernel atoms", format!("atom {k}: zero direction"));
        }
        let g_eig = atom.g.min_eigenvalue();
        if g_eig < -PSD_ATOM_TOL {
            fail(
                &mut report,
                "kernel atoms",
                format!("atom {k}: rate operator has eigenvalue {g_eig:.3e}"),
            );
        }
    }

    // 4. Inward drift margin on orthogonal boundary pairs.
    let check_pair = |report: &mut ValidationReport, u: &SymOp, x: &SymOp, label: &str| {
        let m = inward_margin(p, u, x);
        if m < report.worst_margin {
            report.worst_margin = m;
        }
        if m < -tol {
            fail(
                report,
                "inward margin",
                format!("margin {m:.6e} below -{tol:.1e} at {label}"),
            );
        }
    };

    for i in 0..p.dim {
        for j in 0..p.dim {
            if i != j {
                let u = SymOp::basis(p.dim, i, i);
                let x = SymOp::basis(p.dim, j, j);
                check_pair(&mut report, &u, &x, &format!("canonical pair ({i}, {j})"));
            }
        }
    }

    if p.dim >= 2 {
        for sample in 0..n_samples {
            let mut s = Stream::from_key(seed, sample as u64, 0x0ADA);
            let q = random_orthogonal(p.dim, &mut s);
            // Split the spectrum: x lives on the first k directions, u on the
            // rest, giving <u, x> = 0 with both on the cone.
            let k = 1 + s.below((p.dim - 1) as u64) as usize;
            let mut x_diag = DMatrix::zeros(p.dim, p.dim);
            let mut u_diag = DMatrix::zeros(p.dim, p.dim);
            for i in 0..k {
                x_diag[(i, i)] = s.uniform();
            }
            for i in k..p.dim {
                u_diag[(i, i)] = s.uniform();
            }
            let to_sym = |d: &DMatrix<f64>| {
                let m = &q * d * q.transpose();
                SymOp::from_rows(
                    &(0..p.dim)
                        .map(|i| (0..p.dim).map(|j| 0.5 * (m[(i, j)] + m[(j, i)])).collect())
                        .collect::<Vec<_>>(),
                )
                .expect("symmetrized product is symmetric")
            };
            let x = to_sym(&x_diag);
            let u = to_sym(&u_diag);
            check_pair(&mut report, &u, &x, &format!("sampled pair {sample}"));
        }
    }

    if report.worst_margin == f64::INFINITY {
        // Dimension 1: no nontrivial orthogonal pair exists.
        report.worst_margin = 0.0;
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LinearDrift;
    use crate::params::{AtomicMeasure, MAtom, MuAtom, OperatorValuedMeasure};

    fn zero_params(dim: usize) -> AdmissibleParameters {
        AdmissibleParameters::new(
            dim,
            SymOp::zeros(dim),
            LinearDrift::zero(dim),
            AtomicMeasure::empty(dim),
            OperatorValuedMeasure::empty(dim),
        )
        .unwrap()
    }

    #[test]
    fn zero_parameters_are_valid_with_zero_margin() {
        let report = validate_admissible(&zero_params(3), 64, 1e-9, 7);
        assert!(report.valid, "{:?}", report.violation);
        assert_eq!(report.worst_margin, 0.0);
        assert_eq!(report.second_moment, 0.0);
        assert!(report.drift_floor_min_eig.abs() < 1e-15);
        report.ensure().unwrap();
    }

    #[test]
    fn undominated_small_jump_fails_drift_floor() {
        // b = 0 with a unit-rate jump at e1 (x) e1: the compensator I_m is
        // e1 (x) e1, so b - I_m has eigenvalue -1.
        let dim = 2;
        let mut p = zero_params(dim);
        p.m = AtomicMeasure::new(
            dim,
            vec![MAtom {
                xi: SymOp::basis(dim, 0, 0),
                w: 1.0,
            }],
        )
        .unwrap();
        let report = validate_admissible(&p, 16, 1e-9, 7);
        assert!(!report.valid);
        let v = report.violation.as_ref().unwrap();
        assert_eq!(v.clause, "drift floor");
        assert!((report.drift_floor_min_eig + 1.0).abs() < 1e-12);
        assert!(report.ensure().is_err());
    }

    #[test]
    fn uncompensated_kernel_jump_fails_inward_margin() {
        // A small kernel jump in direction xi = e2 (x) e2 with rate operator
        // g = e1 (x) e1 and no compensating drift. At the canonical pair
        // u = e2 (x) e2, x = e1 (x) e1 the margin is
        // 0 - <xi, u> <g, x> / |xi|^2 = -1.
        let dim = 2;
        let mut p = zero_params(dim);
        p.mu = OperatorValuedMeasure::new(
            dim,
            vec![MuAtom {
                xi: SymOp::basis(dim, 1, 1),
                g: SymOp::basis(dim, 0, 0),
            }],
        )
        .unwrap();
        let report = validate_admissible(&p, 16, 1e-9, 7);
        assert!(!report.valid);
        assert_eq!(report.violation.as_ref().unwrap().clause, "inward margin");
        assert!((report.worst_margin + 1.0).abs() < 1e-12);
    }

    #[test]
    fn compensated_kernel_jump_is_valid() {
        // Same kernel atom, now with the exact compensating coupling
        // B(x) = <x, g / |xi|^2> chi(xi): margin is identically zero.
        let dim = 2;
        let mut p = zero_params(dim);
        let xi = SymOp::basis(dim, 1, 1);
        let g = SymOp::basis(dim, 0, 0);
        let mut b_lin = LinearDrift::zero(dim);
        b_lin.add_coupling(&g.scale(1.0 / xi.inner(&xi)), &xi);
        p.mu = OperatorValuedMeasure::new(dim, vec![MuAtom { xi, g }]).unwrap();
        p.b_lin = b_lin;
        let report = validate_admissible(&p, 256, 1e-9, 3);
        assert!(report.valid, "{:?}", report.violation);
        assert!(report.worst_margin.abs() < 1e-10);
    }

    #[test]
    fn congruence_drift_alone_has_nonnegative_margin() {
        // B(x) = C x + x C^T contributes nothing at orthogonal PSD pairs:
        // x u = 0 forces <C x + x C^T, u> = 0. The margin must vanish to
        // roundoff at every sampled pair.
        let dim = 3;
        let mut p = zero_params(dim);
        let c: Vec<f64> = (0..9).map(|k| (k as f64) * 0.37 - 1.1).collect();
        p.b_lin = LinearDrift::structured(dim, c, vec![]).unwrap();
        let report = validate_admissible(&p, 512, 1e-9, 11);
        assert!(report.valid, "{:?}", report.violation);
        assert!(
            report.worst_margin.abs() < 1e-10,
            "congruence margin should vanish, got {}",
            report.worst_margin
        );
    }

    #[test]
    fn non_psd_jump_direction_is_rejected() {
        let dim = 2;
        let mut p = zero_params(dim);
        let mut xi = SymOp::zeros(dim);
        xi.set(0, 0, 1.0);
        xi.set(1, 1, -0.5);
        // Bypass the measure constructor's checks deliberately.
        p.b = SymOp::identity(dim).scale(2.0);
        p.m = AtomicMeasure {
            atoms: vec![MAtom { xi, w: 1.0 }],
            ..AtomicMeasure::empty(dim)
        };
        let report = validate_admissible(&p, 8, 1e-9, 1);
        assert!(!report.valid);
        assert_eq!(report.violation.as_ref().unwrap().clause, "jump directions");
    }
}
