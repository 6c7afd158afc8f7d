//! Compression of a parameter set onto a leading block.

use super::{
    AdmissibleParameters, AtomicMeasure, KernelAtom, MAtom, MuAtom, OperatorValuedMeasure,
    ProjectedParameters,
};

/// Projected directions with norm below this are dropped: they are numerical
/// shadows of atoms that live almost entirely outside the block, and keeping
/// them would inject near-zero jumps with wildly scaled compensators.
const DEGENERATE_DIRECTION_NORM: f64 = 1e-14;

/// Compresses `p` onto the leading `d x d` block.
///
/// Atom-by-atom:
///
/// * a constant-rate atom `(xi, w)` with `P_d xi != 0` survives as
///   `(P_d xi, w)`; if projection moved the direction from outside the unit
///   ball to inside it (`|xi| > 1`, `|P_d xi| <= 1`), the atom is newly
///   truncation-compensated and the constant drift gains `w P_d xi`;
/// * a kernel atom `(xi, G)` with `P_d xi != 0` survives as
///   `(P_d xi, P_d G)` together with its rate scaling `P_d G / |xi|^2`
///   (original norm); if its truncation status changed the same way, the
///   linear drift gains the coupling `u -> <u, P_d G / |xi|^2> P_d xi`;
/// * atoms whose projected direction is nonzero but below norm `1e-14` are
///   dropped and counted in
///   [`dropped_tiny`](ProjectedParameters::dropped_tiny).
///
/// At `d = dim` nothing is truncated differently and the result is the
/// identity embedding of `p`.
///
/// # Panics
///
/// Panics unless `1 <= d <= p.dim`.
pub fn project_params(p: &AdmissibleParameters, d: usize) -> ProjectedParameters {
    assert!(
        d >= 1 && d <= p.dim,
        "projection level {d} out of range 1..={}",
        p.dim
    );

    let mut dropped_tiny = 0_usize;
    let mut b_d = p.b.project(d);

    let mut m_atoms = Vec::with_capacity(p.m.atoms.len());
    for atom in &p.m.atoms {
        let zeta = atom.xi.project(d);
        let zeta_norm = zeta.norm();
        if zeta_norm == 0.0 {
            continue;
        }
        if zeta_norm < DEGENERATE_DIRECTION_NORM {
            dropped_tiny += 1;
            continue;
        }
        if atom.xi.norm() > 1.0 && zeta_norm <= 1.0 {
            // Newly small: its compensator joins the constant drift.
            b_d.axpy(atom.w, &zeta);
        }
        m_atoms.push(MAtom {
            xi: zeta,
            w: atom.w,
        });
    }

    let mut b_lin_d = p.b_lin.project(d);
    let mut mu_atoms = Vec::with_capacity(p.mu.atoms.len());
    let mut kernel_atoms = Vec::with_capacity(p.mu.atoms.len());
    for atom in &p.mu.atoms {
        let zeta = atom.xi.project(d);
        let zeta_norm = zeta.norm();
        if zeta_norm == 0.0 {
            continue;
        }
        if zeta_norm < DEGENERATE_DIRECTION_NORM {
            dropped_tiny += 1;
            continue;
        }
        let g_proj = atom.g.project(d);
        let g_scaled = g_proj.scale(1.0 / atom.xi.inner(&atom.xi));
        if atom.xi.norm() > 1.0 && zeta_norm <= 1.0 {
            // Newly small: its state-dependent compensator joins the linear
            // drift as a coupling.
            b_lin_d.add_coupling(&g_scaled, &zeta);
        }
        mu_atoms.push(MuAtom {
            xi: zeta.clone(),
            g: g_proj,
        });
        kernel_atoms.push(KernelAtom { zeta, g_scaled });
    }

    ProjectedParameters {
        level: d,
        dim: p.dim,
        b_d,
        b_lin_d,
        m_d: AtomicMeasure {
            dim: p.dim,
            atoms: m_atoms,
        },
        mu_d: OperatorValuedMeasure {
            dim: p.dim,
            atoms: mu_atoms,
        },
        kernel_atoms,
        dropped_tiny,
    }
}
