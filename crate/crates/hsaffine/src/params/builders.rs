//! Canonical and randomized parameter-set builders.
//!
//! All builders compensate their state-dependent kernels exactly: every
//! small kernel atom `(xi, G)` is paired with the linear-drift coupling
//! `u -> <u, G / |xi|^2> chi(xi)`, which makes the inward-margin condition
//! hold with equality. Extra drift terms are restricted to congruences
//! `C u + u C^T` (margin-neutral) and couplings between positive
//! semidefinite pairs (margin-positive), so builder output is admissible by
//! construction.

use super::{
    AdmissibleParameters, AtomicMeasure, MAtom, MuAtom, OperatorValuedMeasure, ParamsError,
};
use crate::linalg::{truncation_chi, LinearDrift, SymOp};
use crate::rng::Stream;

/// Tolerance for "positive semidefinite by intent" checks on builder input.
const PSD_INPUT_TOL: f64 = 1e-12;

fn require_psd(what: &str, m: &SymOp) -> Result<(), ParamsError> {
    let min_eig = m.min_eigenvalue();
    if min_eig < -PSD_INPUT_TOL {
        return Err(ParamsError::BuilderInput(format!(
            "{what} must be positive semidefinite, has eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(())
}

/// Diagonal-ladder instance: kernel atoms `xi_n = (1/n) e_n (x) e_n` with
/// rate operators `G_n = g / n^2` for `n = 1..=dim` and a shared positive
/// semidefinite direction `g`.
///
/// Every atom satisfies `|xi_n| <= 1`, and the rate scalings collapse to the
/// single state weight `<x, g>`: all `dim` jump families fire at the same
/// state-dependent rate while their sizes shrink like `1/n`. The exact
/// compensating coupling aggregates to
/// `u -> <u, g> sum_n (1/n) e_n (x) e_n`. As `dim` grows this family
/// approaches an infinite-variation jump regime, which is what the
/// variation diagnostics probe.
pub fn build_simple_example(dim: usize, g: &SymOp) -> Result<AdmissibleParameters, ParamsError> {
    if dim == 0 {
        return Err(ParamsError::BuilderInput("dimension must be positive".into()));
    }
    if g.dim() != dim {
        return Err(ParamsError::BuilderInput(format!(
            "kernel direction has dimension {}, expected {dim}",
            g.dim()
        )));
    }
    require_psd("kernel direction g", g)?;

    let mut mu_atoms = Vec::with_capacity(dim);
    let mut ladder = SymOp::zeros(dim);
    for n in 1..=dim {
        let xi = SymOp::basis(dim, n - 1, n - 1).scale(1.0 / n as f64);
        ladder.axpy(1.0, &xi);
        mu_atoms.push(MuAtom {
            xi,
            g: g.scale(1.0 / (n * n) as f64),
        });
    }
    let b_lin = LinearDrift::structured(dim, vec![0.0; dim * dim], vec![(g.clone(), ladder)])?;

    AdmissibleParameters::new(
        dim,
        SymOp::zeros(dim),
        b_lin,
        AtomicMeasure::empty(dim),
        OperatorValuedMeasure::new(dim, mu_atoms)?,
    )
}

/// General diagonal-direction instance assembled from spectral data.
///
/// Inputs, all indexed by the 0-based diagonal direction `n`:
///
/// * `eta` — per direction, finitely many `(lambda, mass)` pairs describing
///   state-independent jumps of size `lambda` along `e_n (x) e_n`; each pair
///   contributes the atom `(lambda e_n (x) e_n, mass / lambda^2)`.
/// * `mu_masses` — per direction, `(lambda, mass)` pairs describing
///   state-dependent jumps with rate operator `g_list[n] * mass`.
/// * `g_list` — positive semidefinite rate directions, one per entry of
///   `mu_masses`.
/// * `b_tilde` — the drift floor: the constant drift is
///   `b = b_tilde + I_m`, so admissibility's drift condition holds with
///   `b - I_m = b_tilde` exactly.
/// * `c` — row-major entries of the congruence part `C`.
///
/// The compensating couplings aggregate per direction to
/// `u -> <u, g_n> c_n e_n (x) e_n` with `c_n = sum_{lambda <= 1} mass / lambda`.
#[allow(clippy::too_many_arguments)]
pub fn build_generic_example(
    dim: usize,
    eta: &[Vec<(f64, f64)>],
    b_tilde: &SymOp,
    g_list: &[SymOp],
    mu_masses: &[Vec<(f64, f64)>],
    c: Vec<f64>,
) -> Result<AdmissibleParameters, ParamsError> {
    if dim == 0 {
        return Err(ParamsError::BuilderInput("dimension must be positive".into()));
    }
    if eta.len() > dim {
        return Err(ParamsError::BuilderInput(format!(
            "{} constant-jump directions exceed dimension {dim}",
            eta.len()
        )));
    }
    if g_list.len() != mu_masses.len() || g_list.len() > dim {
        return Err(ParamsError::BuilderInput(format!(
            "kernel inputs inconsistent: {} rate directions, {} mass lists, dimension {dim}",
            g_list.len(),
            mu_masses.len()
        )));
    }
    if b_tilde.dim() != dim {
        return Err(ParamsError::BuilderInput(format!(
            "drift floor has dimension {}, expected {dim}",
            b_tilde.dim()
        )));
    }
    require_psd("drift floor b_tilde", b_tilde)?;
    for (n, g) in g_list.iter().enumerate() {
        if g.dim() != dim {
            return Err(ParamsError::BuilderInput(format!(
                "rate direction {n} has dimension {}, expected {dim}",
                g.dim()
            )));
        }
        require_psd("rate direction", g)?;
    }
    let check_pairs = |name: &str, lists: &[Vec<(f64, f64)>]| -> Result<(), ParamsError> {
        for (n, list) in lists.iter().enumerate() {
            for &(lambda, mass) in list {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(ParamsError::BuilderInput(format!(
                        "{name}[{n}]: jump size {lambda} must be positive and finite"
                    )));
                }
                if !(mass >= 0.0 && mass.is_finite()) {
                    return Err(ParamsError::BuilderInput(format!(
                        "{name}[{n}]: mass {mass} must be nonnegative and finite"
                    )));
                }
            }
        }
        Ok(())
    };
    check_pairs("eta", eta)?;
    check_pairs("mu_masses", mu_masses)?;

    // State-independent atoms: (lambda e_n (x) e_n, mass / lambda^2).
    let mut m_atoms = Vec::new();
    for (n, list) in eta.iter().enumerate() {
        for &(lambda, mass) in list {
            if mass == 0.0 {
                continue;
            }
            m_atoms.push(MAtom {
                xi: SymOp::basis(dim, n, n).scale(lambda),
                w: mass / (lambda * lambda),
            });
        }
    }
    let m = AtomicMeasure::new(dim, m_atoms)?;

    // State-dependent atoms and their aggregated compensation strengths.
    let mut mu_atoms = Vec::new();
    let mut couplings = Vec::new();
    for (n, list) in mu_masses.iter().enumerate() {
        let mut c_n = 0.0;
        for &(lambda, mass) in list {
            if mass == 0.0 {
                continue;
            }
            mu_atoms.push(MuAtom {
                xi: SymOp::basis(dim, n, n).scale(lambda),
                g: g_list[n].scale(mass),
            });
            if lambda <= 1.0 {
                c_n += mass / lambda;
            }
        }
        if c_n > 0.0 {
            couplings.push((g_list[n].clone(), SymOp::basis(dim, n, n).scale(c_n)));
        }
    }

    let b = b_tilde.add(&super::compute_i_m(&m));
    let b_lin = LinearDrift::structured(dim, c, couplings)?;

    AdmissibleParameters::new(
        dim,
        b,
        b_lin,
        m,
        OperatorValuedMeasure::new(dim, mu_atoms)?,
    )
}

/// Random positive semidefinite matrix of roughly unit norm times `scale`,
/// with rank between 1 and `dim`.
fn rand_psd(dim: usize, scale: f64, s: &mut Stream) -> SymOp {
    let rank = 1 + s.below(dim as u64) as usize;
    let mut out = SymOp::zeros(dim);
    for _ in 0..rank {
        let v: Vec<f64> = (0..dim).map(|_| s.normal()).collect();
        out.axpy(1.0, &SymOp::rank_one(&v));
    }
    let norm = out.norm();
    if norm == 0.0 {
        // Astronomically unlikely; fall back to a basis direction.
        return SymOp::basis(dim, 0, 0).scale(scale);
    }
    out.scale(scale / norm)
}

/// Randomized admissible instance for tests and benchmarks.
///
/// The recipe keeps admissibility exact rather than statistical:
///
/// * kernel atoms get arbitrary positive semidefinite `(xi, G)` with norms
///   straddling the truncation boundary, each small atom paired with its
///   exact compensating coupling;
/// * the congruence part `C` is a random matrix (margin-neutral);
/// * optionally one extra coupling between random positive semidefinite
///   matrices (margin-positive);
/// * `b = I_m +` a random positive semidefinite matrix, so the drift floor
///   holds by construction.
///
/// Scales are kept moderate so that Riccati flows over unit horizons stay
/// well-conditioned.
pub fn random_admissible(dim: usize, seed: u64) -> AdmissibleParameters {
    assert!(dim >= 1, "dimension must be positive");
    let mut s = Stream::from_key(seed, 0x5EED, 0);

    // Constant-rate jumps: 0..=2 atoms, norms in [0.3, 1.6].
    let n_m = s.below(3) as usize;
    let mut m_atoms = Vec::new();
    for _ in 0..n_m {
        let norm = 0.3 + 1.3 * s.uniform();
        m_atoms.push(MAtom {
            xi: rand_psd(dim, norm, &mut s),
            w: 0.1 + 0.5 * s.uniform(),
        });
    }
    let m = AtomicMeasure::new(dim, m_atoms).expect("random atoms are well-formed");

    // State-dependent jumps: 1..=3 atoms, with exact compensation for the
    // small ones.
    let n_mu = 1 + s.below(3) as usize;
    let mut mu_atoms = Vec::new();
    let mut couplings = Vec::new();
    for _ in 0..n_mu {
        let norm = 0.3 + 1.3 * s.uniform();
        let xi = rand_psd(dim, norm, &mut s);
        let g = rand_psd(dim, 0.1 + 0.5 * s.uniform(), &mut s);
        let chi = truncation_chi(&xi);
        if chi.norm() > 0.0 {
            couplings.push((g.scale(1.0 / xi.inner(&xi)), chi));
        }
        mu_atoms.push(MuAtom { xi, g });
    }
    // Occasionally add a margin-positive coupling between positive pairs.
    if s.below(2) == 1 {
        couplings.push((
            rand_psd(dim, 0.2, &mut s),
            rand_psd(dim, 0.2, &mut s),
        ));
    }
    let mu = OperatorValuedMeasure::new(dim, mu_atoms).expect("random atoms are well-formed");

    let scale_c = 0.3 / (dim as f64).sqrt();
    let c: Vec<f64> = (0..dim * dim).map(|_| scale_c * s.normal()).collect();
    let b_lin = LinearDrift::structured(dim, c, couplings).expect("shapes are consistent");

    let b = super::compute_i_m(&m).add(&rand_psd(dim, 0.2 + 0.3 * s.uniform(), &mut s));

    AdmissibleParameters::new(dim, b, b_lin, m, mu).expect("dimensions agree by construction")
}

/// The canonical diagonal-ladder demo: [`build_simple_example`] with
/// `g = sum_n n^-2 e_n (x) e_n`.
pub fn simple_demo(dim: usize) -> AdmissibleParameters {
    let g = SymOp::from_diag(
        &(1..=dim)
            .map(|n| 1.0 / (n * n) as f64)
            .collect::<Vec<_>>(),
    );
    build_simple_example(dim, &g).expect("demo inputs are valid")
}

/// The canonical general demo: one constant-rate and one state-dependent
/// jump family per diagonal direction, polynomially decaying masses, a mixing
/// rate direction per level, a mildly stable non-normal congruence part, and
/// a small positive drift floor.
///
/// Concretely, for `n = 1..=dim`: jump size `lambda_n = 1/n`; constant mass
/// `0.1 / n^2` (rate `0.1` per atom); kernel mass `0.5 / n^2` on the rate
/// direction `g_n = (v_n (x) v_n) / (n^2 |v_n|^2)` with `v_n = e_n + e_{n+1}/2`
/// (last direction unmixed); `b_tilde = 0.05 I`;
/// `C = -0.2 I + 0.1 *` (superdiagonal shift).
pub fn generic_demo(dim: usize) -> AdmissibleParameters {
    assert!(dim >= 1, "dimension must be positive");
    let mut eta = Vec::with_capacity(dim);
    let mut mu_masses = Vec::with_capacity(dim);
    let mut g_list = Vec::with_capacity(dim);
    for n in 1..=dim {
        let lambda = 1.0 / n as f64;
        let inv_n2 = 1.0 / (n * n) as f64;
        eta.push(vec![(lambda, 0.1 * inv_n2)]);
        mu_masses.push(vec![(lambda, 0.5 * inv_n2)]);
        let mut v = vec![0.0; dim];
        v[n - 1] = 1.0;
        if n < dim {
            v[n] = 0.5;
        }
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();
        g_list.push(SymOp::rank_one(&v).scale(inv_n2 / v_norm_sq));
    }
    let b_tilde = SymOp::identity(dim).scale(0.05);
    let mut c = vec![0.0; dim * dim];
    for i in 0..dim {
        c[i * dim + i] = -0.2;
        if i + 1 < dim {
            c[i * dim + i + 1] = 0.1;
        }
    }
    build_generic_example(dim, &eta, &b_tilde, &g_list, &mu_masses, c)
        .expect("demo inputs are valid")
}
