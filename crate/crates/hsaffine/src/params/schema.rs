//! JSON serialization of parameter sets.
//!
//! The document shape is
//!
//! ```json
//! {
//!   "dim": 3,
//!   "b": [[...], ...],
//!   "B": {"kind": "structured", "C": [[...], ...], "couplings": [{"A": ..., "H": ...}]},
//!   "m": [{"xi": [[...], ...], "w": 0.5}],
//!   "mu": [{"xi": [[...], ...], "G": [[...], ...]}]
//! }
//! ```
//!
//! with `B` alternatively `{"kind": "dense", "matrix": [...]}` (row-major
//! coordinate matrix). All matrices are full nested rows; symmetric ones are
//! checked for symmetry on input (tolerance `1e-12`, resolved by averaging)
//! and jump data is checked for positivity. Floats are written with 17
//! significant digits, so a parse/serialize/parse round trip is exact.

use super::{
    AdmissibleParameters, AtomicMeasure, MAtom, MuAtom, OperatorValuedMeasure, ParamsError,
};
use crate::linalg::{LinearDrift, SymOp};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct ParamsJson {
    dim: usize,
    b: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b_lin: DriftJson,
    m: Vec<MAtomJson>,
    mu: Vec<MuAtomJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DriftJson {
    Structured {
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
        couplings: Vec<CouplingJson>,
    },
    Dense {
        matrix: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct CouplingJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MAtomJson {
    xi: Vec<Vec<f64>>,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct MuAtomJson {
    xi: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
}

fn sym_from_rows(dim: usize, rows: &[Vec<f64>], what: &str) -> Result<SymOp, ParamsError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(ParamsError::Schema(format!(
            "{what}: expected a {dim}x{dim} matrix"
        )));
    }
    SymOp::from_rows(rows).map_err(|e| ParamsError::Schema(format!("{what}: {e}")))
}

fn require_psd_schema(what: &str, m: &SymOp) -> Result<(), ParamsError> {
    let min_eig = m.min_eigenvalue();
    if min_eig < -1e-12 {
        return Err(ParamsError::Schema(format!(
            "{what} must be positive semidefinite, has eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(())
}

/// Parses a parameter document, validating shapes, symmetry, and the
/// positivity of jump data.
pub fn from_json_str(text: &str) -> Result<AdmissibleParameters, ParamsError> {
    let raw: ParamsJson =
        serde_json::from_str(text).map_err(|e| ParamsError::Schema(e.to_string()))?;
    let dim = raw.dim;
    if dim == 0 {
        return Err(ParamsError::Schema("dim must be at least 1".into()));
    }

    let b = sym_from_rows(dim, &raw.b, "b")?;

    let b_lin = match &raw.b_lin {
        DriftJson::Structured { c, couplings } => {
            if c.len() != dim || c.iter().any(|r| r.len() != dim) {
                return Err(ParamsError::Schema(format!(
                    "B.C: expected a {dim}x{dim} matrix"
                )));
            }
            let flat: Vec<f64> = c.iter().flatten().copied().collect();
            if flat.iter().any(|v| !v.is_finite()) {
                return Err(ParamsError::Schema("B.C: non-finite entry".into()));
            }
            let mut pairs = Vec::with_capacity(couplings.len());
            for (k, cp) in couplings.iter().enumerate() {
                let a = sym_from_rows(dim, &cp.a, &format!("B.couplings[{k}].A"))?;
                let h = sym_from_rows(dim, &cp.h, &format!("B.couplings[{k}].H"))?;
                pairs.push((a, h));
            }
            LinearDrift::structured(dim, flat, pairs)
                .map_err(|e| ParamsError::Schema(format!("B: {e}")))?
        }
        DriftJson::Dense { matrix } => LinearDrift::dense(dim, matrix.clone())
            .map_err(|e| ParamsError::Schema(format!("B: {e}")))?,
    };

    let mut m_atoms = Vec::with_capacity(raw.m.len());
    for (k, atom) in raw.m.iter().enumerate() {
        let xi = sym_from_rows(dim, &atom.xi, &format!("m[{k}].xi"))?;
        require_psd_schema(&format!("m[{k}].xi"), &xi)?;
        if xi.norm() == 0.0 {
            return Err(ParamsError::Schema(format!("m[{k}].xi is zero")));
        }
        if !(atom.w >= 0.0 && atom.w.is_finite()) {
            return Err(ParamsError::Schema(format!(
                "m[{k}].w = {} must be nonnegative and finite",
                atom.w
            )));
        }
        m_atoms.push(MAtom { xi, w: atom.w });
    }

    let mut mu_atoms = Vec::with_capacity(raw.mu.len());
    for (k, atom) in raw.mu.iter().enumerate() {
        let xi = sym_from_rows(dim, &atom.xi, &format!("mu[{k}].xi"))?;
        require_psd_schema(&format!("mu[{k}].xi"), &xi)?;
        if xi.norm() == 0.0 {
            return Err(ParamsError::Schema(format!("mu[{k}].xi is zero")));
        }
        let g = sym_from_rows(dim, &atom.g, &format!("mu[{k}].G"))?;
        require_psd_schema(&format!("mu[{k}].G"), &g)?;
        mu_atoms.push(MuAtom { xi, g });
    }

    AdmissibleParameters::new(
        dim,
        b,
        b_lin,
        AtomicMeasure::new(dim, m_atoms)?,
        OperatorValuedMeasure::new(dim, mu_atoms)?,
    )
}

/// Serializes a parameter set to its JSON document form with exact float
/// round trip.
pub fn to_json_string(p: &AdmissibleParameters) -> String {
    let b_lin = match &p.b_lin {
        LinearDrift::Structured { dim, c, couplings } => DriftJson::Structured {
            c: (0..*dim)
                .map(|i| c[i * dim..(i + 1) * dim].to_vec())
                .collect(),
            couplings: couplings
                .iter()
                .map(|(a, h)| CouplingJson {
                    a: a.to_rows(),
                    h: h.to_rows(),
                })
                .collect(),
        },
        LinearDrift::Dense { matrix, .. } => DriftJson::Dense {
            matrix: matrix.clone(),
        },
    };
    let doc = ParamsJson {
        dim: p.dim,
        b: p.b.to_rows(),
        b_lin,
        m: p
            .m
            .atoms
            .iter()
            .map(|a| MAtomJson {
                xi: a.xi.to_rows(),
                w: a.w,
            })
            .collect(),
        mu: p
            .mu
            .atoms
            .iter()
            .map(|a| MuAtomJson {
                xi: a.xi.to_rows(),
                g: a.g.to_rows(),
            })
            .collect(),
    };
    crate::fmt::to_json(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{generic_demo, random_admissible};

    fn assert_same_params(a: &AdmissibleParameters, b: &AdmissibleParameters) {
        assert_eq!(a.dim, b.dim);
        assert_eq!(a.b, b.b);
        assert_eq!(a.m.atoms.len(), b.m.atoms.len());
        for (x, y) in a.m.atoms.iter().zip(b.m.atoms.iter()) {
            assert_eq!(x.xi, y.xi);
            assert_eq!(x.w.to_bits(), y.w.to_bits());
        }
        assert_eq!(a.mu.atoms.len(), b.mu.atoms.len());
        for (x, y) in a.mu.atoms.iter().zip(b.mu.atoms.iter()) {
            assert_eq!(x.xi, y.xi);
            assert_eq!(x.g, y.g);
        }
        match (&a.b_lin, &b.b_lin) {
            (
                LinearDrift::Structured { c: c1, couplings: k1, .. },
                LinearDrift::Structured { c: c2, couplings: k2, .. },
            ) => {
                assert_eq!(c1, c2);
                assert_eq!(k1.len(), k2.len());
                for ((a1, h1), (a2, h2)) in k1.iter().zip(k2.iter()) {
                    assert_eq!(a1, a2);
                    assert_eq!(h1, h2);
                }
            }
            (
                LinearDrift::Dense { matrix: m1, .. },
                LinearDrift::Dense { matrix: m2, .. },
            ) => assert_eq!(m1, m2),
            _ => panic!("drift representations differ"),
        }
    }

    #[test]
    fn round_trip_is_field_exact() {
        for seed in [1_u64, 2, 3] {
            let p = random_admissible(4, seed);
            let text = to_json_string(&p);
            let back = from_json_str(&text).expect("round trip parses");
            assert_same_params(&p, &back);
            // Second round trip produces byte-identical text.
            let text2 = to_json_string(&back);
            assert_eq!(text, text2);
        }
    }

    #[test]
    fn round_trip_of_demo_and_dense() {
        let p = generic_demo(3);
        let back = from_json_str(&to_json_string(&p)).unwrap();
        assert_same_params(&p, &back);

        // Dense drift variant.
        let mut dense = p.clone();
        dense.b_lin = p.b_lin.to_dense();
        let back2 = from_json_str(&to_json_string(&dense)).unwrap();
        assert_same_params(&dense, &back2);
    }

    #[test]
    fn parse_of_handwritten_document() {
        let text = r#"{
            "dim": 2,
            "b": [[0.5, 0.0], [0.0, 0.25]],
            "B": {"kind": "structured", "C": [[-0.1, 0.0], [0.0, -0.1]], "couplings": []},
            "m": [{"xi": [[1.0, 0.0], [0.0, 0.0]], "w": 0.5}],
            "mu": [{"xi": [[0.0, 0.0], [0.0, 0.5]], "G": [[0.3, 0.0], [0.0, 0.0]]}]
        }"#;
        let p = from_json_str(text).unwrap();
        assert_eq!(p.dim, 2);
        assert_eq!(p.b.get(1, 1), 0.25);
        assert_eq!(p.m.atoms[0].w, 0.5);
        assert_eq!(p.mu.atoms[0].xi.get(1, 1), 0.5);
    }

    #[test]
    fn schema_violations_are_rejected() {
        // Malformed JSON.
        assert!(matches!(
            from_json_str("{"),
            Err(ParamsError::Schema(_))
        ));
        // Wrong matrix shape.
        let bad_shape = r#"{
            "dim": 2, "b": [[0.0]],
            "B": {"kind": "structured", "C": [[0.0, 0.0], [0.0, 0.0]], "couplings": []},
            "m": [], "mu": []
        }"#;
        assert!(matches!(from_json_str(bad_shape), Err(ParamsError::Schema(_))));
        // Asymmetric b.
        let asym = r#"{
            "dim": 2, "b": [[0.0, 1.0], [0.0, 0.0]],
            "B": {"kind": "structured", "C": [[0.0, 0.0], [0.0, 0.0]], "couplings": []},
            "m": [], "mu": []
        }"#;
        assert!(matches!(from_json_str(asym), Err(ParamsError::Schema(_))));
        // Negative-definite jump direction.
        let neg = r#"{
            "dim": 2, "b": [[0.0, 0.0], [0.0, 0.0]],
            "B": {"kind": "structured", "C": [[0.0, 0.0], [0.0, 0.0]], "couplings": []},
            "m": [{"xi": [[-1.0, 0.0], [0.0, 0.0]], "w": 1.0}], "mu": []
        }"#;
        assert!(matches!(from_json_str(neg), Err(ParamsError::Schema(_))));
        // Negative rate.
        let negw = r#"{
            "dim": 2, "b": [[0.0, 0.0], [0.0, 0.0]],
            "B": {"kind": "structured", "C": [[0.0, 0.0], [0.0, 0.0]], "couplings": []},
            "m": [{"xi": [[1.0, 0.0], [0.0, 0.0]], "w": -0.5}], "mu": []
        }"#;
        assert!(matches!(from_json_str(negw), Err(ParamsError::Schema(_))));
        // Dense matrix with wrong length.
        let badlen = r#"{
            "dim": 2, "b": [[0.0, 0.0], [0.0, 0.0]],
            "B": {"kind": "dense", "matrix": [0.0, 0.0]},
            "m": [], "mu": []
        }"#;
        assert!(matches!(from_json_str(badlen), Err(ParamsError::Schema(_))));
    }
}
