//! Linear drift maps on symmetric matrices and their adjoints.

use super::symop::SymOp;
use super::LinalgError;

/// A linear map on symmetric `dim x dim` matrices.
///
/// Two representations are supported:
///
/// * `Structured` — `B(u) = C u + u C^T + sum_j <u, A_j> H_j` with a general
///   square matrix `C` and finite-rank couplings `(A_j, H_j)`; the adjoint is
///   obtained exactly by transposing `C` and swapping each coupling pair.
/// * `Dense` — an `N x N` matrix acting on orthonormal-basis coordinates,
///   `N = dim (dim + 1) / 2`; because the coordinate map is an isometry, the
///   adjoint is the matrix transpose.
///
/// Both forms expose the same operations; `Structured` is cheaper and keeps
/// model structure visible, `Dense` is the closure of arbitrary linear maps
/// (projections with jump corrections map `Dense` to `Dense`).
#[derive(Debug, Clone)]
pub enum LinearDrift {
    /// `u -> C u + u C^T + sum_j <u, A_j> H_j`, with `c` the row-major
    /// `dim x dim` entries of `C`.
    Structured {
        /// Ambient dimension.
        dim: usize,
        /// Row-major entries of the (generally non-symmetric) matrix `C`.
        c: Vec<f64>,
        /// Finite-rank couplings `(A_j, H_j)`; each contributes
        /// `<u, A_j> H_j`.
        couplings: Vec<(SymOp, SymOp)>,
    },
    /// Matrix acting on orthonormal-basis coordinate vectors.
    Dense {
        /// Ambient dimension.
        dim: usize,
        /// Row-major `N x N` entries, `N = dim (dim + 1) / 2`.
        matrix: Vec<f64>,
    },
}

impl LinearDrift {
    /// The zero map in ambient dimension `dim`.
    ///
    /// # Panics
    ///
    /// Panics if `dim == 0`.
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "ambient dimension must be at least 1");
        LinearDrift::Structured {
            dim,
            c: vec![0.0; dim * dim],
            couplings: Vec::new(),
        }
    }

    /// Structured drift from row-major `C` entries and couplings.
    pub fn structured(
        dim: usize,
        c: Vec<f64>,
        couplings: Vec<(SymOp, SymOp)>,
    ) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::InvalidDimension(0));
        }
        if c.len() != dim * dim {
            return Err(LinalgError::InvalidDrift(format!(
                "C has {} entries, expected {}",
                c.len(),
                dim * dim
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { context: "drift C" });
        }
        for (a, h) in &couplings {
            if a.dim() != dim || h.dim() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    got: a.dim().min(h.dim()),
                });
            }
        }
        Ok(LinearDrift::Structured { dim, c, couplings })
    }

    /// Dense drift from row-major coordinate-matrix entries.
    pub fn dense(dim: usize, matrix: Vec<f64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::InvalidDimension(0));
        }
        let n = SymOp::n_coords(dim);
        if matrix.len() != n * n {
            return Err(LinalgError::InvalidDrift(format!(
                "coordinate matrix has {} entries, expected {}",
                matrix.len(),
                n * n
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                context: "drift matrix",
            });
        }
        Ok(LinearDrift::Dense { dim, matrix })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            LinearDrift::Structured { dim, .. } | LinearDrift::Dense { dim, .. } => *dim,
        }
    }

    /// Applies the map: `B(u)`.
    ///
    /// # Panics
    ///
    /// Panics if `u` has a different ambient dimension.
    pub fn apply(&self, u: &SymOp) -> SymOp {
        self.apply_impl(u, false)
    }

    /// Applies the adjoint with respect to the trace inner product: `B^*(u)`,
    /// characterized by `<B(u), v> = <u, B^*(v)>`.
    ///
    /// # Panics
    ///
    /// Panics if `u` has a different ambient dimension.
    pub fn apply_adjoint(&self, u: &SymOp) -> SymOp {
        self.apply_impl(u, true)
    }

    fn apply_impl(&self, u: &SymOp, adjoint: bool) -> SymOp {
        assert_eq!(self.dim(), u.dim(), "drift applied across dimensions");
        match self {
            LinearDrift::Structured { dim, c, couplings } => {
                let d = *dim;
                let mut out = SymOp::zeros(d);
                // cu[i][j] = sum_k C[i][k] u[k][j]  (or C^T for the adjoint);
                // the symmetric part C u + u C^T equals cu + cu^T.
                for i in 0..d {
                    for j in i..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            let c_ik = if adjoint { c[k * d + i] } else { c[i * d + k] };
                            let c_jk = if adjoint { c[k * d + j] } else { c[j * d + k] };
                            s += c_ik * u.get(k, j) + c_jk * u.get(k, i);
                        }
                        out.set(i, j, s);
                    }
                }
                for (a, h) in couplings {
                    let (src, dst) = if adjoint { (h, a) } else { (a, h) };
                    out.axpy(u.inner(src), dst);
                }
                out
            }
            LinearDrift::Dense { dim, matrix } => {
                let n = SymOp::n_coords(*dim);
                let x = u.coords();
                let mut y = vec![0.0; n];
                if adjoint {
                    for (r, row) in matrix.chunks_exact(n).enumerate() {
                        let xr = x[r];
                        if xr != 0.0 {
                            for (yc, m) in y.iter_mut().zip(row.iter()) {
                                *yc += m * xr;
                            }
                        }
                    }
                } else {
                    for (yr, row) in y.iter_mut().zip(matrix.chunks_exact(n)) {
                        *yr = row.iter().zip(x.iter()).map(|(m, v)| m * v).sum();
                    }
                }
                SymOp::from_coords(*dim, &y)
            }
        }
    }

    /// The adjoint map as a value: transposes `C` and swaps coupling pairs
    /// in the structured form, transposes the coordinate matrix in the dense
    /// form.
    pub fn adjoint(&self) -> LinearDrift {
        match self {
            LinearDrift::Structured { dim, c, couplings } => {
                let d = *dim;
                let mut ct = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        ct[j * d + i] = c[i * d + j];
                    }
                }
                LinearDrift::Structured {
                    dim: d,
                    c: ct,
                    couplings: couplings.iter().map(|(a, h)| (h.clone(), a.clone())).collect(),
                }
            }
            LinearDrift::Dense { dim, matrix } => {
                let n = SymOp::n_coords(*dim);
                let mut mt = vec![0.0; n * n];
                for r in 0..n {
                    for cidx in 0..n {
                        mt[cidx * n + r] = matrix[r * n + cidx];
                    }
                }
                LinearDrift::Dense {
                    dim: *dim,
                    matrix: mt,
                }
            }
        }
    }

    /// Adds a finite-rank coupling `u -> <u, a> h` to the map, staying in the
    /// current representation (structured drifts grow their coupling list,
    /// dense drifts absorb the rank-one coordinate update).
    ///
    /// # Panics
    ///
    /// Panics if `a` or `h` has a different ambient dimension.
    pub fn add_coupling(&mut self, a: &SymOp, h: &SymOp) {
        assert_eq!(self.dim(), a.dim(), "coupling across dimensions");
        assert_eq!(self.dim(), h.dim(), "coupling across dimensions");
        match self {
            LinearDrift::Structured { couplings, .. } => {
                couplings.push((a.clone(), h.clone()));
            }
            LinearDrift::Dense { dim, matrix } => {
                let n = SymOp::n_coords(*dim);
                let ac = a.coords();
                let hc = h.coords();
                for r in 0..n {
                    if hc[r] == 0.0 {
                        continue;
                    }
                    for cidx in 0..n {
                        matrix[r * n + cidx] += hc[r] * ac[cidx];
                    }
                }
            }
        }
    }

    /// Dense coordinate-matrix entries of the map (row-major `N x N`).
    pub fn dense_matrix(&self) -> Vec<f64> {
        match self {
            LinearDrift::Dense { matrix, .. } => matrix.clone(),
            LinearDrift::Structured { dim, .. } => {
                let n = SymOp::n_coords(*dim);
                let mut out = vec![0.0; n * n];
                for (col, (i, j)) in SymOp::coord_pairs(*dim).enumerate() {
                    let image = self.apply(&SymOp::basis(*dim, i, j));
                    for (row, v) in image.coords().iter().enumerate() {
                        out[row * n + col] = *v;
                    }
                }
                out
            }
        }
    }

    /// Converts to the dense representation (identity on dense input).
    pub fn to_dense(&self) -> LinearDrift {
        LinearDrift::Dense {
            dim: self.dim(),
            matrix: self.dense_matrix(),
        }
    }

    /// Compression onto the leading `d x d` block: the map
    /// `u -> P_d B(P_d u) P_d`.
    ///
    /// Works in coordinates, zeroing the matrix rows and columns that touch
    /// the block complement, so the result is always the dense form.
    /// Zeroing the structured data instead would be wrong: a compressed `C`
    /// still lets off-block entries of the input leak into the block of the
    /// output. `d >= dim` returns the map unchanged.
    pub fn project(&self, d: usize) -> LinearDrift {
        if d >= self.dim() {
            return self.clone();
        }
        let dim = self.dim();
        let n = SymOp::n_coords(dim);
        let keep: Vec<bool> = SymOp::coord_pairs(dim).map(|(_, j)| j < d).collect();
        let matrix = self.dense_matrix();
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            if !keep[r] {
                continue;
            }
            for cidx in 0..n {
                if keep[cidx] {
                    out[r * n + cidx] = matrix[r * n + cidx];
                }
            }
        }
        LinearDrift::Dense { dim, matrix: out }
    }

    /// Operator norm (largest singular value) of the map with respect to the
    /// trace inner product, computed by power iteration on `B^T B` in
    /// coordinates.
    ///
    /// Accurate to about six digits, which is plenty for the growth constants
    /// it feeds; deterministic (fixed starting vector, fixed iteration
    /// schedule).
    pub fn op_norm(&self) -> f64 {
        let n = SymOp::n_coords(self.dim());
        let m = self.dense_matrix();
        // Power iteration on S = M^T M with a fixed, non-degenerate start.
        let mut v: Vec<f64> = (0..n).map(|k| 1.0 + 0.1 * ((k % 7) as f64)).collect();
        let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv = norm(&v);
        for x in v.iter_mut() {
            *x /= nv;
        }
        let mut lambda = 0.0;
        for _ in 0..10_000 {
            // w = M v, s = M^T w.
            let mut w = vec![0.0; n];
            for (wr, row) in w.iter_mut().zip(m.chunks_exact(n)) {
                *wr = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            }
            let mut s = vec![0.0; n];
            for (r, row) in m.chunks_exact(n).enumerate() {
                let wr = w[r];
                if wr != 0.0 {
                    for (sc, a) in s.iter_mut().zip(row.iter()) {
                        *sc += a * wr;
                    }
                }
            }
            let new_lambda = s.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>();
            let ns = norm(&s);
            if ns == 0.0 {
                return 0.0;
            }
            for (vc, sc) in v.iter_mut().zip(s.iter()) {
                *vc = sc / ns;
            }
            if (new_lambda - lambda).abs() <= 1e-13 * new_lambda.abs().max(1e-300) {
                lambda = new_lambda;
                break;
            }
            lambda = new_lambda;
        }
        lambda.max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hs_inner;
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn rand_sym(dim: usize, s: &mut Stream) -> SymOp {
        let mut out = SymOp::zeros(dim);
        for (i, j) in SymOp::coord_pairs(dim) {
            out.set(i, j, s.normal());
        }
        out
    }

    fn rand_structured(dim: usize, seed: u64) -> LinearDrift {
        let mut s = Stream::from_key(seed, 11, 13);
        let c: Vec<f64> = (0..dim * dim).map(|_| s.normal()).collect();
        let k = 1 + (s.below(3) as usize);
        let couplings = (0..k)
            .map(|_| (rand_sym(dim, &mut s), rand_sym(dim, &mut s)))
            .collect();
        LinearDrift::structured(dim, c, couplings).unwrap()
    }

    #[test]
    fn structured_apply_matches_hand_example() {
        // C = [[0, 1], [0, 0]] applied to u = e2 (x) e2.
        let c = vec![0.0, 1.0, 0.0, 0.0];
        let b = LinearDrift::structured(2, c, vec![]).unwrap();
        let u = SymOp::from_diag(&[0.0, 1.0]);
        let bu = b.apply(&u);
        // C u = [[0, 1], [0, 0]] * diag(0, 1) = [[0, 1], [0, 0]];
        // C u + (C u)^T = [[0, 1], [1, 0]].
        assert_eq!(bu.get(0, 0), 0.0);
        assert_eq!(bu.get(0, 1), 1.0);
        assert_eq!(bu.get(1, 1), 0.0);

        // A coupling <u, A> H with A = identity, H = e1 (x) e1 adds tr(u) H.
        let mut b2 = LinearDrift::zero(2);
        b2.add_coupling(&SymOp::identity(2), &SymOp::basis(2, 0, 0));
        let v = SymOp::from_diag(&[3.0, 4.0]);
        let b2v = b2.apply(&v);
        assert_eq!(b2v.get(0, 0), 7.0);
        assert_eq!(b2v.get(1, 1), 0.0);
    }

    #[test]
    fn adjoint_identity_spot_check() {
        let b = rand_structured(3, 5);
        let mut s = Stream::from_key(77, 0, 0);
        let u = rand_sym(3, &mut s);
        let v = rand_sym(3, &mut s);
        let lhs = hs_inner(&b.apply(&u), &v);
        let rhs = hs_inner(&u, &b.apply_adjoint(&v));
        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn dense_conversion_and_projection_commute() {
        let b = rand_structured(4, 9);
        let d = 2;
        let left = b.project(d).to_dense().dense_matrix();
        let right = b.to_dense().project(d).dense_matrix();
        for (x, y) in left.iter().zip(right.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn op_norm_closed_forms() {
        // Zero map.
        assert_eq!(LinearDrift::zero(3).op_norm(), 0.0);

        // Rank-one coupling u -> <u, a> h has operator norm |a| |h|.
        let mut b = LinearDrift::zero(3);
        let a = SymOp::from_diag(&[1.0, 2.0, 0.0]);
        let h = SymOp::basis(3, 0, 1);
        b.add_coupling(&a, &h);
        let expected = a.norm() * h.norm();
        assert!((b.op_norm() - expected).abs() < 1e-6 * expected);

        // C = alpha I gives B(u) = 2 alpha u, norm 2 |alpha|.
        let alpha = -0.7;
        let mut c = vec![0.0; 9];
        for i in 0..3 {
            c[i * 3 + i] = alpha;
        }
        let b2 = LinearDrift::structured(3, c, vec![]).unwrap();
        assert!((b2.op_norm() - 2.0 * alpha.abs()).abs() < 1e-6);
    }

    #[test]
    fn constructors_validate_shapes() {
        assert!(LinearDrift::structured(2, vec![0.0; 3], vec![]).is_err());
        assert!(LinearDrift::dense(2, vec![0.0; 8]).is_err());
        assert!(LinearDrift::structured(0, vec![], vec![]).is_err());
        let bad_coupling = vec![(SymOp::zeros(3), SymOp::zeros(2))];
        assert!(LinearDrift::structured(2, vec![0.0; 4], bad_coupling).is_err());
    }

    proptest! {
        #[test]
        fn adjoint_satisfies_defining_identity(dim in 1usize..5, seed in 0u64..100) {
            let b = rand_structured(dim, seed);
            let mut s = Stream::from_key(seed, 3, 4);
            let u = rand_sym(dim, &mut s);
            let v = rand_sym(dim, &mut s);
            let lhs = hs_inner(&b.apply(&u), &v);
            let rhs = hs_inner(&u, &b.apply_adjoint(&v));
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs().max(rhs.abs())));
        }

        #[test]
        fn dense_agrees_with_structured(dim in 1usize..5, seed in 0u64..100) {
            let b = rand_structured(dim, seed);
            let bd = b.to_dense();
            let mut s = Stream::from_key(seed, 5, 6);
            let u = rand_sym(dim, &mut s);
            let scale = 1.0 + u.norm();
            prop_assert!(bd.apply(&u).sub(&b.apply(&u)).norm() <= 1e-10 * scale);
            prop_assert!(
                bd.apply_adjoint(&u).sub(&b.apply_adjoint(&u)).norm() <= 1e-10 * scale
            );
        }

        #[test]
        fn adjoint_value_matches_apply_adjoint(dim in 1usize..5, seed in 0u64..60) {
            let b = rand_structured(dim, seed);
            let badj = b.adjoint();
            let mut s = Stream::from_key(seed, 7, 8);
            let u = rand_sym(dim, &mut s);
            let scale = 1.0 + u.norm();
            prop_assert!(badj.apply(&u).sub(&b.apply_adjoint(&u)).norm() <= 1e-10 * scale);
            // Dense adjoint too.
            let bd = b.to_dense().adjoint();
            prop_assert!(bd.apply(&u).sub(&b.apply_adjoint(&u)).norm() <= 1e-10 * scale);
        }

        #[test]
        fn projection_compresses_the_map(dim in 2usize..5, seed in 0u64..60, d in 1usize..4) {
            let d = d.min(dim);
            let b = rand_structured(dim, seed);
            let bp = b.project(d);
            let mut s = Stream::from_key(seed, 9, 10);
            let u = rand_sym(dim, &mut s);
            // Compressed map equals P_d B(P_d u) P_d applied to anything.
            let expected = b.apply(&u.project(d)).project(d);
            let scale = 1.0 + expected.norm();
            prop_assert!(bp.apply(&u).sub(&expected).norm() <= 1e-10 * scale);
            // And its output is supported on the block.
            prop_assert!(bp.apply(&u).supported_on(d));
        }

        #[test]
        fn op_norm_dominates_rayleigh_samples(dim in 1usize..4, seed in 0u64..40) {
            let b = rand_structured(dim, seed);
            let norm = b.op_norm();
            let mut s = Stream::from_key(seed, 1, 2);
            for _ in 0..5 {
                let u = rand_sym(dim, &mut s);
                let ratio = b.apply(&u).norm() / u.norm().max(1e-300);
                prop_assert!(ratio <= norm * (1.0 + 1e-6) + 1e-9);
            }
        }
    }
}
