//! Symmetric-matrix storage and the trace inner product.

use super::LinalgError;
use nalgebra::DMatrix;
use std::f64::consts::SQRT_2;

/// A symmetric `dim x dim` real matrix stored as its upper triangle.
///
/// Storage is row-major over the upper triangle: row `i` holds entries
/// `(i, i), (i, i+1), ..., (i, dim-1)`, so row `i` starts at offset
/// `i * dim - i * (i - 1) / 2`. A `dim`-dimensional matrix has
/// `dim * (dim + 1) / 2` stored entries.
///
/// The trace inner product `<u, v> = tr(u v)` makes the space Euclidean; the
/// orthonormal basis used throughout consists of `e_i (x) e_i` on the
/// diagonal and `(e_i (x) e_j + e_j (x) e_i) / sqrt(2)` off it, see
/// [`SymOp::basis`] and [`SymOp::coords`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymOp {
    dim: usize,
    tri: Vec<f64>,
}

#[inline]
fn tri_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

impl SymOp {
    /// The zero matrix in ambient dimension `dim`.
    ///
    /// # Panics
    ///
    /// Panics if `dim == 0`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "ambient dimension must be at least 1");
        SymOp {
            dim,
            tri: vec![0.0; tri_len(dim)],
        }
    }

    /// The identity matrix in ambient dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.set(i, i, 1.0);
        }
        out
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut out = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            out.set(i, i, v);
        }
        out
    }

    /// The orthonormal basis element indexed by `(i, j)`: `e_i (x) e_i` when
    /// `i == j`, and `(e_i (x) e_j + e_j (x) e_i) / sqrt(2)` otherwise. All
    /// basis elements have unit Frobenius norm.
    ///
    /// # Panics
    ///
    /// Panics if `i` or `j` is out of range.
    pub fn basis(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < dim && j < dim, "basis index out of range");
        let mut out = Self::zeros(dim);
        if i == j {
            out.set(i, i, 1.0);
        } else {
            out.set(i, j, 1.0 / SQRT_2);
        }
        out
    }

    /// Symmetric rank-one matrix `v (x) v` (outer product of `v` with
    /// itself).
    pub fn rank_one(v: &[f64]) -> Self {
        let dim = v.len();
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                out.set(i, j, v[i] * v[j]);
            }
        }
        out
    }

    /// Builds a symmetric matrix from full row-major entries, rejecting
    /// non-square, non-symmetric, or non-finite input.
    ///
    /// Asymmetry up to `1e-12` in absolute value is tolerated and resolved by
    /// averaging with the transpose.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinalgError::InvalidDimension(0));
        }
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        let mut max_asym: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                if !rows[i][j].is_finite() {
                    return Err(LinalgError::NonFinite {
                        context: "matrix entries",
                    });
                }
                max_asym = max_asym.max((rows[i][j] - rows[j][i]).abs());
            }
        }
        if max_asym > 1e-12 {
            return Err(LinalgError::NotSymmetric { max_asym });
        }
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                out.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Ok(out)
    }

    /// Full row-major entries (both triangles).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Ambient dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn tri_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.dim);
        i * (2 * self.dim - i - 1) / 2 + j
    }

    /// Entry `(i, j)` (either triangle).
    ///
    /// # Panics
    ///
    /// Panics if an index is out of range.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.tri[self.tri_index(i, j)]
    }

    /// Sets entry `(i, j)` and its mirror `(j, i)`.
    ///
    /// # Panics
    ///
    /// Panics if an index is out of range.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let idx = self.tri_index(i, j);
        self.tri[idx] = value;
    }

    /// Number of orthonormal-basis coordinates in dimension `dim`.
    #[inline]
    pub fn n_coords(dim: usize) -> usize {
        tri_len(dim)
    }

    /// Position of the `(i, j)` coordinate (upper triangle, `i <= j`,
    /// row-major) in the coordinate vector.
    #[inline]
    pub fn coord_index(dim: usize, i: usize, j: usize) -> usize {
        assert!(i <= j && j < dim, "coordinate index out of range");
        i * (2 * dim - i - 1) / 2 + j
    }

    /// Upper-triangle index pairs `(i, j)`, `i <= j`, in coordinate order.
    pub fn coord_pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..dim).flat_map(move |i| (i..dim).map(move |j| (i, j)))
    }

    /// Coordinates in the orthonormal basis: `u_ii` on the diagonal and
    /// `sqrt(2) u_ij` off it, ordered like [`SymOp::coord_pairs`]. The map is
    /// a linear isometry: Euclidean inner products of coordinate vectors
    /// equal trace inner products of the matrices.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.tri.len());
        for (i, j) in Self::coord_pairs(self.dim) {
            let v = self.tri[self.tri_index(i, j)];
            out.push(if i == j { v } else { SQRT_2 * v });
        }
        out
    }

    /// Inverse of [`SymOp::coords`].
    ///
    /// # Panics
    ///
    /// Panics if the coordinate vector has the wrong length.
    pub fn from_coords(dim: usize, coords: &[f64]) -> Self {
        assert_eq!(
            coords.len(),
            tri_len(dim),
            "coordinate vector has wrong length"
        );
        let mut out = Self::zeros(dim);
        for (k, (i, j)) in Self::coord_pairs(dim).enumerate() {
            let v = if i == j {
                coords[k]
            } else {
                coords[k] / SQRT_2
            };
            out.set(i, j, v);
        }
        out
    }

    /// Trace inner product `<u, v> = tr(u v)`.
    ///
    /// # Panics
    ///
    /// Panics if the dimensions differ.
    pub fn inner(&self, other: &SymOp) -> f64 {
        assert_eq!(
            self.dim, other.dim,
            "inner product requires equal dimensions"
        );
        let mut diag = 0.0;
        let mut off = 0.0;
        for (k, (i, j)) in Self::coord_pairs(self.dim).enumerate() {
            let prod = self.tri[k] * other.tri[k];
            if i == j {
                diag += prod;
            } else {
                off += prod;
            }
        }
        diag + 2.0 * off
    }

    /// Frobenius norm `sqrt(<u, u>)`.
    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.tri.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Whether every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.tri.iter().all(|v| v.is_finite())
    }

    /// Sum with another matrix.
    ///
    /// # Panics
    ///
    /// Panics if the dimensions differ.
    pub fn add(&self, other: &SymOp) -> SymOp {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Difference `self - other`.
    ///
    /// # Panics
    ///
    /// Panics if the dimensions differ.
    pub fn sub(&self, other: &SymOp) -> SymOp {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Scalar multiple.
    pub fn scale(&self, a: f64) -> SymOp {
        SymOp {
            dim: self.dim,
            tri: self.tri.iter().map(|v| a * v).collect(),
        }
    }

    /// In-place `self += a * other`.
    ///
    /// # Panics
    ///
    /// Panics if the dimensions differ.
    pub fn axpy(&mut self, a: f64, other: &SymOp) {
        assert_eq!(self.dim, other.dim, "axpy requires equal dimensions");
        for (x, y) in self.tri.iter_mut().zip(other.tri.iter()) {
            *x += a * y;
        }
    }

    /// Leading-block projection: zeroes every entry with a row or column
    /// index `>= d`, keeps the rest exactly. `d >= dim` is the identity.
    pub fn project(&self, d: usize) -> SymOp {
        if d >= self.dim {
            return self.clone();
        }
        let mut out = Self::zeros(self.dim);
        for i in 0..d {
            for j in i..d {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// Complement of the leading-block projection: `self - project(d)`.
    pub fn perp(&self, d: usize) -> SymOp {
        self.sub(&self.project(d))
    }

    /// Whether all entries outside the leading `d x d` block are exactly
    /// zero.
    pub fn supported_on(&self, d: usize) -> bool {
        for (k, (i, j)) in Self::coord_pairs(self.dim).enumerate() {
            if j >= d && self.tri[k] != 0.0 {
                debug_assert!(i <= j);
                return false;
            }
        }
        true
    }

    /// Conversion to a dense `nalgebra` matrix (both triangles filled).
    pub(crate) fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Reads the upper triangle of a dense matrix back into compact storage,
    /// symmetrizing by averaging mirrored entries.
    pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> SymOp {
        let dim = m.nrows();
        debug_assert_eq!(dim, m.ncols());
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                out.set(i, j, 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        out
    }

    /// Smallest eigenvalue, by symmetric eigendecomposition.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 1 {
            return self.tri[0];
        }
        let eig = self.to_dmatrix().symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Eigenvalue clamp onto the positive semidefinite cone.
    ///
    /// Matrices whose minimum eigenvalue is at least `-delta`, with
    /// `delta = 1e-12 * (1 + max |entry|)`, are returned unchanged
    /// (bit-exact), which also preserves exact zero blocks; this case is
    /// certified cheaply by a Cholesky factorization of `self + delta I`.
    /// Otherwise eigenvalues in `[-tol, 0)` are replaced by zero and the
    /// matrix reassembled, and an eigenvalue below `-tol` is a genuine cone
    /// violation reported as [`LinalgError::ConeViolation`].
    pub fn psd_clamp(&self, tol: f64) -> Result<SymOp, LinalgError> {
        assert!(tol >= 0.0, "clamp tolerance must be nonnegative");
        if self.dim == 1 {
            let v = self.tri[0];
            if v >= 0.0 {
                return Ok(self.clone());
            }
            if v >= -tol {
                return Ok(SymOp::zeros(1));
            }
            return Err(LinalgError::ConeViolation {
                min_eig: v,
                tol,
            });
        }

        // Fast path: if self + delta I admits a Cholesky factorization, every
        // eigenvalue exceeds -delta, far inside the tolerance.
        let delta = 1e-12 * (1.0 + self.max_abs());
        if delta <= tol {
            let mut shifted = self.to_dmatrix();
            for i in 0..self.dim {
                shifted[(i, i)] += delta;
            }
            if shifted.cholesky().is_some() {
                return Ok(self.clone());
            }
        }

        let eig = self.to_dmatrix().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig >= 0.0 {
            return Ok(self.clone());
        }
        if min_eig < -tol {
            return Err(LinalgError::ConeViolation { min_eig, tol });
        }
        let mut vals = eig.eigenvalues.clone();
        for v in vals.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let q = &eig.eigenvectors;
        let rebuilt = q * DMatrix::from_diagonal(&vals) * q.transpose();
        Ok(SymOp::from_dmatrix(&rebuilt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(dim: usize, seed: u64) -> SymOp {
        let mut s = crate::rng::Stream::from_key(seed, 0, 0);
        let mut out = SymOp::zeros(dim);
        for (i, j) in SymOp::coord_pairs(dim) {
            out.set(i, j, s.normal());
        }
        out
    }

    #[test]
    fn storage_layout_and_accessors() {
        let mut u = SymOp::zeros(3);
        u.set(0, 1, 2.0);
        u.set(2, 1, -3.0); // lower-triangle write lands in the mirror slot
        assert_eq!(u.get(1, 0), 2.0);
        assert_eq!(u.get(1, 2), -3.0);
        assert_eq!(u.get(2, 2), 0.0);
        assert_eq!(SymOp::n_coords(3), 6);
        assert_eq!(SymOp::coord_index(3, 0, 0), 0);
        assert_eq!(SymOp::coord_index(3, 0, 2), 2);
        assert_eq!(SymOp::coord_index(3, 1, 1), 3);
        assert_eq!(SymOp::coord_index(3, 2, 2), 5);
    }

    #[test]
    fn inner_product_matches_trace_of_product() {
        let u = sym(4, 1);
        let v = sym(4, 2);
        let trace = (u.to_dmatrix() * v.to_dmatrix()).trace();
        assert!((u.inner(&v) - trace).abs() < 1e-12 * (1.0 + trace.abs()));
    }

    #[test]
    fn basis_is_orthonormal() {
        let dim = 3;
        let pairs: Vec<_> = SymOp::coord_pairs(dim).collect();
        for &(i, j) in &pairs {
            for &(k, l) in &pairs {
                let e1 = SymOp::basis(dim, i, j);
                let e2 = SymOp::basis(dim, k, l);
                let expected = if (i, j) == (k, l) { 1.0 } else { 0.0 };
                assert!((e1.inner(&e2) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn projection_examples() {
        // Diagonal matrix: projection keeps the first d diagonal entries.
        let u = SymOp::from_diag(&[1.0, 2.0, 3.0]);
        let p = u.project(2);
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.get(1, 1), 2.0);
        assert_eq!(p.get(2, 2), 0.0);

        // Off-diagonal entry straddling the block boundary is dropped.
        let mut v = SymOp::zeros(3);
        v.set(0, 2, 5.0);
        assert_eq!(v.project(2), SymOp::zeros(3));
        assert!(v.project(2).supported_on(2));

        // d >= dim is the identity, d = 0 the zero map.
        assert_eq!(u.project(3), u);
        assert_eq!(u.project(7), u);
        assert_eq!(u.project(0), SymOp::zeros(3));
    }

    #[test]
    fn min_eigenvalue_against_closed_forms() {
        // Diagonal: min eigenvalue is the smallest diagonal entry.
        let u = SymOp::from_diag(&[3.0, -2.0, 5.0]);
        assert!((u.min_eigenvalue() + 2.0).abs() < 1e-12);

        // 2x2 [[a, c], [c, b]]: eigenvalues (a+b)/2 -+ sqrt(((a-b)/2)^2 + c^2).
        let mut v = SymOp::zeros(2);
        v.set(0, 0, 2.0);
        v.set(1, 1, 1.0);
        v.set(0, 1, 0.75);
        let expected = 1.5 - (0.25 + 0.5625_f64).sqrt();
        assert!((v.min_eigenvalue() - expected).abs() < 1e-12);
    }

    #[test]
    fn psd_clamp_behaviour() {
        // PSD input is returned unchanged.
        let u = SymOp::rank_one(&[1.0, -2.0, 0.5]);
        let clamped = u.psd_clamp(1e-9).unwrap();
        assert_eq!(clamped, u);

        // Slightly negative eigenvalue inside tolerance gets zeroed.
        let v = SymOp::from_diag(&[1.0, -1e-10]);
        let cv = v.psd_clamp(1e-9).unwrap();
        assert!(cv.min_eigenvalue() >= -1e-15);
        assert!((cv.get(0, 0) - 1.0).abs() < 1e-14);
        assert!(cv.get(1, 1).abs() < 1e-14);

        // Far-negative eigenvalue is a hard error.
        let w = SymOp::from_diag(&[1.0, -0.5]);
        assert!(matches!(
            w.psd_clamp(1e-9),
            Err(LinalgError::ConeViolation { .. })
        ));
    }

    #[test]
    fn clamp_preserves_leading_block_support() {
        // A block-supported matrix with a tiny negative eigenvalue: after
        // clamping, entries outside the block must still be exactly zero.
        let mut u = SymOp::zeros(4);
        u.set(0, 0, 1.0);
        u.set(0, 1, 1.0);
        u.set(1, 1, 1.0 - 1e-11); // min eig of the 2x2 block is just below 0
        let clamped = u.psd_clamp(1e-9).unwrap();
        // Clamp followed by projection (the flow-integrator pipeline) must
        // leave an exactly block-supported, still-positive matrix.
        let on_block = clamped.project(2);
        assert!(on_block.supported_on(2));
        assert!(on_block.min_eigenvalue() >= -1e-12);
        assert!(on_block.sub(&u).norm() <= 1e-9);
    }

    #[test]
    fn from_rows_validates() {
        assert!(SymOp::from_rows(&[vec![1.0, 0.1], vec![0.2, 1.0]]).is_err());
        assert!(SymOp::from_rows(&[vec![1.0], vec![0.0]]).is_err());
        assert!(SymOp::from_rows(&[vec![f64::NAN]]).is_err());
        let ok = SymOp::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(ok.get(0, 1), 2.0);
    }

    proptest! {
        #[test]
        fn coords_round_trip(dim in 1usize..6, seed in 0u64..500) {
            let u = sym(dim, seed);
            let back = SymOp::from_coords(dim, &u.coords());
            for (i, j) in SymOp::coord_pairs(dim) {
                prop_assert!((u.get(i, j) - back.get(i, j)).abs() < 1e-15);
            }
        }

        #[test]
        fn coords_are_isometric(dim in 1usize..6, s1 in 0u64..200, s2 in 200u64..400) {
            let u = sym(dim, s1);
            let v = sym(dim, s2);
            let dot: f64 = u
                .coords()
                .iter()
                .zip(v.coords().iter())
                .map(|(a, b)| a * b)
                .sum();
            prop_assert!((dot - u.inner(&v)).abs() < 1e-10 * (1.0 + dot.abs()));
        }

        #[test]
        fn projection_is_idempotent_and_nested(
            dim in 1usize..6,
            seed in 0u64..200,
            d1 in 0usize..7,
            d2 in 0usize..7,
        ) {
            let u = sym(dim, seed);
            // Idempotent.
            prop_assert_eq!(u.project(d1).project(d1), u.project(d1));
            // Composition is projection to the smaller block.
            let lo = d1.min(d2);
            prop_assert_eq!(u.project(d1).project(d2), u.project(lo));
            // Pythagoras: |u|^2 = |Pu|^2 + |u - Pu|^2.
            let p = u.project(d1);
            let q = u.perp(d1);
            let lhs = u.inner(&u);
            let rhs = p.inner(&p) + q.inner(&q);
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
            // The two pieces are orthogonal.
            prop_assert!(p.inner(&q).abs() < 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn clamp_output_is_psd_and_close(dim in 1usize..5, seed in 0u64..100) {
            // Build a near-PSD matrix: PSD plus a tiny symmetric perturbation.
            let base = sym(dim, seed);
            let psd = {
                let m = base.to_dmatrix();
                SymOp::from_dmatrix(&(&m * m.transpose()))
            };
            let noise = sym(dim, seed + 1000).scale(1e-11);
            let perturbed = psd.add(&noise);
            let clamped = perturbed.psd_clamp(1e-9).unwrap();
            prop_assert!(clamped.min_eigenvalue() >= -1e-12);
            prop_assert!(clamped.sub(&perturbed).norm() <= 1e-9);
        }
    }
}
