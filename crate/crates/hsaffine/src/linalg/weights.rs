//! Weighted norms grading decay across basis directions.

use super::symop::SymOp;
use super::LinalgError;

/// A nondecreasing weight sequence `a_1 <= a_2 <= ...` with `a_1 >= 1`,
/// defining the weighted norm
/// `|u|_a = (sum_{i,j} (a_i^2 + a_j^2) u_ij^2)^(1/2)`
/// over all matrix entries (both triangles counted).
///
/// Operators with finite weighted norm have entries that decay along the
/// basis; the payoff is a computable bound on how much of such an operator
/// survives the complement of a leading block, see
/// [`WeightModel::perp_vnorm_bound`].
#[derive(Debug, Clone)]
pub struct WeightModel {
    weights: Vec<f64>,
}

impl WeightModel {
    /// Validates and wraps a weight sequence: nonempty, finite, `a_1 >= 1`,
    /// nondecreasing.
    pub fn new(weights: Vec<f64>) -> Result<Self, LinalgError> {
        if weights.is_empty() {
            return Err(LinalgError::InvalidWeights("empty sequence".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(LinalgError::InvalidWeights("non-finite weight".into()));
        }
        if weights[0] < 1.0 {
            return Err(LinalgError::InvalidWeights(format!(
                "first weight {} is below 1",
                weights[0]
            )));
        }
        if weights.windows(2).any(|w| w[1] < w[0]) {
            return Err(LinalgError::InvalidWeights(
                "weights must be nondecreasing".into(),
            ));
        }
        Ok(WeightModel { weights })
    }

    /// The default polynomial weights `a_n = n` for `n = 1..=dim`.
    pub fn standard(dim: usize) -> Self {
        WeightModel {
            weights: (1..=dim).map(|n| n as f64).collect(),
        }
    }

    /// Number of weighted directions.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Weight `a_n` for the 1-based direction index `n`.
    ///
    /// # Panics
    ///
    /// Panics if `n` is zero or beyond the sequence.
    pub fn weight(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.weights.len(), "weight index out of range");
        self.weights[n - 1]
    }

    /// Weighted norm of a symmetric matrix.
    ///
    /// # Panics
    ///
    /// Panics if the matrix dimension differs from the weight count.
    pub fn vnorm(&self, u: &SymOp) -> f64 {
        assert_eq!(
            u.dim(),
            self.weights.len(),
            "weighted norm requires matching dimensions"
        );
        let mut sum = 0.0;
        for (i, j) in SymOp::coord_pairs(u.dim()) {
            let wij = self.weights[i] * self.weights[i] + self.weights[j] * self.weights[j];
            let v = u.get(i, j);
            // Off-diagonal entries appear at (i, j) and (j, i).
            let mult = if i == j { 1.0 } else { 2.0 };
            sum += mult * wij * v * v;
        }
        sum.sqrt()
    }

    /// Bound on the plain norm of the block complement in terms of the
    /// weighted norm: `|u - P_d u| <= perp_vnorm_bound(d) * |u|_a`.
    ///
    /// Every entry outside the leading `d`-block has `max(i, j) > d`
    /// (1-based), hence carries weight at least `a_{d+1}^2`, giving the bound
    /// `1 / a_{d+1}`. For `d >= dim` the complement is empty and the bound is
    /// zero.
    pub fn perp_vnorm_bound(&self, d: usize) -> f64 {
        if d >= self.weights.len() {
            0.0
        } else {
            1.0 / self.weights[d]
        }
    }

    /// Constant of the embedding from the weighted norm into the plain norm
    /// applied entrywise: `1 / (sqrt(2) a_1)`.
    pub fn embedding_constant(&self) -> f64 {
        1.0 / (std::f64::consts::SQRT_2 * self.weights[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vnorm_closed_forms() {
        let w = WeightModel::standard(3);
        // u = e1 (x) e1: single entry u_11 = 1 with weight a_1^2 + a_1^2 = 2.
        let u = SymOp::basis(3, 0, 0);
        assert!((w.vnorm(&u) - 2.0_f64.sqrt()).abs() < 1e-15);

        // Off-diagonal basis element (1,2)/sqrt(2): entries u_12 = u_21 =
        // 1/sqrt(2), each weighted by a_1^2 + a_2^2 = 5, total 2 * 5 * 1/2.
        let v = SymOp::basis(3, 0, 1);
        assert!((w.vnorm(&v) - 5.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn vnorm_dominates_plain_norm() {
        let w = WeightModel::standard(4);
        let mut u = SymOp::zeros(4);
        for (k, (i, j)) in SymOp::coord_pairs(4).enumerate() {
            u.set(i, j, (k as f64 + 1.0) * if (i + j) % 2 == 0 { 1.0 } else { -0.5 });
        }
        // a_n >= 1 makes every weight pair at least 2, so
        // |u|_a >= sqrt(2) |u| >= |u|.
        assert!(w.vnorm(&u) >= 2.0_f64.sqrt() * u.norm() - 1e-12);
    }

    #[test]
    fn perp_bound_controls_tail() {
        let w = WeightModel::standard(5);
        let mut u = SymOp::zeros(5);
        // Mass at (0,0), (2,3), (4,4) with assorted values.
        u.set(0, 0, 1.0);
        u.set(2, 3, -0.4);
        u.set(4, 4, 0.2);
        for d in 0..=5 {
            let tail = u.perp(d).norm();
            assert!(
                tail <= w.perp_vnorm_bound(d) * w.vnorm(&u) + 1e-12,
                "tail bound failed at d = {d}"
            );
        }
        assert_eq!(w.perp_vnorm_bound(5), 0.0);
        assert_eq!(w.perp_vnorm_bound(7), 0.0);
        assert!((w.perp_vnorm_bound(2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_sequences() {
        assert!(WeightModel::new(vec![]).is_err());
        assert!(WeightModel::new(vec![0.5, 2.0]).is_err());
        assert!(WeightModel::new(vec![2.0, 1.5]).is_err());
        assert!(WeightModel::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(WeightModel::new(vec![1.0, 1.0, 4.0]).is_ok());
    }

    #[test]
    fn embedding_constant_value() {
        let w = WeightModel::new(vec![2.0, 3.0]).unwrap();
        assert!((w.embedding_constant() - 1.0 / (2.0 * 2.0_f64.sqrt())).abs() < 1e-15);
    }
}
