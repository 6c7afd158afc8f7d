//! Linear drift flows `v' = B^*(v)` and a matrix-exponential oracle.

use super::drift::LinearDrift;
use super::symop::SymOp;

/// One classical RK4 step of `v' = B^*(v)`.
fn rk4_step(b: &LinearDrift, h: f64, v: &SymOp) -> SymOp {
    let k1 = b.apply_adjoint(v);
    let mut v2 = v.clone();
    v2.axpy(0.5 * h, &k1);
    let k2 = b.apply_adjoint(&v2);
    let mut v3 = v.clone();
    v3.axpy(0.5 * h, &k2);
    let k3 = b.apply_adjoint(&v3);
    let mut v4 = v.clone();
    v4.axpy(h, &k3);
    let k4 = b.apply_adjoint(&v4);
    let mut out = v.clone();
    out.axpy(h / 6.0, &k1);
    out.axpy(h / 3.0, &k2);
    out.axpy(h / 3.0, &k3);
    out.axpy(h / 6.0, &k4);
    out
}

/// Evolves `u` along the adjoint drift flow `v' = B^*(v)`, `v(0) = u`, up to
/// time `t` with `steps` fixed RK4 steps.
///
/// Negative `t` runs the flow backwards; `t = 0` returns `u` unchanged.
///
/// # Panics
///
/// Panics if `steps == 0` or the dimensions differ.
pub fn drift_flow(b: &LinearDrift, t: f64, u: &SymOp, steps: usize) -> SymOp {
    assert!(steps >= 1, "drift_flow needs at least one step");
    assert_eq!(b.dim(), u.dim(), "drift_flow across dimensions");
    if t == 0.0 {
        return u.clone();
    }
    let h = t / steps as f64;
    let mut v = u.clone();
    for _ in 0..steps {
        v = rk4_step(b, h, &v);
    }
    v
}

/// Evolves `u` along `v' = B^*(v)` and records the state at the `n_grid + 1`
/// uniform times `k * t / n_grid`, `k = 0..=n_grid`, taking `substeps` RK4
/// steps inside each grid interval.
///
/// # Panics
///
/// Panics if `n_grid == 0` or `substeps == 0`.
pub fn drift_flow_grid(
    b: &LinearDrift,
    t: f64,
    u: &SymOp,
    n_grid: usize,
    substeps: usize,
) -> Vec<SymOp> {
    assert!(n_grid >= 1 && substeps >= 1, "empty flow grid");
    let h = t / (n_grid * substeps) as f64;
    let mut out = Vec::with_capacity(n_grid + 1);
    let mut v = u.clone();
    out.push(v.clone());
    for _ in 0..n_grid {
        for _ in 0..substeps {
            v = rk4_step(b, h, &v);
        }
        out.push(v.clone());
    }
    out
}

/// Matrix exponential `exp(m)` of a dense row-major `n x n` matrix by
/// scaling and squaring with a Taylor core.
///
/// The input is scaled by `2^-s` until its max-row-sum norm is at most 1/4,
/// the exponential of the scaled matrix is summed to machine precision
/// (the series converges geometrically at this norm), and the result is
/// squared `s` times. Suitable as a reference oracle for drift flows at the
/// moderate norms used here.
///
/// # Panics
///
/// Panics if `m` is not `n * n` long.
pub fn expm(n: usize, m: &[f64]) -> Vec<f64> {
    assert_eq!(m.len(), n * n, "expm: matrix shape mismatch");
    if n == 0 {
        return Vec::new();
    }

    // Max row sum (infinity norm) decides the scaling.
    let inf_norm = (0..n)
        .map(|i| m[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let mut s = 0_u32;
    let mut scale = 1.0;
    while inf_norm * scale > 0.25 {
        s += 1;
        scale *= 0.5;
    }
    let a: Vec<f64> = m.iter().map(|v| v * scale).collect();

    // Taylor series: sum_k a^k / k!, truncated when terms vanish numerically.
    let mut result = vec![0.0; n * n];
    for i in 0..n {
        result[i * n + i] = 1.0;
    }
    let mut term = result.clone();
    for k in 1..=40 {
        term = mat_mul(n, &term, &a);
        let inv_k = 1.0 / k as f64;
        for v in term.iter_mut() {
            *v *= inv_k;
        }
        let mut term_norm = 0.0_f64;
        let mut result_norm = 0.0_f64;
        for (r, t) in result.iter_mut().zip(term.iter()) {
            *r += t;
            term_norm = term_norm.max(t.abs());
            result_norm = result_norm.max(r.abs());
        }
        if term_norm <= 1e-20 * result_norm.max(1.0) {
            break;
        }
    }

    for _ in 0..s {
        result = mat_mul(n, &result, &result);
    }
    result
}

fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow.iter()) {
                *o += aik * bv;
            }
        }
    }
    out
}

/// Evaluates the adjoint drift flow through the matrix exponential of the
/// coordinate superoperator: `v(t) = exp(t M^T) coords(u)` where `M` is the
/// dense coordinate matrix of `B`.
///
/// This is the closed-form oracle against which [`drift_flow`] is validated;
/// it densifies structured drifts, so cost grows quickly with dimension.
pub fn drift_flow_expm(b: &LinearDrift, t: f64, u: &SymOp) -> SymOp {
    assert_eq!(b.dim(), u.dim(), "drift_flow_expm across dimensions");
    let dim = b.dim();
    let n = SymOp::n_coords(dim);
    let m = b.dense_matrix();
    // Transpose, scale by t.
    let mut mt = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            mt[c * n + r] = t * m[r * n + c];
        }
    }
    let e = expm(n, &mt);
    let x = u.coords();
    let mut y = vec![0.0; n];
    for (yr, row) in y.iter_mut().zip(e.chunks_exact(n)) {
        *yr = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    }
    SymOp::from_coords(dim, &y)
}
