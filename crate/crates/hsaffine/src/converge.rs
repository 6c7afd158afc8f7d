//! Convergence studies across truncation levels, and the infinite-variation
//! diagnostic that motivates truncating in the first place.
//!
//! [`sweep`] solves the projected Riccati system at a ladder of levels
//! against a reference level, records the observed sup-gaps next to the
//! a priori tail bounds, optionally cross-checks each level with Monte
//! Carlo, and fits an empirical decay exponent of observed error against
//! predicted rate. When the reference is the ambient dimension itself the
//! reported gaps are surrogate limit errors: the truth at the desk scale,
//! a stand-in for the infinite-dimensional limit.
//!
//! [`infinite_variation_diagnostic`] tracks the canonical example where the
//! total small-jump variation grows like `log D` with the dimension cut
//! while the compensated pairing stays summable — the reason the dynamics
//! only make sense against test operators, never in total variation.

use crate::linalg::{hs_inner, SymOp, WeightModel};
use crate::params::{project_params, AdmissibleParameters};
use crate::riccati::{
    error_bound, galerkin_gap, solve_riccati_opts, vnorm_rate, SolveOptions, SolverError,
};
use crate::simulate::{build_jump_system, mc_laplace, SimError};
use serde::Serialize;
use thiserror::Error;

/// Errors from convergence sweeps.
#[derive(Debug, Error)]
pub enum ConvergeError {
    /// Precondition failure on user input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A Riccati solve or bound evaluation failed.
    #[error(transparent)]
    Solver(#[from] SolverError),

    /// A Monte Carlo cross-check failed.
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Knobs for [`sweep`].
#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Riccati integration step.
    pub step: f64,
    /// Weight model for the weighted-norm rate column; omitted when `None`.
    pub weights: Option<WeightModel>,
    /// Paths per level for the Monte Carlo cross-check; zero disables it.
    pub mc_paths: usize,
    /// Master seed of the cross-check.
    pub mc_seed: u64,
    /// Cross-check evaluation times; empty means `{T/2, T}`.
    pub mc_times: Vec<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            step: 1e-3,
            weights: None,
            mc_paths: 0,
            mc_seed: 0,
            mc_times: Vec::new(),
        }
    }
}

/// One truncation level of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    /// Truncation level.
    pub level: usize,
    /// Observed sup-gap `sup_t (|phi_d - phi_ref| + |psi_d - psi_ref|)`
    /// against the reference level.
    pub galerkin_sup: f64,
    /// Combined step-doubling estimates of the level and reference solves;
    /// the numerical-error allowance of `galerkin_sup`.
    pub solver_estimate: f64,
    /// A priori tail bound `K C_{T,d}`.
    pub tail_bound: f64,
    /// Weighted-norm rate, when a weight model was supplied.
    pub vnorm_rate: Option<f64>,
    /// `|phi_d(T) - phi_ref(T)|`.
    pub phi_gap: f64,
    /// `|psi_d(T) - psi_ref(T)|` in Hilbert-Schmidt norm.
    pub psi_gap: f64,
    /// Laplace-transform gap at the horizon and initial state.
    pub laplace_gap: f64,
    /// Largest `|z|` of the Monte Carlo cross-check at this level, when run.
    pub mc_max_abs_z: Option<f64>,
    /// Whether `galerkin_sup <= tail_bound + 10 * solver_estimate`.
    pub bound_satisfied: bool,
}

/// Least-squares fit of `log(observed gap)` against `log(predicted rate)`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Slope: observed error scales like `rate^exponent`.
    pub exponent: f64,
    /// Intercept in log space.
    pub log_intercept: f64,
    /// Number of levels that entered the fit.
    pub n_used: usize,
}

/// Result of [`sweep`].
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    /// Horizon of all solves.
    pub horizon: f64,
    /// Riccati integration step.
    pub step: f64,
    /// Reference level the gaps are measured against.
    pub ref_level: usize,
    /// Whether the reference is the ambient dimension, making the gaps
    /// surrogate limit errors rather than gaps to the true limit.
    pub surrogate_reference: bool,
    /// Per-level records, in the requested level order.
    pub levels: Vec<LevelReport>,
    /// Decay fit over the usable levels, when at least two qualify.
    pub fit: Option<DecayFit>,
}

impl SweepResult {
    /// CSV rendering, one row per level. Optional columns render as empty
    /// cells when the corresponding check was not requested.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "level,galerkin_sup,solver_estimate,tail_bound,vnorm_rate,phi_gap,psi_gap,\
             laplace_gap,mc_max_abs_z,bound_satisfied\n",
        );
        for lr in &self.levels {
            let opt = |v: Option<f64>| v.map(crate::fmt::fmt_g17).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                lr.level,
                crate::fmt::fmt_g17(lr.galerkin_sup),
                crate::fmt::fmt_g17(lr.solver_estimate),
                crate::fmt::fmt_g17(lr.tail_bound),
                opt(lr.vnorm_rate),
                crate::fmt::fmt_g17(lr.phi_gap),
                crate::fmt::fmt_g17(lr.psi_gap),
                crate::fmt::fmt_g17(lr.laplace_gap),
                opt(lr.mc_max_abs_z),
                u8::from(lr.bound_satisfied),
            ));
        }
        out
    }

    /// JSON rendering with full-precision floats.
    pub fn to_json(&self) -> String {
        crate::fmt::to_json(self)
    }
}

/// Observed gaps cannot be trusted below this; solves at different levels
/// agree only up to accumulated roundoff.
const FIT_FLOOR: f64 = 100.0 * f64::EPSILON;

fn fit_log_log(pairs: &[(f64, f64)]) -> Option<DecayFit> {
    let usable: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(rate, gap)| {
            *rate > 0.0 && rate.is_finite() && *gap > FIT_FLOOR && gap.is_finite()
        })
        .map(|&(rate, gap)| (rate.ln(), gap.ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let var_x: f64 = usable.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if var_x <= 0.0 {
        return None;
    }
    let cov: f64 = usable
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let exponent = cov / var_x;
    Some(DecayFit {
        exponent,
        log_intercept: mean_y - exponent * mean_x,
        n_used: usable.len(),
    })
}

/// Solves the Riccati system at each requested level against a reference
/// level and reports observed gaps next to a priori bounds.
///
/// Per level `d` the report carries the sup-gap over the time grid, the
/// step-doubling allowance, the tail bound `K C_{T,d}`, the transform gap
/// at `(T, x0)` (which the triangle inequality caps by
/// `phi_gap + |x0| psi_gap`), and optionally a weighted-norm rate and a
/// Monte Carlo cross-check. Everything is deterministic for fixed inputs,
/// including the cross-check, which uses keyed streams.
pub fn sweep(
    p: &AdmissibleParameters,
    u: &SymOp,
    x0: &SymOp,
    t_end: f64,
    levels: &[usize],
    d_ref: usize,
    opts: &SweepOptions,
) -> Result<SweepResult, ConvergeError> {
    if levels.is_empty() {
        return Err(ConvergeError::InvalidInput("no levels requested".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConvergeError::InvalidInput(
            "levels must be strictly increasing".into(),
        ));
    }
    if !(1 <= levels[0] && *levels.last().unwrap() <= d_ref && d_ref <= p.dim) {
        return Err(ConvergeError::InvalidInput(format!(
            "levels must satisfy 1 <= d <= {} <= dim = {}",
            d_ref, p.dim
        )));
    }
    if u.dim() != p.dim || x0.dim() != p.dim {
        return Err(ConvergeError::InvalidInput(
            "test operator and initial state must match the parameter dimension".into(),
        ));
    }
    if let Some(w) = &opts.weights {
        if w.dim() != p.dim {
            return Err(ConvergeError::InvalidInput(
                "weight model dimension does not match the parameters".into(),
            ));
        }
    }

    let est_opts = SolveOptions {
        error_estimate: true,
        ..SolveOptions::default()
    };
    let pp_ref = project_params(p, d_ref);
    let sol_ref = solve_riccati_opts(&pp_ref, u, t_end, opts.step, &est_opts)?;
    let mc_times: Vec<f64> = if opts.mc_times.is_empty() {
        vec![0.5 * t_end, t_end]
    } else {
        opts.mc_times.clone()
    };

    let mut reports = Vec::with_capacity(levels.len());
    for &d in levels {
        let gap = galerkin_gap(p, u, t_end, d, d_ref, opts.step)?;
        let pp_d = project_params(p, d);
        let sol_d = solve_riccati_opts(&pp_d, u, t_end, opts.step, &est_opts)?;
        let solver_estimate =
            sol_d.err_est.unwrap_or(0.0) + sol_ref.err_est.unwrap_or(0.0);
        let tail_bound = error_bound(p, u, t_end, d, u.norm().max(1e-12))?.bound;
        let rate = match &opts.weights {
            Some(w) => Some(vnorm_rate(p, t_end, d, w)?),
            None => None,
        };

        let phi_gap = (sol_d.final_phi() - sol_ref.final_phi()).abs();
        let psi_gap = sol_d.final_psi().sub(sol_ref.final_psi()).norm();
        let last_d = sol_d.times.len() - 1;
        let last_ref = sol_ref.times.len() - 1;
        let laplace_gap =
            (sol_d.laplace_at(last_d, x0) - sol_ref.laplace_at(last_ref, x0)).abs();

        let mc_max_abs_z = if opts.mc_paths > 0 {
            let js = build_jump_system(&pp_d);
            let report = mc_laplace(&js, x0, u, &mc_times, opts.mc_paths, opts.mc_seed)?;
            Some(report.max_abs_z())
        } else {
            None
        };

        reports.push(LevelReport {
            level: d,
            galerkin_sup: gap.sup,
            solver_estimate,
            tail_bound,
            vnorm_rate: rate,
            phi_gap,
            psi_gap,
            laplace_gap,
            mc_max_abs_z,
            bound_satisfied: gap.sup <= tail_bound + 10.0 * solver_estimate,
        });
    }

    let pairs: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r.tail_bound, r.galerkin_sup))
        .collect();
    Ok(SweepResult {
        horizon: t_end,
        step: opts.step,
        ref_level: d_ref,
        surrogate_reference: d_ref == p.dim,
        levels: reports,
        fit: fit_log_log(&pairs),
    })
}

/// One dimension cut of the infinite-variation diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct VariationEntry {
    /// Dimension cut `D`.
    pub dim_cut: usize,
    /// Expected small-jump variation `V_D = <x, g> sum_{n <= D} 1/n`.
    pub variation: f64,
    /// `V_D / log D` — tends to `<x, g>` as the cut grows.
    pub variation_over_log: f64,
    /// Compensated pairing `S_D = <x, g> sum_{n <= D} u_nn / n`.
    pub pairing: f64,
    /// `|S_{2D} - S_D|` — vanishing tail of the convergent pairing.
    pub pairing_tail: f64,
}

/// Result of [`infinite_variation_diagnostic`].
#[derive(Debug, Clone, Serialize)]
pub struct VariationDiagnostic {
    /// The scalar `<x, g>` both series scale with.
    pub x_g: f64,
    /// One entry per requested dimension cut.
    pub entries: Vec<VariationEntry>,
}

/// Contrasts the divergent small-jump variation with its convergent
/// compensated pairing for the canonical kernel with jump directions
/// `e_n (x) e_n / n` at rate `<x, g> n^2 / n^2`-style weights: the expected
/// variation up to cut `D` is `<x, g>` times the harmonic sum (log
/// divergence), while pairing against a trace-class test operator with
/// diagonal `u_nn` stays summable.
///
/// The test operator enters only through its diagonal, supplied as a rule
/// `n -> u_nn` (1-based) so cuts of size `10^5` never materialize an
/// operator.
pub fn infinite_variation_diagnostic(
    d_list: &[usize],
    x: &SymOp,
    g: &SymOp,
    u_diag: impl Fn(usize) -> f64,
) -> Result<VariationDiagnostic, ConvergeError> {
    if d_list.is_empty() {
        return Err(ConvergeError::InvalidInput("no dimension cuts".into()));
    }
    if d_list.windows(2).any(|w| w[1] <= w[0]) || d_list[0] == 0 {
        return Err(ConvergeError::InvalidInput(
            "dimension cuts must be positive and strictly increasing".into(),
        ));
    }
    if x.dim() != g.dim() {
        return Err(ConvergeError::InvalidInput(
            "state and kernel mass must share a dimension".into(),
        ));
    }
    let x_g = hs_inner(x, g);
    let max_n = 2 * d_list.last().unwrap();

    // Single pass accumulating both prefix sums, capturing them at every
    // requested cut and at its double (for the tail).
    let mut want: Vec<usize> = d_list
        .iter()
        .flat_map(|&d| [d, 2 * d])
        .collect::<Vec<_>>();
    want.sort_unstable();
    want.dedup();
    let mut h_acc = 0.0;
    let mut s_acc = 0.0;
    let mut captured_h = std::collections::HashMap::new();
    let mut captured_s = std::collections::HashMap::new();
    let mut next = 0;
    for n in 1..=max_n {
        let inv = 1.0 / n as f64;
        h_acc += inv;
        s_acc += u_diag(n) * inv;
        if next < want.len() && want[next] == n {
            captured_h.insert(n, h_acc);
            captured_s.insert(n, s_acc);
            next += 1;
        }
    }

    let entries = d_list
        .iter()
        .map(|&d| {
            let variation = x_g * captured_h[&d];
            let s_d = x_g * captured_s[&d];
            let s_2d = x_g * captured_s[&(2 * d)];
            VariationEntry {
                dim_cut: d,
                variation,
                variation_over_log: variation / (d as f64).ln(),
                pairing: s_d,
                pairing_tail: (s_2d - s_d).abs(),
            }
        })
        .collect();
    Ok(VariationDiagnostic { x_g, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LinearDrift;
    use crate::params::{
        random_admissible, AtomicMeasure, MAtom, MuAtom, OperatorValuedMeasure,
    };

    /// Instance whose jump activity lives entirely on the leading
    /// `block x block` corner of a `dim`-dimensional space.
    fn block_instance(dim: usize, block: usize) -> AdmissibleParameters {
        let lambda = 0.5;
        let mut xi = SymOp::zeros(dim);
        for i in 0..block {
            xi.set(i, i, lambda / block as f64);
        }
        let mut g = SymOp::zeros(dim);
        for i in 0..block {
            g.set(i, i, 0.3);
            if i + 1 < block {
                g.set(i, i + 1, 0.1);
            }
        }
        let mut b_lin = LinearDrift::zero(dim);
        b_lin.add_coupling(&g.scale(1.0 / xi.inner(&xi)), &xi);
        let m = AtomicMeasure::new(dim, vec![MAtom { xi: xi.clone(), w: 0.2 }]).unwrap();
        let mu = OperatorValuedMeasure::new(dim, vec![MuAtom { xi: xi.clone(), g }]).unwrap();
        let b = xi.scale(0.2);
        AdmissibleParameters::new(dim, b, b_lin, m, mu).unwrap()
    }

    #[test]
    fn block_instance_sweep_collapses_beyond_the_block() {
        let p = block_instance(4, 2);
        // The test operator lives on the block too, otherwise its own tail
        // shows up as a (correctly bounded) gap at every level.
        let u = SymOp::from_diag(&[0.5, 0.5, 0.0, 0.0]);
        let x0 = SymOp::identity(4);
        let opts = SweepOptions {
            step: 2e-3,
            ..SweepOptions::default()
        };
        let result = sweep(&p, &u, &x0, 1.0, &[1, 2, 3, 4], 4, &opts).unwrap();
        assert!(result.surrogate_reference);
        assert_eq!(result.levels.len(), 4);
        for lr in &result.levels {
            assert!(lr.bound_satisfied, "level {} violates its bound", lr.level);
            assert!(
                lr.laplace_gap <= lr.phi_gap + x0.norm() * lr.psi_gap + 1e-12,
                "transform gap exceeds its triangle bound at level {}",
                lr.level
            );
        }
        // The block carries everything: cutting inside it hurts, beyond it
        // nothing changes.
        assert!(result.levels[0].galerkin_sup > 1e-6);
        for lr in &result.levels[1..] {
            assert!(
                lr.galerkin_sup <= 1e-12,
                "level {} should agree with the reference, gap {}",
                lr.level,
                lr.galerkin_sup
            );
        }
        // Tail bounds are nonincreasing in the level.
        for w in result.levels.windows(2) {
            assert!(
                w[1].tail_bound <= w[0].tail_bound + 1e-10,
                "tail bound increased between levels {} and {}",
                w[0].level,
                w[1].level
            );
        }
        assert_eq!(result.levels[3].tail_bound, 0.0);
    }

    #[test]
    fn random_instances_respect_their_bounds() {
        for seed in 0..5 {
            let p = random_admissible(5, seed);
            let u = SymOp::identity(5).scale(0.4);
            let x0 = SymOp::identity(5).scale(0.8);
            let opts = SweepOptions {
                step: 2e-3,
                ..SweepOptions::default()
            };
            let result = sweep(&p, &u, &x0, 1.0, &[1, 2, 3, 4, 5], 5, &opts).unwrap();
            for lr in &result.levels {
                assert!(
                    lr.bound_satisfied,
                    "seed {seed} level {} gap {} exceeds bound {} + allowance {}",
                    lr.level, lr.galerkin_sup, lr.tail_bound, lr.solver_estimate
                );
                assert!(
                    lr.laplace_gap <= lr.phi_gap + x0.norm() * lr.psi_gap + 1e-12,
                    "seed {seed}: transform gap out of bounds"
                );
            }
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let p = block_instance(3, 2);
        let u = SymOp::identity(3).scale(0.5);
        let x0 = SymOp::identity(3);
        let opts = SweepOptions {
            step: 2e-3,
            mc_paths: 50,
            mc_seed: 9,
            ..SweepOptions::default()
        };
        let a = sweep(&p, &u, &x0, 1.0, &[1, 2, 3], 3, &opts).unwrap();
        let b = sweep(&p, &u, &x0, 1.0, &[1, 2, 3], 3, &opts).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
        for lr in &a.levels {
            let z = lr.mc_max_abs_z.expect("cross-check requested");
            assert!(z.is_finite(), "level {} z-score {z}", lr.level);
        }
    }

    #[test]
    fn weighted_rates_appear_on_request() {
        let p = block_instance(3, 2);
        let u = SymOp::identity(3).scale(0.5);
        let x0 = SymOp::identity(3);
        let opts = SweepOptions {
            step: 2e-3,
            weights: Some(WeightModel::standard(3)),
            ..SweepOptions::default()
        };
        let result = sweep(&p, &u, &x0, 0.5, &[1, 2, 3], 3, &opts).unwrap();
        for lr in &result.levels {
            let rate = lr.vnorm_rate.expect("weighted rate requested");
            assert!(rate >= 0.0);
        }
        assert_eq!(result.levels[2].vnorm_rate, Some(0.0));
    }

    #[test]
    fn decay_fit_recovers_a_power_law() {
        let pairs: Vec<(f64, f64)> = (1..=6)
            .map(|k| {
                let rate = 0.5f64.powi(k);
                (rate, 3.0 * rate.powf(1.25))
            })
            .collect();
        let fit = fit_log_log(&pairs).unwrap();
        assert_eq!(fit.n_used, 6);
        assert!((fit.exponent - 1.25).abs() < 1e-12);
        assert!((fit.log_intercept - 3.0f64.ln()).abs() < 1e-12);
        // Degenerate inputs give no fit.
        assert!(fit_log_log(&[(1.0, 1.0)]).is_none());
        assert!(fit_log_log(&[(1.0, 1e-20), (0.5, 1e-18)]).is_none());
    }

    #[test]
    fn harmonic_growth_matches_the_asymptotic_law() {
        // Euler-Mascheroni oracle: H_D = ln D + gamma + 1/(2D) + O(D^-2).
        const GAMMA: f64 = 0.577_215_664_901_532_9;
        let x = SymOp::from_diag(&[2.0, 1.0]);
        let g = SymOp::from_diag(&[0.5, 1.0]);
        let x_g = hs_inner(&x, &g);
        let cuts = [1_000usize, 10_000, 100_000];
        let diag =
            infinite_variation_diagnostic(&cuts, &x, &g, |n| 1.0 / n as f64).unwrap();
        assert!((diag.x_g - x_g).abs() < 1e-15);
        for entry in &diag.entries {
            let d = entry.dim_cut as f64;
            let oracle = x_g * (d.ln() + GAMMA + 0.5 / d) / d.ln();
            assert!(
                (entry.variation_over_log - oracle).abs() <= 1e-6 * oracle.abs(),
                "cut {}: {} vs oracle {}",
                entry.dim_cut,
                entry.variation_over_log,
                oracle
            );
        }
        // The normalized ratio creeps toward 1 from above.
        let ratios: Vec<f64> = diag
            .entries
            .iter()
            .map(|e| e.variation_over_log / x_g)
            .collect();
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2]);
        assert!(ratios[2] > 1.0 && ratios[2] < 1.06);
    }

    #[test]
    fn pairing_tail_is_squeezed_by_integral_bounds() {
        let x = SymOp::identity(2);
        let g = SymOp::from_diag(&[1.0, 0.0]);
        let x_g = hs_inner(&x, &g);
        let diag = infinite_variation_diagnostic(&[100, 10_000], &x, &g, |n| 1.0 / n as f64)
            .unwrap();
        for entry in &diag.entries {
            let d = entry.dim_cut as f64;
            // sum_{D < n <= 2D} n^-2 lies between the integral bounds
            // 1/(D+1) - 1/(2D+1) and 1/(2D).
            let lower = x_g * (1.0 / (d + 1.0) - 1.0 / (2.0 * d + 1.0));
            let upper = x_g * 0.5 / d;
            assert!(
                entry.pairing_tail >= lower && entry.pairing_tail <= upper,
                "cut {}: tail {} outside [{lower}, {upper}]",
                entry.dim_cut,
                entry.pairing_tail
            );
        }
        // Pairing itself is bounded (Basel-type sum), unlike the variation.
        assert!(diag.entries[1].pairing <= x_g * std::f64::consts::PI.powi(2) / 6.0);
        assert!(diag.entries[1].variation > diag.entries[1].pairing * 5.0);
    }

    #[test]
    fn invalid_sweep_inputs_are_rejected() {
        let p = block_instance(3, 2);
        let u = SymOp::identity(3);
        let x0 = SymOp::identity(3);
        let opts = SweepOptions::default();
        assert!(matches!(
            sweep(&p, &u, &x0, 1.0, &[], 3, &opts),
            Err(ConvergeError::InvalidInput(_))
        ));
        assert!(matches!(
            sweep(&p, &u, &x0, 1.0, &[2, 1], 3, &opts),
            Err(ConvergeError::InvalidInput(_))
        ));
        assert!(matches!(
            sweep(&p, &u, &x0, 1.0, &[1, 4], 4, &opts),
            Err(ConvergeError::InvalidInput(_))
        ));
        assert!(matches!(
            sweep(&p, &SymOp::identity(4), &x0, 1.0, &[1], 3, &opts),
            Err(ConvergeError::InvalidInput(_))
        ));
        assert!(matches!(
            infinite_variation_diagnostic(&[], &u, &x0, |_| 1.0),
            Err(ConvergeError::InvalidInput(_))
        ));
        assert!(matches!(
            infinite_variation_diagnostic(&[10, 10], &u, &x0, |_| 1.0),
            Err(ConvergeError::InvalidInput(_))
        ));
    }
}
