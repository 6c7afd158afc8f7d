//! Exact pathwise simulation of the rank-`d` jump process and Monte Carlo
//! verification of the affine transform formula.
//!
//! At a fixed truncation level the process has finitely many jump directions
//! with affine intensities, so paths decompose into deterministic drift
//! segments punctuated by jumps:
//!
//! ```text
//! dX_t = drift(X_t) dt + jumps,
//! drift(x) = b_d + B_d(x) - sum_{|zeta_k| <= 1} zeta_k (w_k + <x, S_k>),
//! ```
//!
//! where atom `k` fires at rate `w_k + <x, S_k>` and adds `zeta_k` to the
//! state. Small jump directions are subtracted from the drift because the
//! characteristic drift `b_d + B_d(x)` already carries their compensator.
//!
//! Jump times are sampled by thinning: over a short window the affine
//! intensity is bounded by twice its maximum at the window endpoints
//! (endpoint values come from the drift flow), exponential candidates at the
//! bound rate are accepted with probability `intensity / bound`, and if the
//! actual intensity ever exceeds the bound the window is halved and
//! restarted. The only inexactness is the RK4 error of the drift flow.
//!
//! Every random quantity is drawn from a stream keyed by
//! `(master seed, path index, window counter)`, so results are bitwise
//! reproducible regardless of how paths are scheduled across threads.

mod diagnostics;

pub use diagnostics::{
    bracket_check, martingale_residual, moment_bound_check, BracketReport, MartingaleDiagnostic,
    MomentBoundInputs, MomentBoundReport, TestFunction,
};

use crate::linalg::{hs_inner, LinalgError, SymOp};
use crate::params::ProjectedParameters;
use crate::riccati::{solve_riccati_opts, SolveOptions, SolverError};
use crate::rng::Stream;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Cone tolerance applied after every drift integration step.
const CLAMP_TOL: f64 = 1e-9;

/// Window lengths below this trigger [`SimError::WindowUnderflow`].
const WINDOW_FLOOR: f64 = 1e-12;

/// Errors from path simulation and Monte Carlo estimation.
#[derive(Debug, Error)]
pub enum SimError {
    /// Precondition failure on user input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The state left the positive cone by more than the clamp tolerance.
    #[error("cone exit at t = {t:.6e}: {source}")]
    ConeExit {
        /// Time of the offending step.
        t: f64,
        /// Underlying clamp failure.
        source: LinalgError,
    },

    /// The state stopped being finite.
    #[error("non-finite state at t = {t:.6e}")]
    NonFiniteState { t: f64 },

    /// Thinning windows collapsed below the representable floor — the
    /// intensity grows too violently for the configured lookahead.
    #[error("thinning window underflow at t = {t:.6e} (lookahead {lookahead:.3e})")]
    WindowUnderflow { t: f64, lookahead: f64 },

    /// A Riccati reference solve failed.
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One jump direction of the finite-activity system.
#[derive(Debug, Clone)]
pub struct JumpAtom {
    /// Jump increment added to the state when the atom fires.
    pub zeta: SymOp,
    /// Constant part of the firing intensity.
    pub const_rate: f64,
    /// State-dependent intensity matrix: the atom fires at
    /// `const_rate + <x, state_matrix>`.
    pub state_matrix: SymOp,
    /// Whether the direction is compensated in the drift (`|zeta| <= 1`).
    pub small: bool,
}

/// The pathwise description of the level-`d` process: an affine drift field
/// plus finitely many jump atoms with affine intensities.
#[derive(Debug, Clone)]
pub struct JumpSystem {
    /// Truncation level.
    pub level: usize,
    /// Ambient dimension.
    pub dim: usize,
    /// Jump directions with their intensity data.
    pub atoms: Vec<JumpAtom>,
    /// `b_d` minus the constant part of the small-jump compensation.
    drift_const: SymOp,
    /// Projected parameters the system was built from, kept for Riccati
    /// reference solves.
    pp: ProjectedParameters,
}

impl JumpSystem {
    /// The projected parameters backing this system.
    pub fn params(&self) -> &ProjectedParameters {
        &self.pp
    }

    /// Pathwise drift
    /// `b_d + B_d(x) - sum over small atoms of zeta_k (w_k + <x, S_k>)`.
    pub fn drift(&self, x: &SymOp) -> SymOp {
        let mut out = self.drift_const.clone();
        out = out.add(&self.pp.b_lin_d.apply(x));
        for atom in &self.atoms {
            if atom.small {
                let r = hs_inner(x, &atom.state_matrix);
                if r != 0.0 {
                    out.axpy(-r, &atom.zeta);
                }
            }
        }
        out
    }

    /// Total jump intensity `Lambda(x) = sum_k (w_k + <x, S_k>)`; affine in
    /// `x` and nonnegative on the cone up to roundoff.
    pub fn intensity(&self, x: &SymOp) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.const_rate + hs_inner(x, &a.state_matrix))
            .sum()
    }

    /// Selects the firing atom given a uniform draw, by cumulative scan of
    /// the individual rates at the current state.
    fn pick_atom(&self, x: &SymOp, total: f64, unif: f64) -> usize {
        let thresh = unif * total;
        let mut acc = 0.0;
        for (k, atom) in self.atoms.iter().enumerate() {
            acc += atom.const_rate + hs_inner(x, &atom.state_matrix);
            if thresh <= acc {
                return k;
            }
        }
        self.atoms.len() - 1
    }
}

/// Assembles the pathwise jump system of a projected parameter set.
///
/// Constant-rate atoms come from the projected jump measure, state-dependent
/// ones from the kernel atoms (rate `<x, P_d G_k / |xi_k|^2>`). The drift
/// subtracts the compensator of every small direction, so that
/// `drift(x) + sum over small atoms of zeta (w + <x, S>)` recovers the
/// characteristic drift `b_d + B_d(x)`.
pub fn build_jump_system(pp: &ProjectedParameters) -> JumpSystem {
    let dim = pp.dim;
    let mut atoms = Vec::with_capacity(pp.m_d.atoms.len() + pp.kernel_atoms.len());
    for atom in &pp.m_d.atoms {
        atoms.push(JumpAtom {
            zeta: atom.xi.clone(),
            const_rate: atom.w,
            state_matrix: SymOp::zeros(dim),
            small: atom.xi.norm() <= 1.0,
        });
    }
    for atom in &pp.kernel_atoms {
        atoms.push(JumpAtom {
            zeta: atom.zeta.clone(),
            const_rate: 0.0,
            state_matrix: atom.g_scaled.clone(),
            small: atom.zeta.norm() <= 1.0,
        });
    }
    let mut drift_const = pp.b_d.clone();
    for atom in &atoms {
        if atom.small && atom.const_rate != 0.0 {
            drift_const.axpy(-atom.const_rate, &atom.zeta);
        }
    }
    JumpSystem {
        level: pp.level,
        dim,
        atoms,
        drift_const,
        pp: pp.clone(),
    }
}

/// Default thinning window: short relative to the horizon and to the mean
/// waiting time at the initial state.
pub fn default_lookahead(js: &JumpSystem, x0: &SymOp, t_end: f64) -> f64 {
    (0.1 * t_end).min(1.0 / (1.0 + js.intensity(x0)))
}

/// Integrates the drift ODE from `from` to `to` with RK4 steps of size at
/// most `ode_h`, clamping onto the cone and restoring block support after
/// every step.
fn ode_flow(
    js: &JumpSystem,
    x: &mut SymOp,
    from: f64,
    to: f64,
    ode_h: f64,
) -> Result<(), SimError> {
    if to <= from {
        return Ok(());
    }
    let span = to - from;
    let n = ((span / ode_h) - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    for step in 0..n {
        let t_here = from + step as f64 * h;
        let k1 = js.drift(x);
        let mut x2 = x.clone();
        x2.axpy(0.5 * h, &k1);
        let k2 = js.drift(&x2);
        let mut x3 = x.clone();
        x3.axpy(0.5 * h, &k2);
        let k3 = js.drift(&x3);
        let mut x4 = x.clone();
        x4.axpy(h, &k3);
        let k4 = js.drift(&x4);
        let mut next = x.clone();
        next.axpy(h / 6.0, &k1);
        next.axpy(h / 3.0, &k2);
        next.axpy(h / 3.0, &k3);
        next.axpy(h / 6.0, &k4);
        if !next.is_finite() {
            return Err(SimError::NonFiniteState { t: t_here });
        }
        *x = next
            .psd_clamp(CLAMP_TOL)
            .map_err(|source| SimError::ConeExit { t: t_here, source })?
            .project(js.level);
    }
    Ok(())
}

/// Advances `x` from `from` to `to`, pushing `(grid index, state)` pairs into
/// `buf` for every grid time in `(from, to)` — and at `to` itself when
/// `inclusive` is set. `gi` is the cursor of the next unvisited grid point.
#[allow(clippy::too_many_arguments)]
fn flow_recording(
    js: &JumpSystem,
    x: &mut SymOp,
    from: f64,
    to: f64,
    ode_h: f64,
    grid: &[f64],
    gi: &mut usize,
    buf: &mut Vec<(usize, SymOp)>,
    inclusive: bool,
) -> Result<(), SimError> {
    let mut s = from;
    loop {
        while *gi < grid.len() && grid[*gi] <= s {
            buf.push((*gi, x.clone()));
            *gi += 1;
        }
        let next_grid = grid.get(*gi).copied();
        match next_grid {
            Some(g) if g < to || (inclusive && g == to) => {
                ode_flow(js, x, s, g, ode_h)?;
                buf.push((*gi, x.clone()));
                *gi += 1;
                s = g;
            }
            _ => {
                ode_flow(js, x, s, to, ode_h)?;
                return Ok(());
            }
        }
    }
}

/// Simulates one path, streaming grid states and jump events to callbacks.
///
/// `grid` must be strictly increasing within `[0, t_end]`; `on_grid`
/// receives `(grid index, state at that time)` in order, `on_jump` receives
/// `(time, atom index, post-jump state)`. Grid times that coincide with a
/// jump report the post-jump state. Returns the final state.
#[allow(clippy::too_many_arguments)]
fn run_path(
    js: &JumpSystem,
    x0: &SymOp,
    t_end: f64,
    master_seed: u64,
    path_index: u64,
    ode_h: f64,
    lookahead: f64,
    grid: &[f64],
    mut on_grid: impl FnMut(usize, &SymOp),
    mut on_jump: impl FnMut(f64, usize, &SymOp),
) -> Result<SymOp, SimError> {
    let mut x = x0
        .project(js.level)
        .psd_clamp(CLAMP_TOL)
        .map_err(|source| SimError::ConeExit { t: 0.0, source })?
        .project(js.level);
    let mut t = 0.0;
    let mut grid_idx = 0;
    while grid_idx < grid.len() && grid[grid_idx] <= t {
        on_grid(grid_idx, &x);
        grid_idx += 1;
    }

    let mut window_counter: u64 = 0;
    let mut look = lookahead;
    let mut buf: Vec<(usize, SymOp)> = Vec::new();

    while t < t_end {
        let window_end = if t + look >= t_end { t_end } else { t + look };
        let mut stream = Stream::from_key(master_seed, path_index, window_counter);
        window_counter += 1;

        // Intensity bound for the window: twice the larger endpoint value,
        // the end state predicted by a plain drift flow.
        let lam_start = js.intensity(&x);
        let mut x_pred = x.clone();
        ode_flow(js, &mut x_pred, t, window_end, ode_h)?;
        let lam_bar = 2.0 * lam_start.max(js.intensity(&x_pred));

        buf.clear();
        let mut gi = grid_idx;
        let mut xc = x.clone();
        let mut s = t;
        let mut jump: Option<(f64, usize)> = None;
        let mut violated = false;
        loop {
            let tau = if lam_bar > 0.0 {
                s + stream.exp(lam_bar)
            } else {
                f64::INFINITY
            };
            if tau >= window_end {
                flow_recording(js, &mut xc, s, window_end, ode_h, grid, &mut gi, &mut buf, true)?;
                break;
            }
            flow_recording(js, &mut xc, s, tau, ode_h, grid, &mut gi, &mut buf, false)?;
            s = tau;
            let lam = js.intensity(&xc);
            if lam > lam_bar {
                violated = true;
                break;
            }
            if stream.uniform() * lam_bar <= lam {
                let k = js.pick_atom(&xc, lam, stream.uniform());
                xc = xc.add(&js.atoms[k].zeta);
                jump = Some((tau, k));
                break;
            }
            // Rejected candidate: catch grid points sitting exactly at tau.
            while gi < grid.len() && grid[gi] <= s {
                buf.push((gi, xc.clone()));
                gi += 1;
            }
        }

        if violated {
            look *= 0.5;
            if look < WINDOW_FLOOR {
                return Err(SimError::WindowUnderflow { t, lookahead: look });
            }
            continue;
        }

        for (idx, state) in buf.drain(..) {
            on_grid(idx, &state);
        }
        grid_idx = gi;
        match jump {
            Some((tau, k)) => {
                t = tau;
                on_jump(tau, k, &xc);
                while grid_idx < grid.len() && grid[grid_idx] <= t {
                    on_grid(grid_idx, &xc);
                    grid_idx += 1;
                }
            }
            None => t = window_end,
        }
        x = xc;
        look = lookahead;
    }

    while grid_idx < grid.len() && grid[grid_idx] <= t_end {
        on_grid(grid_idx, &x);
        grid_idx += 1;
    }
    Ok(x)
}

/// A fully recorded simulated path.
#[derive(Debug, Clone)]
pub struct PathRecord {
    /// Master seed the path was drawn from.
    pub seed: u64,
    /// Truncation level.
    pub level: usize,
    /// Ambient dimension.
    pub dim: usize,
    /// Jump times in increasing order.
    pub jump_times: Vec<f64>,
    /// Atom fired at each jump (index into [`JumpSystem::atoms`]).
    pub jump_atoms: Vec<usize>,
    /// State immediately after each jump.
    pub post_jump_states: Vec<SymOp>,
    /// Uniform reporting times.
    pub grid_times: Vec<f64>,
    /// State at each reporting time (post-jump at coinciding times).
    pub grid_states: Vec<SymOp>,
    /// State at the horizon.
    pub final_state: SymOp,
}

impl PathRecord {
    /// CSV rendering: header `t,event,atom,x_1_1,...`, one row per grid time
    /// (`event = 0`, `atom = 0`) and per jump (`event = 1`, 1-based atom
    /// index), in time order with jumps first at ties. State columns are
    /// orthonormal-basis coordinates, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("t,event,atom");
        for (i, j) in SymOp::coord_pairs(self.dim) {
            out.push_str(&format!(",x_{}_{}", i + 1, j + 1));
        }
        out.push('\n');
        let mut rows: Vec<(f64, u8, usize, &SymOp)> = Vec::new();
        for (idx, t) in self.jump_times.iter().enumerate() {
            rows.push((*t, 1, self.jump_atoms[idx] + 1, &self.post_jump_states[idx]));
        }
        for (idx, t) in self.grid_times.iter().enumerate() {
            rows.push((*t, 0, 0, &self.grid_states[idx]));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut vals = Vec::with_capacity(3 + SymOp::n_coords(self.dim));
        for (t, event, atom, state) in rows {
            vals.clear();
            vals.push(t);
            vals.push(event as f64);
            vals.push(atom as f64);
            vals.extend_from_slice(&state.coords());
            crate::fmt::push_csv_row(&mut out, &vals);
        }
        out
    }
}

/// Number of uniform reporting intervals in [`simulate_path`] records.
const PATH_GRID_INTERVALS: usize = 256;

/// Simulates a single path and records it densely.
///
/// The record carries the state on a uniform 256-interval grid plus every
/// jump. `ode_h` is the drift integration step, `lookahead` the initial
/// thinning window (see [`default_lookahead`]).
pub fn simulate_path(
    js: &JumpSystem,
    x0: &SymOp,
    t_end: f64,
    seed: u64,
    ode_h: f64,
    lookahead: f64,
) -> Result<PathRecord, SimError> {
    validate_run(js, x0, t_end, ode_h, lookahead)?;
    let grid_times: Vec<f64> = (0..=PATH_GRID_INTERVALS)
        .map(|k| k as f64 * t_end / PATH_GRID_INTERVALS as f64)
        .collect();
    let mut grid_states: Vec<SymOp> = Vec::with_capacity(grid_times.len());
    let mut jump_times = Vec::new();
    let mut jump_atoms = Vec::new();
    let mut post_jump_states = Vec::new();
    let final_state = run_path(
        js,
        x0,
        t_end,
        seed,
        0,
        ode_h,
        lookahead,
        &grid_times,
        |_, state| grid_states.push(state.clone()),
        |t, k, state| {
            jump_times.push(t);
            jump_atoms.push(k);
            post_jump_states.push(state.clone());
        },
    )?;
    Ok(PathRecord {
        seed,
        level: js.level,
        dim: js.dim,
        jump_times,
        jump_atoms,
        post_jump_states,
        grid_times,
        grid_states,
        final_state,
    })
}

fn validate_run(
    js: &JumpSystem,
    x0: &SymOp,
    t_end: f64,
    ode_h: f64,
    lookahead: f64,
) -> Result<(), SimError> {
    if x0.dim() != js.dim {
        return Err(SimError::InvalidInput(format!(
            "initial state dimension {} does not match the system ({})",
            x0.dim(),
            js.dim
        )));
    }
    if !x0.is_finite() {
        return Err(SimError::InvalidInput(
            "initial state has non-finite entries".into(),
        ));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SimError::InvalidInput(format!(
            "horizon T = {t_end} must be positive and finite"
        )));
    }
    if !(ode_h > 0.0 && ode_h.is_finite()) {
        return Err(SimError::InvalidInput(format!(
            "ode step {ode_h} must be positive and finite"
        )));
    }
    if !(lookahead > 0.0 && lookahead.is_finite()) {
        return Err(SimError::InvalidInput(format!(
            "lookahead {lookahead} must be positive and finite"
        )));
    }
    Ok(())
}

/// Streaming mean/variance accumulator (Welford), folded in a fixed order so
/// results are independent of scheduling.
#[derive(Debug, Clone, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    /// Absorbs one observation.
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Number of observations.
    pub fn count(&self) -> u64 {
        self.n
    }

    /// Sample mean.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (zero below two observations).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n.max(1) as f64).sqrt()
    }
}

/// z-score with a degenerate-spread guard: when the sample spread is
/// numerically zero, a difference within 1e-6 counts as an exact match
/// (z = 0) and anything larger as an unbounded discrepancy.
pub(crate) fn z_score(diff: f64, stderr: f64) -> f64 {
    if stderr <= 1e-14 {
        if diff.abs() <= 1e-6 {
            0.0
        } else if diff > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        diff / stderr
    }
}

/// One Monte Carlo Laplace estimate against its Riccati reference.
#[derive(Debug, Clone, Serialize)]
pub struct MCEntry {
    /// Evaluation time.
    pub t: f64,
    /// Index of the test operator in the request.
    pub u_id: usize,
    /// Sample mean of `exp(-<X_t, u>)`.
    pub estimate: f64,
    /// Standard error of the estimate.
    pub stderr: f64,
    /// Riccati value `exp(-phi_d(t) - <P_d x0, psi_d(t)>)`.
    pub reference: f64,
    /// `(estimate - reference) / stderr` with the degenerate-spread guard.
    pub z: f64,
}

/// Monte Carlo verification report for the affine transform formula.
#[derive(Debug, Clone, Serialize)]
pub struct MCReport {
    /// Truncation level simulated at.
    pub level: usize,
    /// Number of sampled paths.
    pub n_paths: usize,
    /// Master seed.
    pub seed: u64,
    /// One entry per `(time, test operator)` pair.
    pub entries: Vec<MCEntry>,
}

impl MCReport {
    /// Largest finite-or-not absolute z-score in the report.
    pub fn max_abs_z(&self) -> f64 {
        self.entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max)
    }

    /// Fraction of entries with `|z| <= cap`.
    pub fn fraction_within(&self, cap: f64) -> f64 {
        if self.entries.is_empty() {
            return 1.0;
        }
        let ok = self.entries.iter().filter(|e| e.z.abs() <= cap).count();
        ok as f64 / self.entries.len() as f64
    }
}

/// Estimates `E[exp(-<X_t, u>)]` at the given times for one test operator.
///
/// See [`mc_laplace_multi`]; this is the single-operator wrapper.
pub fn mc_laplace(
    js: &JumpSystem,
    x0: &SymOp,
    u: &SymOp,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<MCReport, SimError> {
    mc_laplace_multi(js, x0, std::slice::from_ref(u), times, n_paths, seed)
}

/// Estimates `E[exp(-<X_t, u>)]` on a `(time, operator)` grid by averaging
/// independent paths, and attaches Riccati references and z-scores.
///
/// Paths are simulated once and evaluated against every operator. Each path
/// draws from its own keyed streams, and the per-cell averages fold in path
/// order, so the report is bitwise independent of the worker count. Test
/// operators are projected onto the block and clamped, exactly like Riccati
/// initial conditions.
pub fn mc_laplace_multi(
    js: &JumpSystem,
    x0: &SymOp,
    us: &[SymOp],
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<MCReport, SimError> {
    if n_paths < 2 {
        return Err(SimError::InvalidInput(
            "need at least two paths for a standard error".into(),
        ));
    }
    if us.is_empty() || times.is_empty() {
        return Err(SimError::InvalidInput(
            "need at least one test operator and one time".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times[0] <= 0.0 {
        return Err(SimError::InvalidInput(
            "times must be strictly increasing and positive".into(),
        ));
    }
    let t_end = *times.last().unwrap();
    let ode_h = 1e-3 * t_end;
    validate_run(js, x0, t_end, ode_h, 1.0)?;

    let x0_eff = x0
        .project(js.level)
        .psd_clamp(CLAMP_TOL)
        .map_err(|source| SimError::ConeExit { t: 0.0, source })?
        .project(js.level);
    let lookahead = default_lookahead(js, &x0_eff, t_end);

    let us_eff: Vec<SymOp> = us
        .iter()
        .map(|u| {
            if u.dim() != js.dim {
                return Err(SimError::InvalidInput(format!(
                    "test operator dimension {} does not match the system ({})",
                    u.dim(),
                    js.dim
                )));
            }
            Ok(u.project(js.level)
                .psd_clamp(CLAMP_TOL)
                .map_err(|source| SimError::ConeExit { t: 0.0, source })?
                .project(js.level))
        })
        .collect::<Result<_, _>>()?;

    // Riccati references on the same horizon.
    let opts = SolveOptions {
        error_estimate: false,
        ..SolveOptions::default()
    };
    let mut references = vec![0.0; times.len() * us_eff.len()];
    for (ui, u) in us_eff.iter().enumerate() {
        let sol = solve_riccati_opts(&js.pp, u, t_end, ode_h, &opts)?;
        for (ti, &t) in times.iter().enumerate() {
            let (phi, psi) = sol.value_at(t);
            references[ti * us_eff.len() + ui] = (-phi - hs_inner(&x0_eff, &psi)).exp();
        }
    }

    let n_cells = times.len() * us_eff.len();
    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut cells = vec![0.0; n_cells];
            run_path(
                js,
                &x0_eff,
                t_end,
                seed,
                path,
                ode_h,
                lookahead,
                times,
                |ti, state| {
                    for (ui, u) in us_eff.iter().enumerate() {
                        cells[ti * us_eff.len() + ui] = (-hs_inner(state, u)).exp();
                    }
                },
                |_, _, _| {},
            )?;
            Ok(cells)
        })
        .collect::<Result<_, SimError>>()?;

    let mut accs = vec![Welford::default(); n_cells];
    for cells in &per_path {
        for (acc, v) in accs.iter_mut().zip(cells.iter()) {
            acc.push(*v);
        }
    }

    let mut entries = Vec::with_capacity(n_cells);
    for (ti, &t) in times.iter().enumerate() {
        for ui in 0..us_eff.len() {
            let acc = &accs[ti * us_eff.len() + ui];
            let reference = references[ti * us_eff.len() + ui];
            let estimate = acc.mean();
            let stderr = acc.stderr();
            entries.push(MCEntry {
                t,
                u_id: ui,
                estimate,
                stderr,
                reference,
                z: z_score(estimate - reference, stderr),
            });
        }
    }
    Ok(MCReport {
        level: js.level,
        n_paths,
        seed,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LinearDrift;
    use crate::params::{
        generic_demo, project_params, AdmissibleParameters, AtomicMeasure, MAtom, MuAtom,
        OperatorValuedMeasure,
    };

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

    /// Constant-rate single-atom system (a compound Poisson process).
    fn poisson_system(dim: usize, zeta_scale: f64, rate: f64) -> JumpSystem {
        let mut p = zero_params(dim);
        let xi = SymOp::basis(dim, 0, 0).scale(zeta_scale);
        p.m = AtomicMeasure::new(dim, vec![MAtom { xi, w: rate }]).unwrap();
        // No drift floor needed for simulation-only tests when the atom is
        // large (uncompensated).
        build_jump_system(&project_params(&p, dim))
    }

    #[test]
    fn build_matches_the_characteristic_drift() {
        let p = generic_demo(3);
        for d in 1..=3 {
            let pp = project_params(&p, d);
            let js = build_jump_system(&pp);
            let mut s = crate::rng::Stream::from_key(1, d as u64, 0);
            for _ in 0..5 {
                let v: Vec<f64> = (0..3).map(|_| s.normal()).collect();
                let x = SymOp::rank_one(&v).project(d);
                // drift(x) + sum over small atoms zeta (w + <x, S>) must
                // reassemble b_d + B_d(x).
                let mut lhs = js.drift(&x);
                for atom in &js.atoms {
                    if atom.small {
                        lhs.axpy(atom.const_rate + hs_inner(&x, &atom.state_matrix), &atom.zeta);
                    }
                }
                let mut rhs = pp.b_d.clone();
                rhs = rhs.add(&pp.b_lin_d.apply(&x));
                let scale = 1.0 + rhs.norm();
                assert!(
                    lhs.sub(&rhs).norm() <= 1e-13 * scale,
                    "characteristic drift mismatch at d = {d}"
                );
            }
        }
    }

    #[test]
    fn build_closed_forms() {
        // Empty measures: no atoms, drift is b + B(x).
        let mut p = zero_params(2);
        p.b = SymOp::from_diag(&[0.4, 0.1]);
        let js = build_jump_system(&project_params(&p, 2));
        assert!(js.atoms.is_empty());
        let x = SymOp::identity(2);
        assert!(js.drift(&x).sub(&p.b).norm() < 1e-15);
        assert_eq!(js.intensity(&x), 0.0);

        // Large atom: uncompensated, drift unchanged.
        let js_large = poisson_system(2, 2.0, 0.7);
        assert_eq!(js_large.atoms.len(), 1);
        assert!(!js_large.atoms[0].small);
        assert!(js_large.drift(&x).norm() < 1e-15);
        assert!((js_large.intensity(&x) - 0.7).abs() < 1e-15);

        // Small atom with unit constant rate: drift is exactly -zeta.
        let js_small = poisson_system(2, 0.5, 1.0);
        assert!(js_small.atoms[0].small);
        let drift = js_small.drift(&SymOp::zeros(2));
        let expected = js_small.atoms[0].zeta.scale(-1.0);
        assert!(drift.sub(&expected).norm() < 1e-15);
    }

    #[test]
    fn intensity_is_affine() {
        let p = generic_demo(4);
        let js = build_jump_system(&project_params(&p, 3));
        let mut s = crate::rng::Stream::from_key(7, 0, 0);
        for _ in 0..10 {
            let xv: Vec<f64> = (0..4).map(|_| s.normal()).collect();
            let yv: Vec<f64> = (0..4).map(|_| s.normal()).collect();
            let x = SymOp::rank_one(&xv);
            let y = SymOp::rank_one(&yv);
            let alpha = s.uniform();
            let mut mix = x.scale(alpha);
            mix.axpy(1.0 - alpha, &y);
            let direct = js.intensity(&mix);
            let combo = alpha * js.intensity(&x) + (1.0 - alpha) * js.intensity(&y);
            assert!(
                (direct - combo).abs() <= 1e-12 * (1.0 + combo.abs()),
                "intensity is not affine: {direct} vs {combo}"
            );
        }
    }

    #[test]
    fn drift_only_path_is_the_exact_line() {
        let mut p = zero_params(2);
        p.b = SymOp::from_diag(&[0.3, 0.2]);
        let js = build_jump_system(&project_params(&p, 2));
        let x0 = SymOp::identity(2);
        let rec = simulate_path(&js, &x0, 1.0, 5, 1e-3, 0.1).unwrap();
        assert!(rec.jump_times.is_empty());
        let mut expected = x0.clone();
        expected.axpy(1.0, &p.b);
        assert!(
            rec.final_state.sub(&expected).norm() < 1e-12,
            "deterministic drift path is off"
        );
        // Interior grid state: x0 + t b.
        let idx = 128; // t = 0.5
        let mut mid = x0.clone();
        mid.axpy(rec.grid_times[idx], &p.b);
        assert!(rec.grid_states[idx].sub(&mid).norm() < 1e-12);
    }

    #[test]
    fn poisson_jump_counts_match_the_law() {
        let rate = 0.7;
        let js = poisson_system(2, 1.5, rate);
        let x0 = SymOp::zeros(2);
        let n_paths = 10_000u64;
        let mut counts = Vec::with_capacity(n_paths as usize);
        for path in 0..n_paths {
            let mut count = 0usize;
            run_path(
                &js,
                &x0,
                1.0,
                99,
                path,
                1e-2,
                default_lookahead(&js, &x0, 1.0),
                &[],
                |_, _| {},
                |_, _, _| count += 1,
            )
            .unwrap();
            counts.push(count as f64);
        }
        let mut acc = Welford::default();
        for c in counts {
            acc.push(c);
        }
        let tol = 3.0 * (rate / n_paths as f64).sqrt();
        assert!(
            (acc.mean() - rate).abs() <= tol,
            "Poisson mean {} deviates from {rate} beyond {tol}",
            acc.mean()
        );
        // Poisson variance equals the mean; verify loosely (5 sigma of the
        // variance estimator would be overkill here, 10% suffices at n=1e4).
        assert!(
            (acc.variance() - rate).abs() <= 0.1 * rate,
            "Poisson variance {} deviates from {rate}",
            acc.variance()
        );
    }

    #[test]
    fn state_dependent_atom_dies_at_zero() {
        let mut p = zero_params(2);
        let xi = SymOp::basis(2, 0, 0).scale(0.5);
        let g = SymOp::basis(2, 0, 0).scale(0.3);
        let mut b_lin = LinearDrift::zero(2);
        b_lin.add_coupling(&g.scale(1.0 / xi.inner(&xi)), &xi);
        p.b_lin = b_lin;
        p.mu = OperatorValuedMeasure::new(2, vec![MuAtom { xi, g }]).unwrap();
        let js = build_jump_system(&project_params(&p, 2));
        let rec = simulate_path(&js, &SymOp::zeros(2), 1.0, 11, 1e-3, 0.1).unwrap();
        assert!(rec.jump_times.is_empty());
        assert_eq!(rec.final_state.norm(), 0.0);
    }

    #[test]
    fn paths_are_reproducible_and_seed_sensitive() {
        let p = generic_demo(3);
        let js = build_jump_system(&project_params(&p, 2));
        let x0 = SymOp::identity(3);
        let a = simulate_path(&js, &x0, 1.0, 42, 1e-3, 0.05).unwrap();
        let b = simulate_path(&js, &x0, 1.0, 42, 1e-3, 0.05).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let c = simulate_path(&js, &x0, 1.0, 43, 1e-3, 0.05).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }

    #[test]
    fn recorded_states_stay_in_the_cone_and_on_the_block() {
        let p = generic_demo(4);
        let js = build_jump_system(&project_params(&p, 2));
        let x0 = SymOp::identity(4);
        let rec = simulate_path(&js, &x0, 1.0, 3, 1e-3, 0.05).unwrap();
        for state in rec.grid_states.iter().chain(rec.post_jump_states.iter()) {
            assert!(state.supported_on(2), "state leaked off the block");
            assert!(
                state.min_eigenvalue() >= -1e-9,
                "state left the cone: {}",
                state.min_eigenvalue()
            );
        }
    }

    #[test]
    fn csv_shape_is_stable() {
        let js = poisson_system(2, 1.5, 3.0);
        let rec = simulate_path(&js, &SymOp::zeros(2), 1.0, 8, 1e-2, 0.1).unwrap();
        let csv = rec.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,event,atom,x_1_1,x_1_2,x_2_2");
        assert_eq!(
            csv.lines().count(),
            1 + rec.grid_times.len() + rec.jump_times.len()
        );
        // Jump rows carry event = 1 and the 1-based atom index.
        let jump_rows: Vec<&str> = csv.lines().filter(|l| l.split(',').nth(1) == Some("1.0000000000000000e0")).collect();
        assert_eq!(jump_rows.len(), rec.jump_times.len());
    }

    #[test]
    fn laplace_at_zero_operator_is_exact() {
        let p = generic_demo(3);
        let js = build_jump_system(&project_params(&p, 2));
        let x0 = SymOp::identity(3);
        let report = mc_laplace(&js, &x0, &SymOp::zeros(3), &[0.5, 1.0], 50, 7).unwrap();
        for entry in &report.entries {
            assert_eq!(entry.estimate, 1.0);
            assert_eq!(entry.stderr, 0.0);
            assert_eq!(entry.reference, 1.0);
            assert_eq!(entry.z, 0.0);
        }
    }

    #[test]
    fn laplace_drift_only_matches_the_closed_form() {
        let mut p = zero_params(2);
        p.b = SymOp::from_diag(&[0.4, 0.2]);
        let js = build_jump_system(&project_params(&p, 2));
        let x0 = SymOp::identity(2);
        let u = SymOp::from_diag(&[0.6, 0.3]);
        let report = mc_laplace(&js, &x0, &u, &[0.5, 1.0], 10, 1).unwrap();
        for entry in &report.entries {
            let mut xt = x0.clone();
            xt.axpy(entry.t, &p.b);
            let expected = (-hs_inner(&xt, &u)).exp();
            assert!(
                (entry.estimate - expected).abs() < 1e-12,
                "deterministic estimate off at t = {}",
                entry.t
            );
            assert_eq!(entry.stderr, 0.0);
            assert_eq!(entry.z, 0.0, "z should collapse to zero, got {}", entry.z);
        }
    }

    #[test]
    fn laplace_matches_riccati_on_a_jump_instance() {
        let p = generic_demo(3);
        let js = build_jump_system(&project_params(&p, 2));
        let x0 = SymOp::identity(3).scale(0.5);
        let u = SymOp::identity(3).scale(0.4);
        let report = mc_laplace(&js, &x0, &u, &[0.5, 1.0], 4000, 1234).unwrap();
        for entry in &report.entries {
            assert!(
                entry.z.abs() <= 4.0,
                "z = {} too large at t = {} (est {}, ref {})",
                entry.z,
                entry.t,
                entry.estimate,
                entry.reference
            );
            assert!(entry.estimate > 0.0 && entry.estimate <= 1.0);
        }
    }

    #[test]
    fn jump_variation_matches_its_compensator() {
        // Finite-variation identity: E sum |delta X| = sum_k |zeta_k| *
        // E integral of (w_k + <X_s, S_k>) ds.
        let p = generic_demo(3);
        let pp = project_params(&p, 2);
        let js = build_jump_system(&pp);
        let x0 = SymOp::identity(3).scale(0.5);
        let x0_eff = x0.project(2);
        let t_end = 1.0;
        let n_paths = 2000u64;
        let quad: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let mut acc = Welford::default();
        for path in 0..n_paths {
            let mut variation = 0.0;
            let mut prev: Option<SymOp> = None;
            let mut integral = SymOp::zeros(3);
            let mut prev_t = 0.0;
            run_path(
                &js,
                &x0_eff,
                t_end,
                2024,
                path,
                1e-3,
                default_lookahead(&js, &x0_eff, t_end),
                &quad,
                |gi, state| {
                    if let Some(p_state) = prev.take() {
                        let dt = quad[gi] - prev_t;
                        integral.axpy(0.5 * dt, &p_state);
                        integral.axpy(0.5 * dt, state);
                    }
                    prev = Some(state.clone());
                    prev_t = quad[gi];
                },
                |_, k, _| variation += js.atoms[k].zeta.norm(),
            )
            .unwrap();
            let mut compensator = 0.0;
            for atom in &js.atoms {
                compensator += atom.zeta.norm()
                    * (atom.const_rate * t_end + hs_inner(&integral, &atom.state_matrix));
            }
            acc.push(variation - compensator);
        }
        let z = z_score(acc.mean(), acc.stderr());
        assert!(
            z.abs() <= 3.0,
            "jump variation z = {z} (mean {}, stderr {})",
            acc.mean(),
            acc.stderr()
        );
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let js = poisson_system(2, 1.5, 1.0);
        let x0 = SymOp::zeros(2);
        assert!(matches!(
            simulate_path(&js, &SymOp::zeros(3), 1.0, 0, 1e-3, 0.1),
            Err(SimError::InvalidInput(_))
        ));
        assert!(matches!(
            simulate_path(&js, &x0, -1.0, 0, 1e-3, 0.1),
            Err(SimError::InvalidInput(_))
        ));
        assert!(matches!(
            simulate_path(&js, &x0, 1.0, 0, 0.0, 0.1),
            Err(SimError::InvalidInput(_))
        ));
        assert!(matches!(
            mc_laplace(&js, &x0, &SymOp::zeros(2), &[0.5, 0.25], 100, 0),
            Err(SimError::InvalidInput(_))
        ));
        assert!(matches!(
            mc_laplace(&js, &x0, &SymOp::zeros(2), &[0.5], 1, 0),
            Err(SimError::InvalidInput(_))
        ));
    }
}
