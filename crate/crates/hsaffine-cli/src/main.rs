//! Command line front end for the [`hsaffine`] library.
//!
//! Subcommands
//! -----------
//! * `validate` — admissibility check on a parameter file.
//! * `riccati`  — solve the truncated Riccati system and dump the grid.
//! * `bound`    — truncation-error constants for a range of levels.
//! * `simulate` — one thinning path with a dense state record.
//! * `verify`   — Monte Carlo z-gate: transform grid against the Riccati
//!   reference, martingale residuals for three test functions, and the
//!   jump-bracket balance.
//! * `sweep`    — level sweep with tail bounds, gap profiles, and decay fit.
//! * `example`  — write a ready-made parameter file (`simple` or `generic`).
//!
//! Artifacts are written as `<subcommand>-<stamp>.{csv,json}` under `--out`
//! (default from `$HSAFFINE_OUT`, falling back to the working directory),
//! with floats rendered at 17 significant digits. Artifact *content* depends
//! only on the parameter file and the run configuration — never on the
//! worker count, the stamp, or the clock — so repeated runs with the same
//! seed are bitwise identical. One summary line is printed per artifact.
//!
//! Exit codes: `0` success, `1` a check failed (inadmissible parameters, a
//! z-gate rejection, a violated sweep bound), `2` input or schema error,
//! `3` numerical failure (cone exit, blow-up, thinning window underflow).

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use hsaffine::fmt::{fmt_g17, to_json};
use hsaffine::params::{from_json_str, to_json_string, ViolationDetail};
use hsaffine::riccati::SolverError;
use hsaffine::simulate::{default_lookahead, BracketReport, MartingaleDiagnostic, SimError};
use hsaffine::{
    bracket_check, build_jump_system, error_bound, martingale_residual, mc_laplace_multi,
    project_params, simulate_path, solve_riccati, sweep, validate_admissible,
    AdmissibleParameters, ConvergeError, ErrorBound, MCReport, ParamsError, SweepOptions, SymOp,
    TestFunction,
};

/// Number of random boundary pairs sampled by `validate`.
const VALIDATE_SAMPLES: usize = 200;

/// Margin tolerance used by `validate`.
const VALIDATE_TOL: f64 = 1e-9;

/// Default Monte Carlo path count for `verify`.
const DEFAULT_VERIFY_PATHS: usize = 2000;

/// Fraction of z-scores that must fall within the gate for `verify` to pass.
const Z_GATE_FRACTION: f64 = 0.95;

/// Per-score z-gate.
const Z_GATE: f64 = 3.0;

/// Hard ceiling: a single score beyond this fails `verify` outright.
const Z_CEILING: f64 = 6.0;

/// Affine jump processes on positive Hilbert-Schmidt operators: validation,
/// Riccati solves, truncation bounds, path simulation, and Monte Carlo
/// verification.
#[derive(Parser, Debug)]
#[command(name = "hsaffine", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Parameter file (JSON). Required by every subcommand except `example`.
    #[arg(long, global = true, value_name = "FILE")]
    params: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true, env = "HSAFFINE_OUT", default_value = ".")]
    out: PathBuf,

    /// Master seed for all randomized work (sampling, thinning, validation).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Integration step for Riccati solves and the pathwise drift flow.
    #[arg(long, global = true, default_value_t = 1e-3)]
    step: f64,

    /// Monte Carlo path count (`verify`; enables the cross-check in `sweep`).
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Truncation levels, comma separated (e.g. `1,2,4`). Commands that use
    /// a single level take the deepest; the default is every level up to the
    /// parameter dimension.
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<usize>>,

    /// Time horizon.
    #[arg(long = "T", global = true, default_value_t = 1.0)]
    t_end: f64,

    /// Dimension for generated parameter sets (`example` only).
    #[arg(long, global = true)]
    dim: Option<usize>,

    /// Worker pool size; `0` lets the runtime decide. Results do not depend
    /// on this value.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Override the timestamp used in artifact filenames, for reproducible
    /// pipelines. Artifact content never embeds the stamp.
    #[arg(long, global = true, value_name = "STRING")]
    stamp: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check the admissibility conditions on a parameter file.
    Validate,
    /// Solve the truncated Riccati system and write the grid.
    Riccati,
    /// Evaluate truncation-error constants per level.
    Bound,
    /// Simulate one path of the truncated process.
    Simulate,
    /// Monte Carlo z-gate against the Riccati reference.
    Verify,
    /// Galerkin level sweep with tail bounds and decay fit.
    Sweep,
    /// Write a ready-made parameter file.
    Example {
        /// Which parameter set to write: `simple` or `generic`.
        name: String,
    },
}

/// A command aborted before producing its result.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ParamsError> for Failure {
    fn from(e: ParamsError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let code = match e {
            SolverError::InvalidInput(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidInput(_) => Failure::input(e.to_string()),
            SimError::Solver(inner) => inner.into(),
            _ => Failure {
                code: 3,
                message: e.to_string(),
            },
        }
    }
}

impl From<ConvergeError> for Failure {
    fn from(e: ConvergeError) -> Self {
        match e {
            ConvergeError::InvalidInput(_) => Failure::input(e.to_string()),
            ConvergeError::Solver(inner) => inner.into(),
            ConvergeError::Sim(inner) => inner.into(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        // Ignore the error from configuring twice; only the first call wins
        // and the pool size never affects results.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.cmd {
        Cmd::Validate => cmd_validate(cli),
        Cmd::Riccati => cmd_riccati(cli),
        Cmd::Bound => cmd_bound(cli),
        Cmd::Simulate => cmd_simulate(cli),
        Cmd::Verify => cmd_verify(cli),
        Cmd::Sweep => cmd_sweep(cli),
        Cmd::Example { name } => cmd_example(cli, name),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

/// Loads and parses the `--params` file; schema problems exit with code 2.
fn load_params(cli: &Cli) -> Result<AdmissibleParameters, Failure> {
    let path = cli
        .params
        .as_ref()
        .ok_or_else(|| Failure::input("--params <FILE> is required for this subcommand"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    from_json_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Timestamp for artifact filenames; `--stamp` overrides the clock.
fn stamp(cli: &Cli) -> String {
    cli.stamp
        .clone()
        .unwrap_or_else(|| chrono::Utc::now().format("%Y%m%dT%H%M%S%3fZ").to_string())
}

/// Writes one artifact and prints its one-line summary.
fn write_artifact(cli: &Cli, name: &str, contents: &str, summary: &str) -> Result<(), Failure> {
    fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::input(format!("{}: {e}", cli.out.display())))?;
    let path = cli.out.join(name);
    fs::write(&path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    println!("{}: {summary}", path.display());
    Ok(())
}

/// Checks the horizon and step flags once, before any numerics.
fn check_run_flags(cli: &Cli) -> Result<(), Failure> {
    if !(cli.t_end > 0.0 && cli.t_end.is_finite()) {
        return Err(Failure::input(format!(
            "--T {} must be positive and finite",
            cli.t_end
        )));
    }
    if !(cli.step > 0.0 && cli.step.is_finite()) {
        return Err(Failure::input(format!(
            "--step {} must be positive and finite",
            cli.step
        )));
    }
    Ok(())
}

/// The requested levels, validated against the dimension; defaults to every
/// level `1..=dim`.
fn levels_or_all(cli: &Cli, dim: usize) -> Result<Vec<usize>, Failure> {
    match &cli.levels {
        None => Ok((1..=dim).collect()),
        Some(ls) => {
            if ls.is_empty() {
                return Err(Failure::input("--levels must name at least one level"));
            }
            if ls.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Failure::input(
                    "--levels must be strictly increasing".to_string(),
                ));
            }
            if ls[0] == 0 || *ls.last().unwrap() > dim {
                return Err(Failure::input(format!(
                    "--levels must lie in 1..={dim}"
                )));
            }
            Ok(ls.clone())
        }
    }
}

/// The deepest requested level, used by single-level commands.
fn deepest_level(cli: &Cli, dim: usize) -> Result<usize, Failure> {
    Ok(*levels_or_all(cli, dim)?.last().unwrap())
}

/// Diagonal test operator `u = sum_n n^-2 e_nn`: strictly positive on every
/// level, summable tail, so truncation effects stay visible at any depth.
fn default_test_operator(dim: usize) -> SymOp {
    SymOp::from_diag(
        &(1..=dim)
            .map(|n| 1.0 / (n * n) as f64)
            .collect::<Vec<_>>(),
    )
}

/// Diagonal initial state `x0 = sum_n n^-1 e_nn`.
fn default_initial_state(dim: usize) -> SymOp {
    SymOp::from_diag(&(1..=dim).map(|n| 1.0 / n as f64).collect::<Vec<_>>())
}

/// Smallest level whose leading block supports every parameter component:
/// the constant drift, every jump direction and kernel mass, and the action
/// of the linear drift (both directions) on the block.
///
/// Sweep test data is restricted to this block, so the level sweep collapses
/// exactly once the block is covered — nothing in the dynamics can reach
/// beyond it.
fn effective_block(p: &AdmissibleParameters) -> usize {
    'levels: for d in 1..p.dim {
        if !p.b.supported_on(d) {
            continue;
        }
        if p.m.atoms.iter().any(|a| !a.xi.supported_on(d)) {
            continue;
        }
        if p
            .mu
            .atoms
            .iter()
            .any(|a| !(a.xi.supported_on(d) && a.g.supported_on(d)))
        {
            continue;
        }
        for i in 0..d {
            for j in i..d {
                let q = SymOp::basis(p.dim, i, j);
                if !(p.b_lin.apply(&q).supported_on(d)
                    && p.b_lin.apply_adjoint(&q).supported_on(d))
                {
                    continue 'levels;
                }
            }
        }
        return d;
    }
    p.dim
}

// ---------------------------------------------------------------------------
// validate

fn cmd_validate(cli: &Cli) -> CmdResult {
    let p = load_params(cli)?;
    let report = validate_admissible(&p, VALIDATE_SAMPLES, VALIDATE_TOL, cli.seed);
    let name = format!("validate-{}.json", stamp(cli));
    write_artifact(
        cli,
        &name,
        &to_json(&report),
        &format!(
            "admissibility report, dim {}, {} boundary samples",
            p.dim, report.n_samples
        ),
    )?;
    match &report.violation {
        None => {
            println!(
                "admissible: worst inward margin {:.6e}, drift floor min eig {:.6e}",
                report.worst_margin, report.drift_floor_min_eig
            );
            Ok(0)
        }
        Some(ViolationDetail { clause, detail }) => {
            println!("inadmissible: clause '{clause}' violated — {detail}");
            Ok(1)
        }
    }
}

// ---------------------------------------------------------------------------
// riccati

#[derive(Serialize)]
struct RiccatiSummary {
    level: usize,
    dim: usize,
    horizon: f64,
    step: f64,
    grid_points: usize,
    final_phi: f64,
    final_psi_norm: f64,
    err_est: Option<f64>,
}

fn cmd_riccati(cli: &Cli) -> CmdResult {
    check_run_flags(cli)?;
    let p = load_params(cli)?;
    let d = deepest_level(cli, p.dim)?;
    let u = default_test_operator(p.dim);
    let sol = solve_riccati(&p, d, &u, cli.t_end, cli.step)?;
    let summary = RiccatiSummary {
        level: sol.level,
        dim: sol.dim,
        horizon: cli.t_end,
        step: sol.step,
        grid_points: sol.times.len(),
        final_phi: *sol.phi.last().unwrap(),
        final_psi_norm: sol.final_psi().norm(),
        err_est: sol.err_est,
    };
    let s = stamp(cli);
    write_artifact(
        cli,
        &format!("riccati-{s}.csv"),
        &sol.to_csv(),
        &format!("Riccati grid, {} rows, level {d}", sol.times.len()),
    )?;
    write_artifact(
        cli,
        &format!("riccati-{s}.json"),
        &to_json(&summary),
        &format!(
            "final phi {:.6e}, |psi| {:.6e}",
            summary.final_phi, summary.final_psi_norm
        ),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// bound

fn bounds_to_csv(bounds: &[ErrorBound]) -> String {
    let mut out = String::from(
        "level,dim,horizon,norm_cap,drift_norm,mass_norm,solution_cap,lipschitz_r,\
         lipschitz_f,stability_factor,tail_coefficient,bound\n",
    );
    for eb in bounds {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            eb.level,
            eb.dim,
            fmt_g17(eb.horizon),
            fmt_g17(eb.norm_cap),
            fmt_g17(eb.drift_norm),
            fmt_g17(eb.mass_norm),
            fmt_g17(eb.solution_cap),
            fmt_g17(eb.lipschitz_r),
            fmt_g17(eb.lipschitz_f),
            fmt_g17(eb.stability_factor),
            fmt_g17(eb.tail_coefficient),
            fmt_g17(eb.bound),
        );
    }
    out
}

fn cmd_bound(cli: &Cli) -> CmdResult {
    check_run_flags(cli)?;
    let p = load_params(cli)?;
    let levels = levels_or_all(cli, p.dim)?;
    let u = default_test_operator(p.dim);
    let cap = u.norm().max(1.0);
    let bounds = levels
        .iter()
        .map(|&d| error_bound(&p, &u, cli.t_end, d, cap))
        .collect::<Result<Vec<_>, _>>()?;
    let s = stamp(cli);
    write_artifact(
        cli,
        &format!("bound-{s}.csv"),
        &bounds_to_csv(&bounds),
        &format!("truncation constants for {} levels", bounds.len()),
    )?;
    write_artifact(
        cli,
        &format!("bound-{s}.json"),
        &to_json(&bounds),
        &format!(
            "deepest level {} bound {:.6e}",
            bounds.last().unwrap().level,
            bounds.last().unwrap().bound
        ),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct SimulateSummary {
    seed: u64,
    level: usize,
    dim: usize,
    horizon: f64,
    ode_step: f64,
    lookahead: f64,
    n_jumps: usize,
    grid_points: usize,
    final_norm: f64,
    final_min_eigenvalue: f64,
}

fn cmd_simulate(cli: &Cli) -> CmdResult {
    check_run_flags(cli)?;
    let p = load_params(cli)?;
    let d = deepest_level(cli, p.dim)?;
    let pp = project_params(&p, d);
    let js = build_jump_system(&pp);
    let x0 = default_initial_state(p.dim);
    let lookahead = default_lookahead(&js, &x0.project(d), cli.t_end);
    let rec = simulate_path(&js, &x0, cli.t_end, cli.seed, cli.step, lookahead)?;
    let summary = SimulateSummary {
        seed: rec.seed,
        level: rec.level,
        dim: rec.dim,
        horizon: cli.t_end,
        ode_step: cli.step,
        lookahead,
        n_jumps: rec.jump_times.len(),
        grid_points: rec.grid_times.len(),
        final_norm: rec.final_state.norm(),
        final_min_eigenvalue: rec.final_state.min_eigenvalue(),
    };
    let s = stamp(cli);
    write_artifact(
        cli,
        &format!("simulate-{s}.csv"),
        &rec.to_csv(),
        &format!(
            "path record, {} grid rows + {} jumps",
            rec.grid_times.len(),
            rec.jump_times.len()
        ),
    )?;
    write_artifact(
        cli,
        &format!("simulate-{s}.json"),
        &to_json(&summary),
        &format!(
            "{} jumps, final |x| {:.6e}",
            summary.n_jumps, summary.final_norm
        ),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify

/// Everything the z-gate saw, in one artifact.
#[derive(Serialize)]
struct VerifyArtifact {
    level: usize,
    dim: usize,
    horizon: f64,
    n_paths: usize,
    seed: u64,
    laplace: MCReport,
    martingale: Vec<MartingaleDiagnostic>,
    bracket: BracketReport,
    fraction_within_gate: f64,
    max_abs_z: f64,
    pass: bool,
}

/// Flat per-score CSV: `source` is `laplace`, a test-function name, or
/// `bracket`; martingale rows carry a zero reference.
fn verify_to_csv(art: &VerifyArtifact) -> String {
    let mut out = String::from("source,t,u_id,estimate,stderr,reference,z\n");
    for e in &art.laplace.entries {
        let _ = writeln!(
            out,
            "laplace,{},{},{},{},{},{}",
            fmt_g17(e.t),
            e.u_id,
            fmt_g17(e.estimate),
            fmt_g17(e.stderr),
            fmt_g17(e.reference),
            fmt_g17(e.z),
        );
    }
    for diag in &art.martingale {
        for e in &diag.entries {
            let _ = writeln!(
                out,
                "{},{},0,{},{},{},{}",
                diag.test_function,
                fmt_g17(e.t),
                fmt_g17(e.mean),
                fmt_g17(e.stderr),
                fmt_g17(0.0),
                fmt_g17(e.z),
            );
        }
    }
    let b = &art.bracket;
    let _ = writeln!(
        out,
        "bracket,{},0,{},{},{},{}",
        fmt_g17(art.horizon),
        fmt_g17(b.mean_jump_square),
        fmt_g17(b.stderr),
        fmt_g17(b.mean_compensator),
        fmt_g17(b.z),
    );
    out
}

/// Test operators for the verification grid: three scalings of the default
/// diagonal operator plus one with off-diagonal structure (kept well inside
/// the cone).
fn verify_operators(dim: usize) -> Vec<SymOp> {
    let base = default_test_operator(dim);
    let mixed = if dim >= 2 {
        let mut op = base.scale(0.5);
        op.axpy(0.1, &SymOp::basis(dim, 0, 1));
        op
    } else {
        base.scale(2.0)
    };
    vec![base.scale(0.25), base.scale(0.5), base.clone(), mixed]
}

fn cmd_verify(cli: &Cli) -> CmdResult {
    check_run_flags(cli)?;
    let p = load_params(cli)?;
    let d = deepest_level(cli, p.dim)?;
    let n_paths = cli.paths.unwrap_or(DEFAULT_VERIFY_PATHS);
    let pp = project_params(&p, d);
    let js = build_jump_system(&pp);
    let x0 = default_initial_state(p.dim);
    let us = verify_operators(p.dim);
    let t_end = cli.t_end;
    let times: Vec<f64> = (1..=4).map(|k| k as f64 * t_end / 4.0).collect();

    let laplace = mc_laplace_multi(&js, &x0, &us, &times, n_paths, cli.seed)?;
    let mut martingale = Vec::with_capacity(3);
    for (k, tag) in [
        TestFunction::Exp,
        TestFunction::Linear,
        TestFunction::Quadratic,
    ]
    .into_iter()
    .enumerate()
    {
        martingale.push(martingale_residual(
            &js,
            &pp,
            &x0,
            tag,
            &us[1],
            t_end,
            n_paths,
            &times,
            cli.seed.wrapping_add(1 + k as u64),
        )?);
    }
    let bracket = bracket_check(&js, &x0, &us[1], t_end, n_paths, cli.seed.wrapping_add(4))?;

    let mut zs: Vec<f64> = laplace.entries.iter().map(|e| e.z).collect();
    for diag in &martingale {
        zs.extend(diag.entries.iter().map(|e| e.z));
    }
    zs.push(bracket.z);
    let within = zs.iter().filter(|z| z.abs() <= Z_GATE).count();
    let fraction = within as f64 / zs.len() as f64;
    let max_abs_z = zs.iter().fold(0.0_f64, |m, z| m.max(z.abs()));
    let pass = fraction >= Z_GATE_FRACTION && max_abs_z < Z_CEILING;

    let art = VerifyArtifact {
        level: d,
        dim: p.dim,
        horizon: t_end,
        n_paths,
        seed: cli.seed,
        laplace,
        martingale,
        bracket,
        fraction_within_gate: fraction,
        max_abs_z,
        pass,
    };
    let s = stamp(cli);
    write_artifact(
        cli,
        &format!("verify-{s}.csv"),
        &verify_to_csv(&art),
        &format!("{} z-scores at level {d}, {n_paths} paths", zs.len()),
    )?;
    write_artifact(
        cli,
        &format!("verify-{s}.json"),
        &to_json(&art),
        &format!(
            "max |z| {:.3}, {}/{} within {Z_GATE}",
            art.max_abs_z,
            within,
            zs.len()
        ),
    )?;
    if pass {
        println!(
            "verify PASS: {within}/{} z-scores within {Z_GATE}, max |z| = {:.3}",
            zs.len(),
            art.max_abs_z
        );
        Ok(0)
    } else {
        println!(
            "verify FAIL: {within}/{} z-scores within {Z_GATE}, max |z| = {:.3}",
            zs.len(),
            art.max_abs_z
        );
        Ok(1)
    }
}

// ---------------------------------------------------------------------------
// sweep

fn cmd_sweep(cli: &Cli) -> CmdResult {
    check_run_flags(cli)?;
    let p = load_params(cli)?;
    let levels = levels_or_all(cli, p.dim)?;
    let block = effective_block(&p);
    let u = default_test_operator(p.dim).project(block);
    let x0 = default_initial_state(p.dim).project(block);
    let opts = SweepOptions {
        step: cli.step,
        weights: None,
        mc_paths: cli.paths.unwrap_or(0),
        mc_seed: cli.seed,
        mc_times: Vec::new(),
    };
    let res = sweep(&p, &u, &x0, cli.t_end, &levels, p.dim, &opts)?;
    let s = stamp(cli);
    write_artifact(
        cli,
        &format!("sweep-{s}.csv"),
        &res.to_csv(),
        &format!("{} levels against reference {}", res.levels.len(), res.ref_level),
    )?;
    let fit_line = match &res.fit {
        Some(f) => format!("decay fit exponent {:.3}", f.exponent),
        None => "no usable decay fit".to_string(),
    };
    write_artifact(cli, &format!("sweep-{s}.json"), &res.to_json(), &fit_line)?;
    let violations: Vec<usize> = res
        .levels
        .iter()
        .filter(|l| !l.bound_satisfied)
        .map(|l| l.level)
        .collect();
    if violations.is_empty() {
        println!(
            "sweep PASS: every level gap within its tail bound (worst gap {:.6e})",
            res.levels
                .iter()
                .map(|l| l.galerkin_sup)
                .fold(0.0_f64, f64::max)
        );
        Ok(0)
    } else {
        println!("sweep FAIL: bound violated at levels {violations:?}");
        Ok(1)
    }
}

// ---------------------------------------------------------------------------
// example

fn cmd_example(cli: &Cli, name: &str) -> CmdResult {
    let dim = cli.dim.unwrap_or(3);
    if dim == 0 {
        return Err(Failure::input("--dim must be at least 1"));
    }
    let p = match name {
        "simple" => hsaffine::params::simple_demo(dim),
        "generic" => hsaffine::params::generic_demo(dim),
        other => {
            return Err(Failure::input(format!(
                "unknown example '{other}' (expected 'simple' or 'generic')"
            )))
        }
    };
    write_artifact(
        cli,
        &format!("example-{}.json", stamp(cli)),
        &to_json_string(&p),
        &format!(
            "{name} parameter set, dim {dim}, {} constant-rate and {} state-dependent atoms",
            p.m.atoms.len(),
            p.mu.atoms.len()
        ),
    )?;
    Ok(0)
}
