//! Command implementations behind the `ocopt` binary: solve, verify,
//! rates, list. Each command reads one TOML config, runs its pipeline on a
//! worker pool, writes CSV/JSON reports atomically, and reports its exit
//! code: 0 all good, 1 usage or config trouble, 2 a solver or check failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::analysis::{
    compare_with_trajectories, contraction_constant, empirical_rate, rate_report, step_map_probe,
    SolverSpec,
};
use crate::config::{
    ConfigError, ControlLawConfig, ExperimentConfig, RatesConfig, StepProbeConfig,
    TrajectoryCheckConfig, DEFAULT_RATE_TAIL,
};
use crate::linalg::Vector;
use crate::oracles::{
    check_control_law, solve_implicit, solve_ocp_bruteforce, solve_semi_implicit,
    CONTROL_LAW_TOL, TRAJECTORY_RESIDUAL_TOL,
};
use crate::problems::{Builtin, KnownMinimizer, Objective};
use crate::report::{
    comparison_csv, rate_grid_csv, trajectory_csv, verify_csv, write_atomic, ControlLawOut,
    ProblemEcho, RateGridRow, RateOut, RunReport, SolverRunSummary, StepProbeOut,
    TrajectoryCheckOut, VerifyOut,
};
use crate::solvers::{
    ControlWeight, OcpParams, Termination, Trajectory, DEFAULT_GRAD_TOL, DEFAULT_MAX_OUTER,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE_RECORDED: i32 = 2;

/// Max state distance allowed between the two trajectory systems on
/// quadratic problems, where their solutions coincide exactly.
pub const SEMI_AGREEMENT_TOL: f64 = 1e-8;

/// Curvature bounds at or below this are degenerate (quadratics); the probe
/// then records the curvature without gating on it.
const CURVATURE_BOUND_FLOOR: f64 = 1e-12;

/// Desk-scale limits of the brute-force reference solver.
const ORACLE_MAX_HORIZON: usize = 10;
const ORACLE_MAX_DIM: usize = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatOpt {
    Csv,
    Json,
    Both,
}

impl FormatOpt {
    pub fn wants_csv(self) -> bool {
        matches!(self, FormatOpt::Csv | FormatOpt::Both)
    }
    pub fn wants_json(self) -> bool {
        matches!(self, FormatOpt::Json | FormatOpt::Both)
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct GlobalOpts {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub format: Option<FormatOpt>,
}

fn with_pool<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    Ok(pool.install(f))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

struct Setup {
    cfg: ExperimentConfig,
    problem: Builtin,
    x0: Vector,
    out_dir: PathBuf,
    csv: bool,
    json: bool,
    seed: Option<u64>,
}

impl Setup {
    fn echo(&self) -> ProblemEcho {
        ProblemEcho {
            name: self.cfg.problem.name.clone(),
            params: self.cfg.problem.params.clone(),
            dim: self.problem.dim(),
            x0: self.x0.as_slice().to_vec(),
        }
    }
}

fn setup(config_path: &Path, opts: &GlobalOpts) -> Result<Setup, CliError> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let problem = cfg.build_problem(opts.seed)?;
    let x0 = cfg.resolve_x0(problem.dim())?;
    let (mut csv, mut json) = cfg.formats()?;
    if let Some(f) = opts.format {
        csv = f.wants_csv();
        json = f.wants_json();
    }
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(cfg.out_dir()));
    let seed = cfg.resolved_seed(opts.seed);
    Ok(Setup {
        cfg,
        problem,
        x0,
        out_dir,
        csv,
        json,
        seed,
    })
}

fn scalar_weight(r: f64, what: &str) -> Result<ControlWeight, CliError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid(format!("{what}: r must be a positive finite number")));
    }
    ControlWeight::scalar(r).map_err(|e| invalid(e.to_string()))
}

fn rate_for(spec: &SolverSpec, traj: &Trajectory, m: &KnownMinimizer) -> Option<RateOut> {
    if let SolverSpec::Unified(p) = spec {
        if let ControlWeight::Scalar(r) = p.weight {
            if let Ok(rep) = rate_report(traj, m, r, p.horizon, DEFAULT_RATE_TAIL) {
                return Some((&rep).into());
            }
        }
    }
    empirical_rate(traj, &m.x_star, DEFAULT_RATE_TAIL)
        .ok()
        .map(|r| (&r).into())
}

/// Runs every configured solver on the configured problem, writing one
/// trajectory CSV per solver, a comparison CSV, and a JSON report.
pub fn cmd_solve(config_path: &Path, opts: &GlobalOpts) -> Result<i32, CliError> {
    let t_total = Instant::now();
    let s = setup(config_path, opts)?;
    let specs = s.cfg.build_solvers(s.problem.dim())?;
    fs::create_dir_all(&s.out_dir)?;

    let t_run = Instant::now();
    let (table, trajectories) = with_pool(opts.jobs, || {
        compare_with_trajectories(&specs, &s.problem, &s.x0)
    })?;
    let run_ms = ms_since(t_run);

    let mut report = RunReport::new("solve", s.seed, s.echo());
    let minimizer = s.problem.minimizer();
    let mut any_failure = false;
    for (i, (spec, traj)) in specs.iter().zip(&trajectories).enumerate() {
        let csv_name = format!("solver_{i}_{}.csv", spec.kind());
        if s.csv {
            write_atomic(&s.out_dir.join(&csv_name), &trajectory_csv(traj))?;
        }
        if traj.termination == Termination::StepFailure {
            any_failure = true;
        }
        let rate = minimizer.as_ref().and_then(|m| rate_for(spec, traj, m));
        println!(
            "{}: {} iterations, termination {}, f = {:.6e}, |grad| = {:.3e}",
            spec.label(),
            traj.steps(),
            traj.termination.as_str(),
            traj.final_f(),
            traj.final_grad_norm
        );
        report.solver_runs.push(SolverRunSummary {
            label: spec.label(),
            kind: spec.kind().to_string(),
            iterations: traj.steps(),
            termination: traj.termination.as_str().to_string(),
            final_f: traj.final_f(),
            final_grad_norm: traj.final_grad_norm,
            total_retries: traj.total_retries(),
            csv: if s.csv { Some(csv_name) } else { None },
            rate,
            failure_detail: traj.failure_detail.clone(),
        });
    }
    report.comparison = table.rows.iter().map(Into::into).collect();
    if s.csv {
        write_atomic(&s.out_dir.join("comparison.csv"), &comparison_csv(&table))?;
    }
    report.timings_ms.insert("solve".to_string(), run_ms);
    report
        .timings_ms
        .insert("total".to_string(), ms_since(t_total));
    if s.json {
        write_atomic(&s.out_dir.join("report.json"), &report.render_json())?;
    }
    println!("outputs in {}", s.out_dir.display());
    Ok(if any_failure {
        EXIT_FAILURE_RECORDED
    } else {
        EXIT_OK
    })
}

fn check_oracle_scale(s: &Setup, horizons: &[usize], section: &str) -> Result<(), CliError> {
    if s.problem.dim() > ORACLE_MAX_DIM {
        return Err(invalid(format!(
            "{section}: reference solvers handle dimension <= {ORACLE_MAX_DIM}"
        )));
    }
    if let Some(&h) = horizons.iter().find(|&&h| h > ORACLE_MAX_HORIZON) {
        return Err(invalid(format!(
            "{section}: horizon {h} exceeds the reference-solver limit {ORACLE_MAX_HORIZON}"
        )));
    }
    Ok(())
}

fn run_control_law(
    s: &Setup,
    cl: &ControlLawConfig,
    out: &mut VerifyOut,
) -> Result<(), CliError> {
    check_oracle_scale(s, &cl.horizons, "verify.control_law")?;
    let weight = scalar_weight(cl.r.unwrap_or(1.0), "verify.control_law")?;
    let conventions: Vec<bool> = match cl.half_weight {
        Some(b) => vec![b],
        None => vec![true, false],
    };
    for &h in &cl.horizons {
        for &hw in &conventions {
            let solved = solve_ocp_bruteforce(&s.problem, &weight, h, &s.x0, hw).and_then(
                |sol| check_control_law(&sol, &s.problem, &weight),
            );
            match solved {
                Ok(law) => {
                    let pass = if hw {
                        law.max_violation <= CONTROL_LAW_TOL
                    } else {
                        law.max_violation_double_weight <= CONTROL_LAW_TOL
                            && law.factor2_signature
                    };
                    out.control_law.push(ControlLawOut {
                        horizon: h,
                        half_weight: hw,
                        max_violation: law.max_violation,
                        max_violation_double_weight: law.max_violation_double_weight,
                        factor2_signature: law.factor2_signature,
                        pass,
                    });
                }
                Err(e) => out
                    .errors
                    .push(format!("control_law horizon {h} half_weight {hw}: {e}")),
            }
        }
    }
    Ok(())
}

fn run_trajectory_checks(
    s: &Setup,
    tc: &TrajectoryCheckConfig,
    semi: bool,
    out: &mut VerifyOut,
) -> Result<(), CliError> {
    let section = if semi {
        "verify.semi_implicit"
    } else {
        "verify.implicit"
    };
    check_oracle_scale(s, &tc.horizons, section)?;
    let weight = scalar_weight(tc.r.unwrap_or(1.0), section)?;
    let quadratic = s.problem.name().starts_with("quadratic");
    for &h in &tc.horizons {
        let result = if semi {
            solve_semi_implicit(&s.problem, &weight, h, &s.x0)
        } else {
            solve_implicit(&s.problem, &weight, h, &s.x0)
        };
        match result {
            Ok(t) => {
                let mut pass = t.residual <= TRAJECTORY_RESIDUAL_TOL;
                let mut agreement = None;
                if semi {
                    if let Ok(other) = solve_implicit(&s.problem, &weight, h, &s.x0) {
                        let diff = t
                            .states
                            .iter()
                            .zip(&other.states)
                            .map(|(a, b)| a.sub(b).norm_inf())
                            .fold(0.0f64, f64::max);
                        agreement = Some(diff);
                        // the linearized system is exact on quadratics, so
                        // the two trajectories must coincide there
                        if quadratic {
                            pass = pass && diff <= SEMI_AGREEMENT_TOL;
                        }
                    }
                }
                let rows = if semi {
                    &mut out.semi_implicit
                } else {
                    &mut out.implicit
                };
                rows.push(TrajectoryCheckOut {
                    horizon: h,
                    residual: t.residual,
                    iterations_used: t.iterations_used,
                    agreement,
                    pass,
                });
            }
            Err(e) => out.errors.push(format!(
                "{} horizon {h}: {e}",
                if semi { "semi_implicit" } else { "implicit" }
            )),
        }
    }
    Ok(())
}

fn run_step_probe(s: &Setup, sp: &StepProbeConfig, out: &mut VerifyOut) -> Result<(), CliError> {
    if s.problem.dim() != 1 {
        return Err(invalid(
            "verify.step_probe: the probe needs a one-dimensional problem",
        ));
    }
    let minimizer = s
        .problem
        .minimizer()
        .ok_or_else(|| invalid("verify.step_probe: the problem has no known minimizer"))?;
    let x_star = minimizer.x_star[0];
    for &r in &sp.r_grid {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid("verify.step_probe: r_grid entries must be positive"));
        }
    }
    for &r in &sp.r_grid {
        for &n in &sp.n_grid {
            match step_map_probe(&s.problem, x_star, r, n) {
                Ok(p) => {
                    let pass = p.curvature_bound <= CURVATURE_BOUND_FLOOR
                        || p.curvature_at_min.abs() < p.curvature_bound;
                    out.step_probe.push(StepProbeOut::from_probe(r, n, &p, pass));
                }
                Err(e) => out.step_probe.push(StepProbeOut {
                    r,
                    horizon: n,
                    slope_at_min: None,
                    slope_theory: None,
                    curvature_at_min: None,
                    curvature_bound: None,
                    pass: false,
                    note: Some(e.to_string()),
                }),
            }
        }
    }
    Ok(())
}

/// Checks the solver machinery against the independent reference solvers:
/// the control-law stationarity conditions under both weight conventions,
/// the two coupled trajectory systems, and the local probe of the step map.
pub fn cmd_verify(config_path: &Path, opts: &GlobalOpts) -> Result<i32, CliError> {
    let t_total = Instant::now();
    let s = setup(config_path, opts)?;
    let vcfg = s
        .cfg
        .verify
        .clone()
        .ok_or_else(|| invalid("config has no [verify] section"))?;
    if vcfg.control_law.is_none()
        && vcfg.implicit.is_none()
        && vcfg.semi_implicit.is_none()
        && vcfg.step_probe.is_none()
    {
        return Err(invalid("the [verify] section configures no checks"));
    }
    fs::create_dir_all(&s.out_dir)?;

    let t_run = Instant::now();
    let mut out = VerifyOut::default();
    if let Some(cl) = &vcfg.control_law {
        run_control_law(&s, cl, &mut out)?;
    }
    if let Some(tc) = &vcfg.implicit {
        run_trajectory_checks(&s, tc, false, &mut out)?;
    }
    if let Some(tc) = &vcfg.semi_implicit {
        run_trajectory_checks(&s, tc, true, &mut out)?;
    }
    if let Some(sp) = &vcfg.step_probe {
        run_step_probe(&s, sp, &mut out)?;
    }
    let run_ms = ms_since(t_run);

    out.overall_pass = out.errors.is_empty()
        && out.control_law.iter().all(|r| r.pass)
        && out.implicit.iter().all(|r| r.pass)
        && out.semi_implicit.iter().all(|r| r.pass)
        && out.step_probe.iter().all(|r| r.pass);

    for (section, total, passed) in [
        (
            "control_law",
            out.control_law.len(),
            out.control_law.iter().filter(|r| r.pass).count(),
        ),
        (
            "implicit",
            out.implicit.len(),
            out.implicit.iter().filter(|r| r.pass).count(),
        ),
        (
            "semi_implicit",
            out.semi_implicit.len(),
            out.semi_implicit.iter().filter(|r| r.pass).count(),
        ),
        (
            "step_probe",
            out.step_probe.len(),
            out.step_probe.iter().filter(|r| r.pass).count(),
        ),
    ] {
        if total > 0 {
            println!("{section}: {passed}/{total} checks pass");
        }
    }
    for e in &out.errors {
        eprintln!("check failed to run: {e}");
    }
    println!(
        "verify: {}",
        if out.overall_pass { "PASS" } else { "FAIL" }
    );

    if s.csv {
        write_atomic(&s.out_dir.join("verify.csv"), &verify_csv(&out))?;
    }
    let overall_pass = out.overall_pass;
    let mut report = RunReport::new("verify", s.seed, s.echo());
    report.verify = Some(out);
    report.timings_ms.insert("verify".to_string(), run_ms);
    report
        .timings_ms
        .insert("total".to_string(), ms_since(t_total));
    if s.json {
        write_atomic(&s.out_dir.join("report.json"), &report.render_json())?;
    }
    Ok(if overall_pass {
        EXIT_OK
    } else {
        EXIT_FAILURE_RECORDED
    })
}

fn rate_cell(
    s: &Setup,
    m: &KnownMinimizer,
    r: f64,
    horizon: usize,
    tail: usize,
    grad_tol: f64,
    max_outer: usize,
) -> RateGridRow {
    let params = OcpParams::new(ControlWeight::scalar(r).expect("validated"), horizon)
        .with_grad_tol(grad_tol)
        .with_max_outer(max_outer);
    let spec = SolverSpec::Unified(params);
    let traj = spec.run(&s.problem, &s.x0);
    let termination = traj.termination.as_str().to_string();
    match rate_report(&traj, m, r, horizon, tail) {
        Ok(rep) => RateGridRow {
            solver: spec.label(),
            r,
            horizon,
            theoretical: rep.theoretical_constant,
            empirical: Some(rep.empirical_ratio),
            relative_gap: rep.relative_gap,
            samples: Some(rep.samples_used),
            iterations: traj.steps(),
            termination,
            note: None,
        },
        Err(e) => RateGridRow {
            solver: spec.label(),
            r,
            horizon,
            theoretical: contraction_constant(&m.hess_at_star, r, horizon)
                .ok()
                .map(|c| c.overall),
            empirical: None,
            relative_gap: None,
            samples: None,
            iterations: traj.steps(),
            termination,
            note: Some(e.to_string()),
        },
    }
}

/// Sweeps the (r, N) grid with the constant-depth solver and tabulates
/// predicted against measured contraction rates, one row per cell. When the
/// config also lists solvers, their comparison table is included.
pub fn cmd_rates(config_path: &Path, opts: &GlobalOpts) -> Result<i32, CliError> {
    let t_total = Instant::now();
    let s = setup(config_path, opts)?;
    let rcfg: RatesConfig = s
        .cfg
        .rates
        .clone()
        .ok_or_else(|| invalid("config has no [rates] section"))?;
    let minimizer = s
        .problem
        .minimizer()
        .ok_or_else(|| invalid("rates needs a problem with a known minimizer"))?;
    if rcfg.r_grid.is_empty() || rcfg.n_grid.is_empty() {
        return Err(invalid("rates: r_grid and n_grid must be non-empty"));
    }
    for &r in &rcfg.r_grid {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid("rates: r_grid entries must be positive"));
        }
    }
    let tail = rcfg.tail();
    if tail < 3 {
        return Err(invalid("rates: tail must be at least 3"));
    }
    let grad_tol = rcfg.grad_tol.unwrap_or(DEFAULT_GRAD_TOL);
    if !(grad_tol.is_finite() && grad_tol > 0.0) {
        return Err(invalid("rates: grad_tol must be a positive finite number"));
    }
    let max_outer = rcfg.max_outer.unwrap_or(DEFAULT_MAX_OUTER);
    if max_outer == 0 {
        return Err(invalid("rates: max_outer must be at least 1"));
    }
    fs::create_dir_all(&s.out_dir)?;

    let mut cells = Vec::new();
    for &r in &rcfg.r_grid {
        for &n in &rcfg.n_grid {
            cells.push((r, n));
        }
    }
    let t_run = Instant::now();
    let rows: Vec<RateGridRow> = with_pool(opts.jobs, || {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|&(r, n)| rate_cell(&s, &minimizer, r, n, tail, grad_tol, max_outer))
            .collect()
    })?;
    let grid_ms = ms_since(t_run);

    let mut any_failure = rows.iter().any(|row| row.termination == "step_failure");
    let mut report = RunReport::new("rates", s.seed, s.echo());

    if !s.cfg.solvers.is_empty() {
        let specs = s.cfg.build_solvers(s.problem.dim())?;
        let (table, _) = with_pool(opts.jobs, || {
            compare_with_trajectories(&specs, &s.problem, &s.x0)
        })?;
        any_failure |= table.rows.iter().any(|r| r.termination == "step_failure");
        if s.csv {
            write_atomic(&s.out_dir.join("comparison.csv"), &comparison_csv(&table))?;
        }
        report.comparison = table.rows.iter().map(Into::into).collect();
    }

    for row in &rows {
        println!(
            "{}: theory {} measured {} ({} iterations, {})",
            row.solver,
            row.theoretical
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_else(|| "-".to_string()),
            row.empirical
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_else(|| "-".to_string()),
            row.iterations,
            row.note.as_deref().unwrap_or(&row.termination),
        );
    }
    report.rate_grid = rows;
    if s.csv {
        write_atomic(&s.out_dir.join("rates.csv"), &rate_grid_csv(&report.rate_grid))?;
    }
    report.timings_ms.insert("rates".to_string(), grid_ms);
    report
        .timings_ms
        .insert("total".to_string(), ms_since(t_total));
    if s.json {
        write_atomic(&s.out_dir.join("report.json"), &report.render_json())?;
    }
    println!("outputs in {}", s.out_dir.display());
    Ok(if any_failure {
        EXIT_FAILURE_RECORDED
    } else {
        EXIT_OK
    })
}

/// Builtin problems with their parameters, and the solver kinds.
pub const PROBLEM_LISTING: &[(&str, &str, &str)] = &[
    (
        "quadratic1d",
        "a (>0, required), b (default 0)",
        "f(x) = (a/2)(x-b)^2",
    ),
    (
        "quadratic_nd",
        "lambda1..lambdaK (>0, required), seed (default 0), b (default 0)",
        "rotated quadratic with the given eigenvalue spectrum",
    ),
    (
        "quartic_shift",
        "(none)",
        "f(x) = x^3 + x; zero curvature at x = 0, no minimizer",
    ),
    ("rosenbrock", "n (integer, 2..=64)", "chained Rosenbrock valley"),
    (
        "cubic_perturbed_quadratic",
        "c (required, finite)",
        "f(x) = x^2/2 + c x^3; local minimizer at 0",
    ),
];

pub const SOLVER_LISTING: &[(&str, &str)] = &[
    (
        "unified",
        "constant-depth control recursion: one gradient + one curvature evaluation per step",
    ),
    (
        "annealed",
        "single pass at depths N+1 down to 1; set repeat_passes to keep cycling",
    ),
    ("newton", "plain curvature steps; fails on non-PD curvature"),
    ("gd", "fixed-rate gradient descent baseline"),
];

/// Prints the builtin problems and solver kinds.
pub fn cmd_list(format: Option<FormatOpt>) -> Result<i32, CliError> {
    if format == Some(FormatOpt::Json) {
        let doc = serde_json::json!({
            "problems": PROBLEM_LISTING.iter().map(|(name, params, about)| {
                serde_json::json!({"name": name, "params": params, "about": about})
            }).collect::<Vec<_>>(),
            "solvers": SOLVER_LISTING.iter().map(|(name, about)| {
                serde_json::json!({"name": name, "about": about})
            }).collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("listing serializes"));
        return Ok(EXIT_OK);
    }
    println!("problems:");
    for (name, params, about) in PROBLEM_LISTING {
        println!("  {name:<26} {about}");
        println!("  {:26} params: {params}", "");
    }
    println!("solvers:");
    for (name, about) in SOLVER_LISTING {
        println!("  {name:<26} {about}");
    }
    Ok(EXIT_OK)
}
