//! Convergence-rate predictions, empirical rate measurement, local probes
//! of the iteration map, and a small benchmarking harness that lines the
//! solvers up against each other on equal terms.

use thiserror::Error;

use crate::linalg::{fd_step, sym_eigenvalues, Matrix, Vector};
use crate::problems::{CountingObjective, KnownMinimizer, Objective};
use crate::solvers::{
    annealed_solve, control_step, gd_solve, newton_solve, unified_solve, ControlWeight, GdParams,
    OcpParams, Trajectory,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("curvature at the reference point is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("not enough usable iterates to estimate a rate: have {have}, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("measured slope {measured:.6e} does not match predicted {predicted:.6e}")]
    SlopeMismatch { measured: f64, predicted: f64 },
    #[error("objective provides no third derivative at the requested point")]
    MissingThirdDerivative,
    #[error("step evaluation failed: {0}")]
    StepFailed(String),
}

/// Predicted linear contraction factor of the constant-depth iteration near
/// a minimizer with curvature `hess_at_star`: per curvature mode lambda the
/// factor is (r / (r + lambda))^(horizon+1), and the overall rate is the
/// slowest (largest) mode.
#[derive(Debug, Clone)]
pub struct ContractionConstant {
    pub overall: f64,
    pub per_mode: Vec<f64>,
}

pub fn contraction_constant(
    hess_at_star: &Matrix,
    r: f64,
    horizon: usize,
) -> Result<ContractionConstant, AnalysisError> {
    assert!(r > 0.0 && r.is_finite(), "weight must be positive");
    let eigs = sym_eigenvalues(hess_at_star);
    let min_eig = eigs[0];
    if min_eig <= 0.0 {
        return Err(AnalysisError::NotPositiveDefinite { min_eig });
    }
    let per_mode: Vec<f64> = eigs
        .iter()
        .map(|&lam| (r / (r + lam)).powi(horizon as i32 + 1))
        .collect();
    let overall = per_mode.iter().cloned().fold(0.0, f64::max);
    Ok(ContractionConstant { overall, per_mode })
}

/// Per-step contraction factors of a single annealed pass: step i of the
/// pass (i = 0..horizon) runs at depth horizon+1-i and contracts each
/// curvature mode by (r / (r + lambda))^(horizon+1-i). The whole pass
/// multiplies out to (r / (r + lambda))^((horizon+1)(horizon+2)/2).
#[derive(Debug, Clone)]
pub struct AnnealedFactors {
    /// `per_step[i][m]`: factor of pass step i on curvature mode m
    pub per_step: Vec<Vec<f64>>,
    /// product over the pass, one entry per curvature mode
    pub product_per_mode: Vec<f64>,
}

pub fn annealed_factors(
    hess_at_star: &Matrix,
    r: f64,
    horizon: usize,
) -> Result<AnnealedFactors, AnalysisError> {
    assert!(r > 0.0 && r.is_finite(), "weight must be positive");
    let eigs = sym_eigenvalues(hess_at_star);
    if eigs[0] <= 0.0 {
        return Err(AnalysisError::NotPositiveDefinite { min_eig: eigs[0] });
    }
    let per_step: Vec<Vec<f64>> = (0..=horizon)
        .map(|i| {
            let depth = (horizon + 1 - i) as i32;
            eigs.iter().map(|&lam| (r / (r + lam)).powi(depth)).collect()
        })
        .collect();
    let product_per_mode: Vec<f64> = (0..eigs.len())
        .map(|m| per_step.iter().map(|row| row[m]).product())
        .collect();
    Ok(AnnealedFactors {
        per_step,
        product_per_mode,
    })
}

/// Empirical linear rate of a trajectory against a known minimizer,
/// optionally paired with the predicted contraction constant.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// geometric-mean ratio of consecutive error norms over the sampled tail
    pub empirical_ratio: f64,
    pub theoretical_constant: Option<f64>,
    pub per_mode_constants: Vec<f64>,
    /// |empirical - theoretical| / theoretical, when a prediction is present
    pub relative_gap: Option<f64>,
    pub samples_used: usize,
}

/// Error floor: iterates closer to the minimizer than this (relative to 1)
/// are rounding noise and excluded from rate estimation.
const RATE_ERROR_FLOOR: f64 = 100.0 * f64::EPSILON;

pub fn empirical_rate(
    traj: &Trajectory,
    x_star: &Vector,
    tail: usize,
) -> Result<RateReport, AnalysisError> {
    assert!(tail >= 3, "rate estimates need at least 3 tail samples");
    let errors = traj.errors_to(x_star);
    // keep the prefix that is still above rounding noise
    let mut usable = 0;
    for &e in &errors {
        if e > RATE_ERROR_FLOOR {
            usable += 1;
        } else {
            break;
        }
    }
    let need = tail + 1;
    if usable < need {
        return Err(AnalysisError::InsufficientData { have: usable, need });
    }
    let window = &errors[usable - need..usable];
    let ratio = (window[tail] / window[0]).powf(1.0 / tail as f64);
    Ok(RateReport {
        empirical_ratio: ratio,
        theoretical_constant: None,
        per_mode_constants: Vec::new(),
        relative_gap: None,
        samples_used: tail,
    })
}

/// Full rate report: empirical tail rate plus the predicted contraction
/// constant for a constant-depth run at scalar weight `r`.
pub fn rate_report(
    traj: &Trajectory,
    minimizer: &KnownMinimizer,
    r: f64,
    horizon: usize,
    tail: usize,
) -> Result<RateReport, AnalysisError> {
    let mut report = empirical_rate(traj, &minimizer.x_star, tail)?;
    let theory = contraction_constant(&minimizer.hess_at_star, r, horizon)?;
    report.relative_gap = Some((report.empirical_ratio - theory.overall).abs() / theory.overall);
    report.theoretical_constant = Some(theory.overall);
    report.per_mode_constants = theory.per_mode;
    Ok(report)
}

/// Local probe of the one-dimensional iteration map
/// phi(t) = t - step(t) at a minimizer: its slope there is the contraction
/// constant, and its curvature is bounded by |f''' / f''| at the minimizer.
#[derive(Debug, Clone)]
pub struct StepMapProbe {
    pub slope_at_min: f64,
    pub slope_theory: f64,
    pub curvature_at_min: f64,
    /// |f'''(x*) / f''(x*)|; the measured curvature is strictly inside this
    /// bound whenever the third derivative is nonzero
    pub curvature_bound: f64,
}

/// Tolerance on the slope consistency check inside the probe.
pub const PROBE_SLOPE_TOL: f64 = 1e-6;

pub fn step_map_probe(
    obj: &dyn Objective,
    x_star: f64,
    r: f64,
    horizon: usize,
) -> Result<StepMapProbe, AnalysisError> {
    assert_eq!(obj.dim(), 1, "the probe is one-dimensional");
    let fpp = obj.hess(&Vector::scalar(x_star)).get(0, 0);
    if fpp <= 0.0 {
        return Err(AnalysisError::NotPositiveDefinite { min_eig: fpp });
    }
    let f3 = obj
        .third_scalar(x_star)
        .ok_or(AnalysisError::MissingThirdDerivative)?;
    let weight =
        ControlWeight::scalar(r).map_err(|e| AnalysisError::StepFailed(e.to_string()))?;
    let depth = horizon + 1;
    let phi = |t: f64| -> Result<f64, AnalysisError> {
        let step = control_step(obj, &Vector::scalar(t), &weight, depth)
            .map_err(|e| AnalysisError::StepFailed(e.to_string()))?;
        Ok(t - step[0])
    };
    let h = fd_step(x_star);
    let lo = phi(x_star - h)?;
    let mid = phi(x_star)?;
    let hi = phi(x_star + h)?;
    let slope = (hi - lo) / (2.0 * h);
    let curvature = (hi - 2.0 * mid + lo) / (h * h);
    let slope_theory = (r / (r + fpp)).powi(depth as i32);
    if (slope - slope_theory).abs() > PROBE_SLOPE_TOL {
        return Err(AnalysisError::SlopeMismatch {
            measured: slope,
            predicted: slope_theory,
        });
    }
    Ok(StepMapProbe {
        slope_at_min: slope,
        slope_theory,
        curvature_at_min: curvature,
        curvature_bound: (f3 / fpp).abs(),
    })
}

/// A solver choice plus its tuning, ready to run on any problem.
#[derive(Debug, Clone)]
pub enum SolverSpec {
    Unified(OcpParams),
    Annealed(OcpParams),
    Newton { grad_tol: f64, max_outer: usize },
    Gd(GdParams),
}

impl SolverSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SolverSpec::Unified(_) => "unified",
            SolverSpec::Annealed(_) => "annealed",
            SolverSpec::Newton { .. } => "newton",
            SolverSpec::Gd(_) => "gd",
        }
    }

    /// Human-readable identifier; kept free of commas so it can sit
    /// unquoted in a CSV cell.
    pub fn label(&self) -> String {
        match self {
            SolverSpec::Unified(p) | SolverSpec::Annealed(p) => {
                let weight = match &p.weight {
                    ControlWeight::Scalar(r) => format!("r={r}"),
                    ControlWeight::Full(_) => "R=matrix".to_string(),
                };
                format!("{}[{weight};N={}]", self.kind(), p.horizon)
            }
            SolverSpec::Newton { .. } => "newton".to_string(),
            SolverSpec::Gd(p) => format!("gd[lr={}]", p.lr),
        }
    }

    pub fn run(&self, obj: &dyn Objective, x0: &Vector) -> Trajectory {
        match self {
            SolverSpec::Unified(p) => unified_solve(obj, p, x0),
            SolverSpec::Annealed(p) => annealed_solve(obj, p, x0),
            SolverSpec::Newton {
                grad_tol,
                max_outer,
            } => newton_solve(obj, *grad_tol, *max_outer, x0),
            SolverSpec::Gd(p) => gd_solve(obj, p, x0),
        }
    }
}

/// One solver's run summary on a shared problem.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub solver: String,
    pub kind: &'static str,
    pub iterations: usize,
    pub grad_evals: usize,
    pub hess_evals: usize,
    /// triangular solves consumed: depth per step for the control-style
    /// solvers, one per step for the curvature baseline, none for gd
    pub linear_solves: usize,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub termination: String,
}

#[derive(Debug, Clone, Default)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, kind: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }
}

/// Runs every spec on the same problem from the same start and tabulates
/// work counts side by side, also handing back the full trajectories.
/// Specs run in parallel on the current thread pool; row order follows
/// spec order regardless of scheduling.
pub fn compare_with_trajectories(
    specs: &[SolverSpec],
    obj: &dyn Objective,
    x0: &Vector,
) -> (ComparisonTable, Vec<Trajectory>) {
    use rayon::prelude::*;
    let results: Vec<(ComparisonRow, Trajectory)> = specs
        .par_iter()
        .map(|spec| {
            let counting = CountingObjective::new(obj);
            let traj = spec.run(&counting, x0);
            let iterations = traj.steps();
            let linear_solves = match spec {
                SolverSpec::Unified(_) | SolverSpec::Annealed(_) => {
                    traj.diags.iter().map(|d| d.depth).sum()
                }
                SolverSpec::Newton { .. } => iterations,
                SolverSpec::Gd(_) => 0,
            };
            let row = ComparisonRow {
                solver: spec.label(),
                kind: spec.kind(),
                iterations,
                grad_evals: counting.grad_count(),
                hess_evals: counting.hess_count(),
                linear_solves,
                final_f: traj.final_f(),
                final_grad_norm: traj.final_grad_norm,
                termination: traj.termination.as_str().to_string(),
            };
            (row, traj)
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut trajectories = Vec::with_capacity(results.len());
    for (row, traj) in results {
        rows.push(row);
        trajectories.push(traj);
    }
    (ComparisonTable { rows }, trajectories)
}

/// Runs every spec on the same problem from the same start and tabulates
/// work counts side by side.
pub fn compare(specs: &[SolverSpec], obj: &dyn Objective, x0: &Vector) -> ComparisonTable {
    compare_with_trajectories(specs, obj, x0).0
}
