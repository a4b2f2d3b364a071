//! The iteration schemes. Each outer step solves a small regularized system
//! around the current point; the `depth` of a step controls how many levels
//! of the backward control recursion are folded into it.
//!
//! Two schedules are provided and deliberately kept apart:
//! `unified_solve` takes every step at constant depth N+1, while
//! `annealed_solve` walks one horizon pass with shrinking depths
//! N+1, N, ..., 1 (optionally repeating passes until tolerance).

use thiserror::Error;

use crate::linalg::{Cholesky, Matrix, NumericError, Vector};
use crate::problems::Objective;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error(
        "step matrix not positive definite at iterate (pivot {pivot_index} = {pivot_value:.6e})"
    )]
    StepMatrixNotPd {
        pivot_index: usize,
        pivot_value: f64,
        /// iterate at which the step was attempted
        at: Vector,
    },
    #[error("parameter out of range: {0}")]
    BadParam(String),
}

/// Control-energy weight R: either r*I or a full symmetric positive definite
/// matrix. The scalar form is the one the rate theory speaks about.
#[derive(Debug, Clone)]
pub enum ControlWeight {
    Scalar(f64),
    Full(Matrix),
}

impl ControlWeight {
    pub fn scalar(r: f64) -> Result<Self, SolverError> {
        if r <= 0.0 || !r.is_finite() {
            return Err(SolverError::BadParam(format!(
                "control weight must be positive and finite, got {r}"
            )));
        }
        Ok(ControlWeight::Scalar(r))
    }

    /// Requires a symmetric positive definite matrix (checked by factorization).
    pub fn full(m: Matrix) -> Result<Self, SolverError> {
        if !m.is_symmetric() {
            return Err(SolverError::BadParam(
                "control weight matrix must be symmetric".into(),
            ));
        }
        if let Err(e) = Cholesky::factor(&m) {
            return Err(SolverError::BadParam(format!(
                "control weight matrix must be positive definite: {e}"
            )));
        }
        Ok(ControlWeight::Full(m))
    }

    pub fn scaled(&self, factor: f64) -> ControlWeight {
        match self {
            ControlWeight::Scalar(r) => ControlWeight::Scalar(r * factor),
            ControlWeight::Full(m) => {
                let mut scaled = m.clone();
                for i in 0..m.dim() {
                    for j in 0..m.dim() {
                        scaled.set(i, j, m.get(i, j) * factor);
                    }
                }
                ControlWeight::Full(scaled.symmetrized())
            }
        }
    }

    pub(crate) fn added_to(&self, h: &Matrix) -> Matrix {
        match self {
            ControlWeight::Scalar(r) => h.add_scaled_identity(*r),
            ControlWeight::Full(m) => h.add(m),
        }
    }

    pub(crate) fn apply(&self, v: &Vector) -> Vector {
        match self {
            ControlWeight::Scalar(r) => v.scaled(*r),
            ControlWeight::Full(m) => m.matvec(v),
        }
    }

    pub fn matrix(&self, n: usize) -> Matrix {
        match self {
            ControlWeight::Scalar(r) => Matrix::scaled_identity(n, *r),
            ControlWeight::Full(m) => m.clone(),
        }
    }

    pub fn dim_matches(&self, n: usize) -> bool {
        match self {
            ControlWeight::Scalar(_) => true,
            ControlWeight::Full(m) => m.dim() == n,
        }
    }
}

/// What to do when the step matrix R + H fails to factor: inflate R by
/// `growth` and retry, up to `max_retries` times within the same step.
#[derive(Debug, Clone)]
pub struct AdaptPolicy {
    pub enabled: bool,
    pub growth: f64,
    pub max_retries: usize,
}

impl Default for AdaptPolicy {
    fn default() -> Self {
        AdaptPolicy {
            enabled: true,
            growth: 10.0,
            max_retries: 6,
        }
    }
}

impl AdaptPolicy {
    pub fn disabled() -> Self {
        AdaptPolicy {
            enabled: false,
            growth: 10.0,
            max_retries: 0,
        }
    }
}

pub const DEFAULT_GRAD_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_OUTER: usize = 10_000;

/// Parameters shared by the control-derived solvers.
#[derive(Debug, Clone)]
pub struct OcpParams {
    pub weight: ControlWeight,
    /// Horizon N >= 0; one pass has N+1 steps and the deepest step has depth N+1.
    pub horizon: usize,
    pub grad_tol: f64,
    pub max_outer: usize,
    pub adapt: AdaptPolicy,
    /// annealed_solve only: start a fresh pass while tolerance is unmet.
    pub repeat_passes: bool,
}

impl OcpParams {
    pub fn new(weight: ControlWeight, horizon: usize) -> Self {
        OcpParams {
            weight,
            horizon,
            grad_tol: DEFAULT_GRAD_TOL,
            max_outer: DEFAULT_MAX_OUTER,
            adapt: AdaptPolicy::default(),
            repeat_passes: true,
        }
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        assert!(tol > 0.0 && tol.is_finite());
        self.grad_tol = tol;
        self
    }

    pub fn with_max_outer(mut self, cap: usize) -> Self {
        assert!(cap >= 1);
        self.max_outer = cap;
        self
    }

    pub fn with_adapt(mut self, adapt: AdaptPolicy) -> Self {
        self.adapt = adapt;
        self
    }

    pub fn with_repeat_passes(mut self, repeat: bool) -> Self {
        self.repeat_passes = repeat;
        self
    }
}

/// Plain gradient descent baseline.
#[derive(Debug, Clone)]
pub struct GdParams {
    pub lr: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
}

impl GdParams {
    pub fn new(lr: f64) -> Self {
        assert!(lr > 0.0 && lr.is_finite());
        GdParams {
            lr,
            grad_tol: DEFAULT_GRAD_TOL,
            max_outer: DEFAULT_MAX_OUTER,
        }
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        assert!(tol > 0.0 && tol.is_finite());
        self.grad_tol = tol;
        self
    }

    pub fn with_max_outer(mut self, cap: usize) -> Self {
        assert!(cap >= 1);
        self.max_outer = cap;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// gradient norm reached the tolerance
    GradTol,
    /// iteration budget exhausted (for a single annealed pass: pass complete)
    MaxOuter,
    /// a step could not be produced; the trajectory up to the failure stands
    StepFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::MaxOuter => "max_outer",
            Termination::StepFailure => "step_failure",
        }
    }
}

/// Per-step record: the step actually taken, its recursion depth, how many
/// weight inflations were needed, and the gradient norm at the departure point.
#[derive(Debug, Clone)]
pub struct StepDiag {
    pub step: Vector,
    pub depth: usize,
    pub retries: usize,
    pub grad_norm: f64,
}

/// A full run: `iterates[0]` is the start point and `diags[k]` describes the
/// move from `iterates[k]` to `iterates[k+1]`, so `diags` is one shorter
/// than `iterates`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub iterates: Vec<Vector>,
    pub diags: Vec<StepDiag>,
    pub f_values: Vec<f64>,
    pub termination: Termination,
    pub final_grad_norm: f64,
    pub failure_detail: Option<String>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.diags.len()
    }

    pub fn final_iterate(&self) -> &Vector {
        self.iterates.last().expect("trajectory is never empty")
    }

    pub fn final_f(&self) -> f64 {
        *self.f_values.last().expect("trajectory is never empty")
    }

    pub fn total_retries(&self) -> usize {
        self.diags.iter().map(|d| d.retries).sum()
    }

    /// Distances of every iterate to a reference point.
    pub fn errors_to(&self, x_star: &Vector) -> Vec<f64> {
        self.iterates.iter().map(|x| x.sub(x_star).norm2()).collect()
    }
}

/// One multi-level step of the backward control recursion at a frozen point:
///
///   g_1 = (R + H)^-1 grad
///   g_{l+1} = (R + H)^-1 (grad + R g_l)
///
/// evaluated to `depth` levels with the gradient and Hessian taken once at x.
/// The factorization is likewise done once and reused for every level.
pub fn control_step(
    obj: &dyn Objective,
    x: &Vector,
    weight: &ControlWeight,
    depth: usize,
) -> Result<Vector, SolverError> {
    let grad = obj.grad(x);
    let hess = obj.hess(x);
    control_step_inner(&grad, &hess, weight, depth).map_err(|e| promote(e, x))
}

fn promote(e: NumericError, x: &Vector) -> SolverError {
    match e {
        NumericError::NotPositiveDefinite {
            pivot_index,
            pivot_value,
        } => SolverError::StepMatrixNotPd {
            pivot_index,
            pivot_value,
            at: x.clone(),
        },
        other => SolverError::BadParam(format!("unexpected numeric failure: {other}")),
    }
}

fn control_step_inner(
    grad: &Vector,
    hess: &Matrix,
    weight: &ControlWeight,
    depth: usize,
) -> Result<Vector, NumericError> {
    assert!(depth >= 1, "recursion depth must be at least 1");
    let system = weight.added_to(hess);
    let chol = Cholesky::factor(&system)?;
    let mut g = chol.solve(grad);
    for _ in 1..depth {
        g = chol.solve(&grad.add(&weight.apply(&g)));
    }
    Ok(g)
}

/// Retries a failed step with R scaled by growth^j, j = 1..max_retries.
/// The Hessian from the caller is reused: retries cost no new evaluations.
fn step_with_retry(
    grad: &Vector,
    hess: &Matrix,
    x: &Vector,
    weight: &ControlWeight,
    depth: usize,
    adapt: &AdaptPolicy,
) -> Result<(Vector, usize), SolverError> {
    let mut attempt = 0usize;
    loop {
        let scaled;
        let w = if attempt == 0 {
            weight
        } else {
            scaled = weight.scaled(adapt.growth.powi(attempt as i32));
            &scaled
        };
        match control_step_inner(grad, hess, w, depth) {
            Ok(g) if g.all_finite() => return Ok((g, attempt)),
            Ok(_) => {
                return Err(SolverError::BadParam(
                    "step solve produced non-finite values".into(),
                ))
            }
            Err(e) => {
                if !adapt.enabled || attempt >= adapt.max_retries {
                    return Err(promote(e, x));
                }
                attempt += 1;
            }
        }
    }
}

/// Shared outer loop: the schedule maps the global step counter to a depth.
fn run_schedule<S: Fn(usize) -> usize>(
    obj: &dyn Objective,
    params: &OcpParams,
    x0: &Vector,
    schedule: S,
    step_cap: usize,
) -> Trajectory {
    assert_eq!(obj.dim(), x0.dim(), "start point dimension mismatch");
    assert!(
        params.weight.dim_matches(obj.dim()),
        "control weight dimension mismatch"
    );
    let mut iterates = vec![x0.clone()];
    let mut f_values = vec![obj.eval(x0)];
    let mut diags: Vec<StepDiag> = Vec::new();
    let mut failure_detail = None;
    let (termination, final_grad_norm) = loop {
        let x = iterates.last().unwrap().clone();
        let grad = obj.grad(&x);
        let grad_norm = grad.norm2();
        if !grad_norm.is_finite() {
            failure_detail = Some("non-finite gradient".into());
            break (Termination::StepFailure, grad_norm);
        }
        if grad_norm <= params.grad_tol {
            break (Termination::GradTol, grad_norm);
        }
        if diags.len() >= step_cap {
            break (Termination::MaxOuter, grad_norm);
        }
        let depth = schedule(diags.len());
        let hess = obj.hess(&x);
        match step_with_retry(&grad, &hess, &x, &params.weight, depth, &params.adapt) {
            Ok((step, retries)) => {
                let next = x.sub(&step);
                let f_next = if next.all_finite() {
                    obj.eval(&next)
                } else {
                    f64::NAN
                };
                if !next.all_finite() || !f_next.is_finite() {
                    failure_detail = Some("iterate left the finite range".into());
                    break (Termination::StepFailure, grad_norm);
                }
                diags.push(StepDiag {
                    step,
                    depth,
                    retries,
                    grad_norm,
                });
                iterates.push(next);
                f_values.push(f_next);
            }
            Err(e) => {
                failure_detail = Some(e.to_string());
                break (Termination::StepFailure, grad_norm);
            }
        }
    };
    Trajectory {
        iterates,
        diags,
        f_values,
        termination,
        final_grad_norm,
        failure_detail,
    }
}

/// Fixed-depth scheme: every step uses the full depth N+1.
pub fn unified_solve(obj: &dyn Objective, params: &OcpParams, x0: &Vector) -> Trajectory {
    let depth = params.horizon + 1;
    run_schedule(obj, params, x0, |_| depth, params.max_outer)
}

/// Horizon-pass scheme: step k of a pass uses depth N+1-k, down to depth 1 at
/// the end of the pass. With `repeat_passes` the pass restarts from the last
/// iterate until the gradient tolerance or the outer budget is hit; otherwise
/// a single pass is taken.
pub fn annealed_solve(obj: &dyn Objective, params: &OcpParams, x0: &Vector) -> Trajectory {
    let pass = params.horizon + 1;
    let cap = if params.repeat_passes {
        params.max_outer
    } else {
        params.max_outer.min(pass)
    };
    run_schedule(obj, params, x0, |k| pass - (k % pass), cap)
}

/// Newton baseline: x <- x - H^-1 grad, with no weight and no rescue. The
/// step fails outright wherever the Hessian is not positive definite.
pub fn newton_solve(
    obj: &dyn Objective,
    grad_tol: f64,
    max_outer: usize,
    x0: &Vector,
) -> Trajectory {
    assert!(grad_tol > 0.0);
    let mut iterates = vec![x0.clone()];
    let mut f_values = vec![obj.eval(x0)];
    let mut diags: Vec<StepDiag> = Vec::new();
    let mut failure_detail = None;
    let (termination, final_grad_norm) = loop {
        let x = iterates.last().unwrap().clone();
        let grad = obj.grad(&x);
        let grad_norm = grad.norm2();
        if !grad_norm.is_finite() {
            failure_detail = Some("non-finite gradient".into());
            break (Termination::StepFailure, grad_norm);
        }
        if grad_norm <= grad_tol {
            break (Termination::GradTol, grad_norm);
        }
        if diags.len() >= max_outer {
            break (Termination::MaxOuter, grad_norm);
        }
        let hess = obj.hess(&x);
        match crate::linalg::solve_spd(&hess, &grad) {
            Ok(step) if step.all_finite() => {
                let next = x.sub(&step);
                let f_next = if next.all_finite() {
                    obj.eval(&next)
                } else {
                    f64::NAN
                };
                if !next.all_finite() || !f_next.is_finite() {
                    failure_detail = Some("iterate left the finite range".into());
                    break (Termination::StepFailure, grad_norm);
                }
                diags.push(StepDiag {
                    step,
                    depth: 1,
                    retries: 0,
                    grad_norm,
                });
                iterates.push(next);
                f_values.push(f_next);
            }
            Ok(_) => {
                failure_detail = Some("newton solve produced non-finite values".into());
                break (Termination::StepFailure, grad_norm);
            }
            Err(e) => {
                failure_detail = Some(e.to_string());
                break (Termination::StepFailure, grad_norm);
            }
        }
    };
    Trajectory {
        iterates,
        diags,
        f_values,
        termination,
        final_grad_norm,
        failure_detail,
    }
}

/// Gradient descent baseline: x <- x - lr * grad.
pub fn gd_solve(obj: &dyn Objective, params: &GdParams, x0: &Vector) -> Trajectory {
    let mut iterates = vec![x0.clone()];
    let mut f_values = vec![obj.eval(x0)];
    let mut diags: Vec<StepDiag> = Vec::new();
    let mut failure_detail = None;
    let (termination, final_grad_norm) = loop {
        let x = iterates.last().unwrap().clone();
        let grad = obj.grad(&x);
        let grad_norm = grad.norm2();
        if !grad_norm.is_finite() {
            failure_detail = Some("non-finite gradient".into());
            break (Termination::StepFailure, grad_norm);
        }
        if grad_norm <= params.grad_tol {
            break (Termination::GradTol, grad_norm);
        }
        if diags.len() >= params.max_outer {
            break (Termination::MaxOuter, grad_norm);
        }
        let step = grad.scaled(params.lr);
        let next = x.sub(&step);
        let f_next = if next.all_finite() {
            obj.eval(&next)
        } else {
            f64::NAN
        };
        if !next.all_finite() || !f_next.is_finite() {
            failure_detail = Some("iterate left the finite range".into());
            break (Termination::StepFailure, grad_norm);
        }
        diags.push(StepDiag {
            step,
            depth: 1,
            retries: 0,
            grad_norm,
        });
        iterates.push(next);
        f_values.push(f_next);
    };
    Trajectory {
        iterates,
        diags,
        f_values,
        termination,
        final_grad_norm,
        failure_detail,
    }
}
