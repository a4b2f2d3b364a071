//! Newton-type optimization with a tunable control weight.
//!
//! The step family implemented here comes from treating minimization as a
//! discrete-time control problem: steer iterates x_{k+1} = x_k + u_k toward
//! low objective values while paying u_k' R u_k for each move. Working out
//! the stationarity conditions of that problem and freezing the lookahead
//! at the current point yields a backward recursion
//!
//! ```text
//! g ← (R + H)^{-1} (∇f + R g),   repeated `depth` times from g = (R+H)^{-1} ∇f,
//! ```
//!
//! whose result is a step using exactly one gradient and one Hessian
//! evaluation, no matter how deep the recursion. On a quadratic with
//! curvature a and scalar weight r, the step contracts the error by exactly
//! (r/(r+a))^depth per iteration: deeper recursions and smaller weights
//! approach Newton; larger weights give cautious, damped moves that survive
//! indefinite or singular curvature.
//!
//! The crate provides:
//!
//! - [`solvers`]: the constant-depth iteration ([`solvers::unified_solve`]),
//!   a depth-annealed single pass ([`solvers::annealed_solve`]), plain
//!   Newton and gradient-descent baselines, and the one-step primitive
//!   [`solvers::control_step`].
//! - [`problems`]: small analytic test objectives with known minimizers and
//!   seeded random rotations.
//! - [`oracles`]: independent reference solvers — a brute-force minimizer of
//!   the underlying control cost and solvers for the coupled trajectory
//!   systems — used to validate the step family from first principles.
//! - [`analysis`]: predicted contraction constants, empirical rate fits,
//!   local probes of the iteration map, and solver comparisons.
//! - [`linalg`]: the small dense numeric core (Cholesky, LU, Jacobi
//!   eigenvalues, finite differences) that everything above shares.
//! - [`config`], [`report`], [`cli`]: the TOML-configured experiment
//!   pipeline behind the `ocopt` binary.
//!
//! Start with the examples: each one is a runnable walkthrough of a single
//! capability, from `unified_iteration` to `benchmark_table`.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod linalg;
pub mod oracles;
pub mod problems;
pub mod report;
pub mod solvers;

pub use analysis::{
    annealed_factors, compare, contraction_constant, empirical_rate, rate_report, step_map_probe,
    AnalysisError, AnnealedFactors, ComparisonRow, ComparisonTable, ContractionConstant,
    RateReport, SolverSpec, StepMapProbe,
};
pub use linalg::{
    fd_gradient, fd_hessian, fd_third, solve_lu, solve_spd, sym_eigenvalues, Cholesky, Matrix,
    NumericError, Vector,
};
pub use oracles::{
    check_control_law, solve_implicit, solve_ocp_bruteforce, solve_semi_implicit,
    ControlLawReport, ControlSolution, ImplicitTrajectory, OracleError,
};
pub use problems::{builtin, seeded_orthogonal, Builtin, KnownMinimizer, Objective, ProblemError};
pub use solvers::{
    annealed_solve, control_step, gd_solve, newton_solve, unified_solve, AdaptPolicy,
    ControlWeight, GdParams, OcpParams, SolverError, StepDiag, Termination, Trajectory,
};
