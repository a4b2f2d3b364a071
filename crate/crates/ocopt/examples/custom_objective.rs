//! Plugging your own objective into the solver family.
//!
//! Anything implementing the `Objective` trait — a value, a gradient, and a
//! Hessian — can be driven by every solver, oracle, and analysis in the
//! crate. Here: f(x) = sum_i cosh(x_i) - n, a smooth convex function whose
//! curvature grows with distance from the minimizer at the origin.
//!
//!     cargo run --example custom_objective

use ocopt::analysis::{compare, SolverSpec};
use ocopt::linalg::{Matrix, Vector};
use ocopt::problems::Objective;
use ocopt::solvers::{unified_solve, ControlWeight, GdParams, OcpParams};

struct CoshSum {
    dim: usize,
}

impl Objective for CoshSum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        "cosh_sum"
    }

    fn eval(&self, x: &Vector) -> f64 {
        x.as_slice().iter().map(|v| v.cosh() - 1.0).sum()
    }

    fn grad(&self, x: &Vector) -> Vector {
        Vector::new(x.as_slice().iter().map(|v| v.sinh()).collect())
    }

    fn hess(&self, x: &Vector) -> Matrix {
        let n = self.dim;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            rows[i][i] = x[i].cosh();
        }
        Matrix::from_rows(&rows)
    }
}

fn main() {
    let problem = CoshSum { dim: 3 };
    let x0 = Vector::new(vec![3.0, -2.0, 0.5]);

    // run the weighted iteration and watch the depth-4 contraction
    let solver = OcpParams::new(ControlWeight::scalar(1.0).unwrap(), 3);
    let traj = unified_solve(&problem, &solver, &x0);
    println!("f(x) = sum cosh(x_i) - 3 from (3, -2, 0.5), r = 1, N = 3\n");
    println!("  k    f(x_k)          ||grad||");
    for (k, f) in traj.f_values.iter().enumerate() {
        let g = if k < traj.diags.len() {
            traj.diags[k].grad_norm
        } else {
            traj.final_grad_norm
        };
        println!("  {k:<3} {f:>14.6e}  {g:>12.4e}");
    }
    println!("  termination: {:?}\n", traj.termination);

    // every other tool accepts the same trait object
    let table = compare(
        &[
            SolverSpec::Unified(
                OcpParams::new(ControlWeight::scalar(1.0).unwrap(), 3).with_grad_tol(1e-10),
            ),
            SolverSpec::Newton {
                grad_tol: 1e-10,
                max_outer: 100,
            },
            SolverSpec::Gd(GdParams::new(0.05).with_grad_tol(1e-10)),
        ],
        &problem,
        &x0,
    );
    println!("  {:<18} {:>6} {:>8}   termination", "solver", "iters", "final f");
    for row in &table.rows {
        println!(
            "  {:<18} {:>6} {:>8.1e}   {}",
            row.solver, row.iterations, row.final_f, row.termination
        );
    }
    println!("\nnote the far start: at x = 3 the curvature cosh(3) ~ 10 makes");
    println!("pure Newton overshoot-prone on less friendly functions, while the");
    println!("weight keeps early steps short and fades out near the optimum.");
}
