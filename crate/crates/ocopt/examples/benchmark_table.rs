//! Side-by-side solver comparison on shared problems.
//!
//! Runs the weighted iteration, the annealed pass, Newton, and gradient
//! descent on the same start and prints the work each one spent: outer
//! iterations, gradient/Hessian evaluations, and linear solves.
//!
//!     cargo run --example benchmark_table

use std::collections::BTreeMap;

use ocopt::analysis::{compare, ComparisonTable, SolverSpec};
use ocopt::linalg::Vector;
use ocopt::problems::{builtin, Builtin};
use ocopt::solvers::{ControlWeight, GdParams, OcpParams};

fn specs() -> Vec<SolverSpec> {
    vec![
        SolverSpec::Unified(
            OcpParams::new(ControlWeight::scalar(1.0).unwrap(), 10).with_grad_tol(1e-8),
        ),
        SolverSpec::Annealed(
            OcpParams::new(ControlWeight::scalar(1.0).unwrap(), 10).with_grad_tol(1e-8),
        ),
        SolverSpec::Newton {
            grad_tol: 1e-8,
            max_outer: 200,
        },
        SolverSpec::Gd(GdParams::new(0.01).with_grad_tol(1e-8)),
    ]
}

fn print_table(title: &str, table: &ComparisonTable) {
    println!("{title}");
    println!("  solver                  iters   grads    hess linsolve        final f  termination");
    for row in &table.rows {
        println!(
            "  {:<22} {:>6} {:>7} {:>7} {:>8}   {:>12.4e}  {}",
            row.solver,
            row.iterations,
            row.grad_evals,
            row.hess_evals,
            row.linear_solves,
            row.final_f,
            row.termination
        );
    }
    println!();
}

fn ill_conditioned() -> Builtin {
    let mut params = BTreeMap::new();
    params.insert("lambda1".to_string(), 1.0);
    params.insert("lambda2".to_string(), 100.0);
    params.insert("seed".to_string(), 0.0);
    builtin("quadratic_nd", &params).unwrap()
}

fn rosenbrock() -> Builtin {
    let mut params = BTreeMap::new();
    params.insert("n".to_string(), 2.0);
    builtin("rosenbrock", &params).unwrap()
}

fn main() {
    // conditioning 100: gradient descent pays for every bit of it, the
    // curvature-aware solvers do not
    let quad = ill_conditioned();
    let table = compare(&specs(), &quad, &Vector::new(vec![1.0, 1.0]));
    print_table("rotated quadratic, eigenvalues 1 and 100:", &table);

    // a curved valley: Newton and the weighted family track it; fixed-step
    // gradient descent inches along the valley floor
    let rb = rosenbrock();
    let table = compare(&specs(), &rb, &Vector::new(vec![-1.2, 1.0]));
    print_table("rosenbrock from (-1.2, 1):", &table);

    println!("reading the table:");
    println!("  - every weighted step costs exactly one gradient + one Hessian,");
    println!("    plus depth-many backsolves of the same factorization;");
    println!("  - newton is the r -> 0 limit and shows the same eval counts");
    println!("    with one backsolve per step;");
    println!("  - gd never touches the Hessian: on the quadratic it pays with");
    println!("    ~2000 iterations, and in the valley its fixed step is outright");
    println!("    unstable (the steep walls need lr < 2/1330) -- the failure is");
    println!("    reported, not hidden.");
}
