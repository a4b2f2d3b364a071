//! Two limits of the weighted step: Newton at vanishing weight, and
//! graceful degradation where Newton cannot move at all.
//!
//!     cargo run --example newton_comparison

use std::collections::BTreeMap;

use ocopt::linalg::{solve_spd, Vector};
use ocopt::problems::{builtin, Objective};
use ocopt::solvers::{
    control_step, newton_solve, unified_solve, ControlWeight, OcpParams, Termination,
};

fn main() {
    // --- limit 1: as r -> 0, the weighted step becomes the Newton step ---
    let mut params = BTreeMap::new();
    params.insert("n".to_string(), 2.0);
    let rb = builtin("rosenbrock", &params).unwrap();
    // a valley point where the Hessian is positive definite
    let x = Vector::new(vec![0.9, 0.7]);

    let newton = solve_spd(&rb.hess(&x), &rb.grad(&x)).unwrap();
    println!("rosenbrock at ({}, {}):", x[0], x[1]);
    println!("  newton step                  [{:+.9}, {:+.9}]", newton[0], newton[1]);
    for r in [1.0, 1e-3, 1e-6, 1e-12] {
        let step = control_step(&rb, &x, &ControlWeight::scalar(r).unwrap(), 5).unwrap();
        let gap = step.sub(&newton).norm2() / newton.norm2();
        println!(
            "  weighted step, r = {r:<6.0e}  [{:+.9}, {:+.9}]   relative gap {gap:.1e}",
            step[0], step[1]
        );
    }

    // --- limit 2: where Newton divides by zero, the weight keeps going ---
    // f(x) = x^3 + x has f''(0) = 0 and no minimizer at all: the Newton
    // system at the origin is singular, so newton_solve cannot take a step.
    let quartic = builtin("quartic_shift", &BTreeMap::new()).unwrap();
    let origin = Vector::scalar(0.0);

    let nt = newton_solve(&quartic, 1e-10, 100, &origin);
    println!("\nf(x) = x^3 + x from x = 0:");
    println!(
        "  newton:   {:?} after {} steps ({})",
        nt.termination,
        nt.steps(),
        nt.failure_detail.as_deref().unwrap_or("-")
    );

    // The weighted step is finite there: with f'' = 0 the recursion sums
    // the gradient depth times, giving exactly depth * f'(0) / r = 3.
    let step = control_step(&quartic, &origin, &ControlWeight::scalar(1.0).unwrap(), 3).unwrap();
    println!("  weighted step (r = 1, depth 3): {} (= depth * f'(0) / r)", step[0]);

    // And the full iteration keeps descending through the flat point for as
    // long as it is allowed to run. There is no minimizer to find, so a
    // budget-capped run ends at max_outer with a finite, decreasing f.
    let solver = OcpParams::new(ControlWeight::scalar(1.0).unwrap(), 2).with_max_outer(6);
    let traj = unified_solve(&quartic, &solver, &origin);
    assert_eq!(traj.termination, Termination::MaxOuter);
    println!("  weighted iteration, 6-step budget:");
    for (k, f) in traj.f_values.iter().enumerate() {
        println!("    k = {k}: x = {:>12.4e}   f = {:>12.4e}", traj.iterates[k][0], f);
    }
    println!("\nthe weight regularizes exactly where curvature information");
    println!("is useless, and steps aside as soon as it is not needed.");
}
