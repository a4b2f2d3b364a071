//! The control problem underneath the step family, solved three ways.
//!
//! The step comes from minimizing sum_k [f(x_k) + u_k' R u_k] + f(x_{N+1})
//! over a planned trajectory x_{k+1} = x_k + u_k. This example solves that
//! planning problem:
//!
//!   1. by brute force (stacked gradient descent + Newton polish, no
//!      structure assumed), then checks the optimality law
//!      u_k = -R^{-1} sum_{i>k} grad f(x_i) directly;
//!   2. as the coupled implicit system the law induces;
//!   3. by the linearized backward recursion the solvers actually use.
//!
//!     cargo run --example control_trajectories

use std::collections::BTreeMap;

use ocopt::linalg::{Matrix, Vector};
use ocopt::oracles::{
    check_control_law, solve_implicit, solve_ocp_bruteforce, solve_semi_implicit,
};
use ocopt::problems::builtin;
use ocopt::solvers::ControlWeight;

fn main() {
    let mut params = BTreeMap::new();
    params.insert("a".to_string(), 1.0);
    params.insert("b".to_string(), 0.0);
    let problem = builtin("quadratic1d", &params).unwrap();
    let weight = ControlWeight::full(Matrix::from_rows(&[vec![1.0]])).unwrap();
    let horizon = 2;
    let x0 = Vector::scalar(1.0);

    // --- 1. brute force, half-weight convention ---
    let sol = solve_ocp_bruteforce(&problem, &weight, horizon, &x0, true).unwrap();
    println!("brute-force optimum, f(x) = x^2/2, R = 1, N = {horizon}, x0 = 1");
    println!("  planned states:   {:?}", flat(&sol.states));
    println!("  planned controls: {:?}", flat(&sol.controls));
    println!("  (exact values: states 1, 5/13, 2/13, 1/13)");

    let law = check_control_law(&sol, &problem, &weight).unwrap();
    println!("\ncontrol-law check at the optimum:");
    println!("  u_k + R^-1 sum grad f:    max violation {:.2e}", law.max_violation);

    // The law is convention-sensitive: with the control cost u'Ru at full
    // weight instead of half, the optimum obeys u = -(2R)^-1 sum instead,
    // and checking it against the plain law leaves a factor-2 mismatch.
    let sol_full = solve_ocp_bruteforce(&problem, &weight, horizon, &x0, false).unwrap();
    let law_full = check_control_law(&sol_full, &problem, &weight).unwrap();
    println!("\nsame problem, full-weight control cost:");
    println!(
        "  against R^-1 law:         max violation {:.2e}",
        law_full.max_violation
    );
    println!(
        "  against (2R)^-1 law:      max violation {:.2e}  (factor-2 signature: {})",
        law_full.max_violation_double_weight, law_full.factor2_signature
    );

    // --- 2. the implicit trajectory system ---
    // Substituting the law into the dynamics couples every state to the
    // gradients at all later states. Solving that directly:
    let im = solve_implicit(&problem, &weight, 3, &x0).unwrap();
    println!("\nimplicit system, N = 3:");
    println!("  states:   {:?}", flat_v(&im.states));
    println!("  (exact: 1, 13/34, 5/34, 2/34, 1/34)");
    println!("  residual: {:.2e} in {} update(s)", im.residual, im.iterations_used);

    // --- 3. the linearized (semi-implicit) recursion ---
    let semi = solve_semi_implicit(&problem, &weight, 3, &x0).unwrap();
    let gap = im
        .states
        .iter()
        .zip(&semi.states)
        .map(|(a, b)| a.sub(b).norm_inf())
        .fold(0.0f64, f64::max);
    println!("\nlinearized recursion, N = 3:");
    println!("  states:   {:?}", flat_v(&semi.states));
    println!("  max gap to implicit solution: {gap:.2e}");
    println!("\non a quadratic the linearization is exact, so all three routes");
    println!("agree; the solvers keep only the first planned step and replan.");
}

fn flat(vs: &[Vector]) -> Vec<f64> {
    vs.iter().map(|v| round6(v[0])).collect()
}

fn flat_v(vs: &[Vector]) -> Vec<f64> {
    flat(vs)
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}
