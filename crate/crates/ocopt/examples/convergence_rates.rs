//! Predicted vs measured convergence rates over a (weight, lookahead) grid.
//!
//! For every mode of the Hessian at the minimizer, the iteration contracts
//! that mode at (r/(r+lambda))^(N+1). This sweep measures actual tail
//! ratios and tabulates them against the prediction.
//!
//!     cargo run --example convergence_rates

use std::collections::BTreeMap;

use ocopt::analysis::rate_report;
use ocopt::linalg::Vector;
use ocopt::problems::builtin;
use ocopt::solvers::{unified_solve, ControlWeight, OcpParams};

fn main() {
    let mut params = BTreeMap::new();
    params.insert("lambda1".to_string(), 0.5);
    params.insert("lambda2".to_string(), 4.0);
    params.insert("seed".to_string(), 11.0);
    let problem = builtin("quadratic_nd", &params).unwrap();
    let minimizer = problem.minimizer().unwrap();
    let x0 = Vector::new(vec![1.0, 1.0]);

    println!("rotated 2-d quadratic, eigenvalues 0.5 and 4\n");
    println!("  r       N   predicted    measured     rel. gap   samples");
    for &r in &[0.25, 1.0, 4.0] {
        for &horizon in &[0usize, 1, 3, 7] {
            let solver = OcpParams::new(ControlWeight::scalar(r).unwrap(), horizon)
                .with_grad_tol(1e-12);
            let traj = unified_solve(&problem, &solver, &x0);
            match rate_report(&traj, &minimizer, r, horizon, 6) {
                Ok(rate) => println!(
                    "  {r:<6}  {horizon}   {:<11.6}  {:<11.6}  {:<9.2e}  {}",
                    rate.theoretical_constant.unwrap(),
                    rate.empirical_ratio,
                    rate.relative_gap.unwrap(),
                    rate.samples_used
                ),
                Err(e) => println!("  {r:<6}  {horizon}   (not measurable here: {e})"),
            }
        }
    }

    println!("\nthe slowest Hessian mode sets the measured rate; the faster");
    println!("mode's error dies out before the tail window and never shows.");
    println!("strong contractions (small r, deep lookahead) drive the error");
    println!("to roundoff in a handful of steps, leaving too few samples for");
    println!("a tail fit -- those cells report why instead of a number.");
}
