//! Randomized invariants: facts that must hold for every admissible input,
//! not just the hand-picked cases in the unit tests.

use std::collections::BTreeMap;

use proptest::prelude::*;

use ocopt::analysis::{contraction_constant, empirical_rate};
use ocopt::linalg::{fd_gradient, solve_spd, Matrix, Vector};
use ocopt::problems::{builtin, Builtin, Objective};
use ocopt::solvers::{
    annealed_solve, control_step, unified_solve, ControlWeight, OcpParams, StepDiag, Termination,
    Trajectory,
};

fn quad1(a: f64) -> Builtin {
    let mut p = BTreeMap::new();
    p.insert("a".to_string(), a);
    p.insert("b".to_string(), 0.0);
    builtin("quadratic1d", &p).unwrap()
}

/// SPD matrix M^T M + I from a flat list of entries in [-1, 1].
fn spd_from(entries: &[f64], n: usize) -> Matrix {
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in 0..n {
                s += entries[k * n + i] * entries[k * n + j];
            }
            *v = s + if i == j { 1.0 } else { 0.0 };
        }
    }
    Matrix::from_rows(&rows)
}

proptest! {
    // no persistence files: failing inputs are reported, not recorded, since
    // integration tests have no source root for proptest to anchor them to
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    /// The positive-definite linear solve leaves a tiny residual for any
    /// well-conditioned system.
    #[test]
    fn spd_solve_residual_is_small(
        n in 1usize..=6,
        entries in prop::collection::vec(-1.0f64..1.0, 36),
        rhs in prop::collection::vec(-10.0f64..10.0, 6),
    ) {
        let a = spd_from(&entries[..n * n], n);
        let b = Vector::new(rhs[..n].to_vec());
        let x = solve_spd(&a, &b).unwrap();
        let res = a.matvec(&x).sub(&b).norm_inf();
        prop_assert!(res <= 1e-9 * (1.0 + b.norm_inf()), "residual {res}");
    }

    /// On a quadratic with curvature a, one step at weight r and depth N+1
    /// multiplies the error by exactly (r/(r+a))^(N+1).
    #[test]
    fn quadratic_step_contracts_at_the_closed_form(
        a in 0.1f64..10.0,
        r in 0.05f64..20.0,
        n in 0usize..=7,
        x0 in prop::sample::select(vec![-3.0, -1.0, -0.25, 0.5, 1.0, 2.5]),
    ) {
        let p = quad1(a);
        let params = OcpParams::new(ControlWeight::scalar(r).unwrap(), n).with_max_outer(1);
        let traj = unified_solve(&p, &params, &Vector::scalar(x0));
        let rho = (r / (r + a)).powi(n as i32 + 1);
        let got = traj.final_iterate()[0];
        prop_assert!(
            (got - x0 * rho).abs() <= 1e-10 * x0.abs(),
            "a={a} r={r} N={n}: {got} vs {}", x0 * rho
        );
    }

    /// One annealed pass multiplies a quadratic's error by the full product
    /// (r/(r+a))^((N+1)(N+2)/2). The contraction ratio is kept moderate:
    /// comparing against an extreme contraction (say 1e-14 per step) is
    /// ill-conditioned in floating point regardless of method, because the
    /// subtraction x - g(x) then cancels to roundoff.
    #[test]
    fn annealed_pass_applies_the_depth_product(
        q in 0.3f64..0.9,
        r in 0.1f64..10.0,
        n in 0usize..=5,
        x0 in 0.1f64..2.0,
    ) {
        let a = r * (1.0 / q - 1.0);
        let p = quad1(a);
        let params = OcpParams::new(ControlWeight::scalar(r).unwrap(), n)
            .with_repeat_passes(false)
            .with_grad_tol(1e-300);
        let traj = annealed_solve(&p, &params, &Vector::scalar(x0));
        let exponent = ((n + 1) * (n + 2) / 2) as i32;
        let want = x0 * q.powi(exponent);
        let got = traj.final_iterate()[0];
        prop_assert!(
            (got - want).abs() <= 1e-10 * want.abs(),
            "q={q} r={r} N={n}: {got} vs {want}"
        );
    }

    /// The predicted contraction constant is monotone: heavier control
    /// weight slows convergence, deeper lookahead speeds it up.
    #[test]
    fn contraction_constant_is_monotone(
        lam in 0.1f64..50.0,
        r1 in 0.05f64..10.0,
        dr in 0.1f64..5.0,
        n1 in 0usize..=5,
        dn in 1usize..=4,
    ) {
        let h = Matrix::from_rows(&[vec![lam]]);
        let base = contraction_constant(&h, r1, n1).unwrap().overall;
        let heavier = contraction_constant(&h, r1 + dr, n1).unwrap().overall;
        let deeper = contraction_constant(&h, r1, n1 + dn).unwrap().overall;
        prop_assert!(heavier > base);
        prop_assert!(deeper < base);
        prop_assert!(base > 0.0 && base < 1.0);
    }

    /// Where curvature vanishes the step is exactly depth * grad / r: the
    /// depth acts as a pure gain and nothing blows up.
    #[test]
    fn flat_curvature_step_is_linear_in_depth(
        r in 0.01f64..100.0,
        depth in 1usize..=8,
    ) {
        let p = builtin("quartic_shift", &BTreeMap::new()).unwrap();
        let step = control_step(&p, &Vector::scalar(0.0), &ControlWeight::scalar(r).unwrap(), depth).unwrap();
        let want = depth as f64 / r;
        prop_assert!((step[0] - want).abs() <= 1e-12 * want, "{} vs {want}", step[0]);
    }

    /// Bookkeeping invariants every finished run must satisfy, whatever the
    /// tuning: aligned lengths, the constant depth schedule, and a gradient
    /// norm that honors the declared termination reason.
    #[test]
    fn trajectory_bookkeeping_is_consistent(
        a in 0.1f64..10.0,
        r in 0.05f64..10.0,
        n in 0usize..=6,
        x0 in prop::sample::select(vec![-2.0, -0.5, 0.75, 1.5]),
    ) {
        let p = quad1(a);
        let grad_tol = 1e-9;
        let params = OcpParams::new(ControlWeight::scalar(r).unwrap(), n).with_grad_tol(grad_tol);
        let traj = unified_solve(&p, &params, &Vector::scalar(x0));
        prop_assert_eq!(traj.f_values.len(), traj.iterates.len());
        prop_assert_eq!(traj.diags.len(), traj.iterates.len() - 1);
        prop_assert!(traj.diags.iter().all(|d| d.depth == n + 1));
        prop_assert!(traj.diags.iter().all(|d| d.retries == 0), "convex quadratic never retries");
        prop_assert_eq!(traj.termination, Termination::GradTol);
        prop_assert!(traj.final_grad_norm <= grad_tol);
    }

    /// The tail-ratio estimator recovers the ratio of any synthetic
    /// geometric error sequence it is given. The sequence is centered at
    /// zero so the iterates represent the errors exactly; on an offset
    /// base the representation rounding of (base + 1e-12) alone would
    /// swamp a tight tolerance.
    #[test]
    fn rate_estimator_recovers_geometric_decay(
        rho in 0.05f64..0.95,
        e0 in 0.5f64..2.0,
        len in 10usize..=30,
    ) {
        let iterates: Vec<Vector> = (0..len)
            .map(|k| Vector::scalar(e0 * rho.powi(k as i32)))
            .collect();
        let diags: Vec<StepDiag> = iterates
            .windows(2)
            .map(|w| StepDiag {
                grad_norm: 1.0,
                step: w[1].sub(&w[0]),
                depth: 1,
                retries: 0,
            })
            .collect();
        let traj = Trajectory {
            f_values: vec![0.0; iterates.len()],
            diags,
            iterates,
            termination: Termination::GradTol,
            final_grad_norm: 0.0,
            failure_detail: None,
        };
        let rate = empirical_rate(&traj, &Vector::scalar(0.0), 6).unwrap();
        prop_assert!(
            (rate.empirical_ratio - rho).abs() <= 1e-9 * rho,
            "{} vs {rho}", rate.empirical_ratio
        );
    }

    /// Central finite differences agree with the analytic gradient away
    /// from pathological scales.
    #[test]
    fn finite_difference_gradient_matches_analytic(
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
    ) {
        let mut params = BTreeMap::new();
        params.insert("n".to_string(), 2.0);
        let p = builtin("rosenbrock", &params).unwrap();
        let at = Vector::new(vec![x, y]);
        let analytic = p.grad(&at);
        let h = ocopt::linalg::fd_step(at.norm_inf());
        let fd = fd_gradient(|v| p.eval(v), &at, h).unwrap();
        let err = fd.sub(&analytic).norm_inf();
        prop_assert!(err <= 1e-4 * (1.0 + analytic.norm_inf()), "fd error {err}");
    }
}
