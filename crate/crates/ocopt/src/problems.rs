//! Benchmark objectives with analytic derivatives, addressable by name so
//! experiment configs can reference them.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("bad parameters for '{name}': {reason}")]
    BadParams { name: String, reason: String },
}

/// A twice-differentiable objective. Implementations must be immutable after
/// construction so evaluation can run concurrently.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> &str;
    fn eval(&self, x: &Vector) -> f64;
    fn grad(&self, x: &Vector) -> Vector;
    /// Must return a symmetric-flagged matrix.
    fn hess(&self, x: &Vector) -> Matrix;
    /// Third derivative for one-dimensional objectives; None elsewhere.
    fn third_scalar(&self, _x: f64) -> Option<f64> {
        None
    }
}

/// Exact minimizer data for objectives that have a known one.
#[derive(Debug, Clone)]
pub struct KnownMinimizer {
    pub x_star: Vector,
    pub hess_at_star: Matrix,
    /// True when x_star is the unique minimizer of the whole function.
    pub is_unique: bool,
}

#[derive(Debug, Clone)]
pub enum Builtin {
    /// f(x) = (a/2)(x-b)^2
    Quadratic1d { a: f64, b: f64 },
    /// f(x) = (x-c)^T H (x-c) / 2 with H = Q diag(spectrum) Q^T
    QuadraticNd {
        hess: Matrix,
        center: Vector,
        spectrum: Vec<f64>,
    },
    /// f(x) = x^3 + x; curvature vanishes at the origin while the slope is 1
    QuarticShift,
    /// chained Rosenbrock in n variables, minimum at (1, ..., 1)
    Rosenbrock { n: usize },
    /// f(x) = x^2/2 + c x^3, minimizer at 0 with third derivative 6c
    CubicPerturbedQuadratic { c: f64 },
}

impl Objective for Builtin {
    fn dim(&self) -> usize {
        match self {
            Builtin::Quadratic1d { .. }
            | Builtin::QuarticShift
            | Builtin::CubicPerturbedQuadratic { .. } => 1,
            Builtin::QuadraticNd { center, .. } => center.dim(),
            Builtin::Rosenbrock { n } => *n,
        }
    }

    fn name(&self) -> &str {
        match self {
            Builtin::Quadratic1d { .. } => "quadratic1d",
            Builtin::QuadraticNd { .. } => "quadratic_nd",
            Builtin::QuarticShift => "quartic_shift",
            Builtin::Rosenbrock { .. } => "rosenbrock",
            Builtin::CubicPerturbedQuadratic { .. } => "cubic_perturbed_quadratic",
        }
    }

    fn eval(&self, x: &Vector) -> f64 {
        match self {
            Builtin::Quadratic1d { a, b } => {
                let e = x[0] - b;
                0.5 * a * e * e
            }
            Builtin::QuadraticNd { hess, center, .. } => {
                let d = x.sub(center);
                0.5 * d.dot(&hess.matvec(&d))
            }
            Builtin::QuarticShift => x[0].powi(3) + x[0],
            Builtin::Rosenbrock { n } => {
                let mut s = 0.0;
                for i in 0..n - 1 {
                    let t = x[i + 1] - x[i] * x[i];
                    s += 100.0 * t * t + (1.0 - x[i]) * (1.0 - x[i]);
                }
                s
            }
            Builtin::CubicPerturbedQuadratic { c } => 0.5 * x[0] * x[0] + c * x[0].powi(3),
        }
    }

    fn grad(&self, x: &Vector) -> Vector {
        match self {
            Builtin::Quadratic1d { a, b } => Vector::scalar(a * (x[0] - b)),
            Builtin::QuadraticNd { hess, center, .. } => hess.matvec(&x.sub(center)),
            Builtin::QuarticShift => Vector::scalar(3.0 * x[0] * x[0] + 1.0),
            Builtin::Rosenbrock { n } => {
                let n = *n;
                let mut g = vec![0.0; n];
                for i in 0..n - 1 {
                    let t = x[i + 1] - x[i] * x[i];
                    g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
                    g[i + 1] += 200.0 * t;
                }
                Vector::new(g)
            }
            Builtin::CubicPerturbedQuadratic { c } => {
                Vector::scalar(x[0] + 3.0 * c * x[0] * x[0])
            }
        }
    }

    fn hess(&self, x: &Vector) -> Matrix {
        match self {
            Builtin::Quadratic1d { a, .. } => Matrix::from_rows(&[vec![*a]]),
            Builtin::QuadraticNd { hess, .. } => hess.clone(),
            Builtin::QuarticShift => Matrix::from_rows(&[vec![6.0 * x[0]]]),
            Builtin::Rosenbrock { n } => {
                let n = *n;
                let mut h = Matrix::zeros(n);
                for i in 0..n - 1 {
                    let t = x[i + 1] - x[i] * x[i];
                    let dii = h.get(i, i) - 400.0 * t + 800.0 * x[i] * x[i] + 2.0;
                    h.set(i, i, dii);
                    let d11 = h.get(i + 1, i + 1) + 200.0;
                    h.set(i + 1, i + 1, d11);
                    h.set(i, i + 1, -400.0 * x[i]);
                    h.set(i + 1, i, -400.0 * x[i]);
                }
                h.symmetrized()
            }
            Builtin::CubicPerturbedQuadratic { c } => {
                Matrix::from_rows(&[vec![1.0 + 6.0 * c * x[0]]])
            }
        }
    }

    fn third_scalar(&self, _x: f64) -> Option<f64> {
        match self {
            Builtin::Quadratic1d { .. } => Some(0.0),
            Builtin::QuarticShift => Some(6.0),
            Builtin::CubicPerturbedQuadratic { c } => Some(6.0 * c),
            _ => None,
        }
    }
}

impl Builtin {
    pub fn minimizer(&self) -> Option<KnownMinimizer> {
        match self {
            Builtin::Quadratic1d { a, b } => Some(KnownMinimizer {
                x_star: Vector::scalar(*b),
                hess_at_star: Matrix::from_rows(&[vec![*a]]),
                is_unique: true,
            }),
            Builtin::QuadraticNd { hess, center, .. } => Some(KnownMinimizer {
                x_star: center.clone(),
                hess_at_star: hess.clone(),
                is_unique: true,
            }),
            // slope is 3x^2 + 1 > 0 everywhere: no stationary point at all
            Builtin::QuarticShift => None,
            Builtin::Rosenbrock { n } => {
                let ones = Vector::new(vec![1.0; *n]);
                Some(KnownMinimizer {
                    hess_at_star: self.hess(&ones),
                    x_star: ones,
                    is_unique: true,
                })
            }
            // the origin is the only local minimum, but the cubic term makes
            // the function unbounded below
            Builtin::CubicPerturbedQuadratic { .. } => Some(KnownMinimizer {
                x_star: Vector::scalar(0.0),
                hess_at_star: Matrix::from_rows(&[vec![1.0]]),
                is_unique: false,
            }),
        }
    }

    /// The eigenvalues of the quadratic_nd Hessian, when this is one.
    pub fn spectrum(&self) -> Option<&[f64]> {
        match self {
            Builtin::QuadraticNd { spectrum, .. } => Some(spectrum),
            _ => None,
        }
    }
}

/// Uniform f64 in [-1, 1) driven straight off the stream cipher.
fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Deterministic orthogonal matrix: the product of n seeded Householder
/// reflections. The same seed always yields the same matrix, bit for bit.
pub fn seeded_orthogonal(seed: u64, n: usize) -> Matrix {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Matrix::identity(n);
    for _ in 0..n {
        let mut v = vec![0.0; n];
        loop {
            for entry in v.iter_mut() {
                *entry = unit_uniform(&mut rng);
            }
            let norm2: f64 = v.iter().map(|a| a * a).sum();
            if norm2 > 1e-6 {
                break;
            }
        }
        let norm2: f64 = v.iter().map(|a| a * a).sum();
        // q <- (I - 2 v v^T / |v|^2) q
        for col in 0..n {
            let proj: f64 = v.iter().enumerate().map(|(r, vr)| vr * q.get(r, col)).sum();
            let f = 2.0 * proj / norm2;
            for (r, vr) in v.iter().enumerate() {
                let val = q.get(r, col) - f * vr;
                q.set(r, col, val);
            }
        }
    }
    q
}

fn bad(name: &str, reason: impl Into<String>) -> ProblemError {
    ProblemError::BadParams {
        name: name.to_string(),
        reason: reason.into(),
    }
}

fn take(params: &mut BTreeMap<String, f64>, key: &str) -> Option<f64> {
    params.remove(key)
}

fn reject_leftovers(name: &str, params: &BTreeMap<String, f64>) -> Result<(), ProblemError> {
    if let Some(k) = params.keys().next() {
        return Err(bad(name, format!("unknown parameter '{k}'")));
    }
    Ok(())
}

/// Builds a named objective from a flat key -> value parameter map.
///
/// Recognized names and parameters:
/// - `quadratic1d`: a (required, > 0), b (default 0)
/// - `quadratic_nd`: lambda1..lambdaK (required, > 0), seed (default 0), b (default 0)
/// - `quartic_shift`: none
/// - `rosenbrock`: n (required integer >= 2)
/// - `cubic_perturbed_quadratic`: c (required)
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Builtin, ProblemError> {
    let mut p = params.clone();
    let built = match name {
        "quadratic1d" => {
            let a = take(&mut p, "a").ok_or_else(|| bad(name, "missing 'a'"))?;
            if a <= 0.0 || !a.is_finite() {
                return Err(bad(name, format!("curvature a must be positive, got {a}")));
            }
            let b = take(&mut p, "b").unwrap_or(0.0);
            if !b.is_finite() {
                return Err(bad(name, "center b must be finite"));
            }
            Builtin::Quadratic1d { a, b }
        }
        "quadratic_nd" => {
            let seed = take(&mut p, "seed").unwrap_or(0.0);
            if seed < 0.0 || seed.fract() != 0.0 {
                return Err(bad(name, "seed must be a non-negative integer"));
            }
            let b = take(&mut p, "b").unwrap_or(0.0);
            if !b.is_finite() {
                return Err(bad(name, "center b must be finite"));
            }
            let mut spectrum = Vec::new();
            loop {
                let key = format!("lambda{}", spectrum.len() + 1);
                match take(&mut p, &key) {
                    Some(v) if v > 0.0 && v.is_finite() => spectrum.push(v),
                    Some(v) => {
                        return Err(bad(name, format!("{key} must be positive, got {v}")))
                    }
                    None => break,
                }
            }
            if spectrum.is_empty() {
                return Err(bad(name, "needs lambda1, lambda2, ... (at least one)"));
            }
            let n = spectrum.len();
            let q = seeded_orthogonal(seed as u64, n);
            let mut h = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for (k, lam) in spectrum.iter().enumerate() {
                        s += q.get(i, k) * lam * q.get(j, k);
                    }
                    h.set(i, j, s);
                }
            }
            Builtin::QuadraticNd {
                hess: h.symmetrized(),
                center: Vector::new(vec![b; n]),
                spectrum,
            }
        }
        "quartic_shift" => Builtin::QuarticShift,
        "rosenbrock" => {
            let nf = take(&mut p, "n").ok_or_else(|| bad(name, "missing 'n'"))?;
            if nf.fract() != 0.0 || !(2.0..=64.0).contains(&nf) {
                return Err(bad(name, format!("n must be an integer in 2..=64, got {nf}")));
            }
            Builtin::Rosenbrock { n: nf as usize }
        }
        "cubic_perturbed_quadratic" => {
            let c = take(&mut p, "c").ok_or_else(|| bad(name, "missing 'c'"))?;
            if !c.is_finite() {
                return Err(bad(name, "c must be finite"));
            }
            Builtin::CubicPerturbedQuadratic { c }
        }
        other => return Err(ProblemError::UnknownProblem(other.to_string())),
    };
    reject_leftovers(name, &p)?;
    Ok(built)
}

pub const BUILTIN_NAMES: [&str; 5] = [
    "quadratic1d",
    "quadratic_nd",
    "quartic_shift",
    "rosenbrock",
    "cubic_perturbed_quadratic",
];

/// Wraps an objective and counts evaluations; used by the comparison tables
/// and by tests that pin per-step evaluation budgets.
pub struct CountingObjective<'a> {
    inner: &'a dyn Objective,
    evals: AtomicUsize,
    grads: AtomicUsize,
    hessians: AtomicUsize,
}

impl<'a> CountingObjective<'a> {
    pub fn new(inner: &'a dyn Objective) -> Self {
        CountingObjective {
            inner,
            evals: AtomicUsize::new(0),
            grads: AtomicUsize::new(0),
            hessians: AtomicUsize::new(0),
        }
    }

    pub fn eval_count(&self) -> usize {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn grad_count(&self) -> usize {
        self.grads.load(Ordering::Relaxed)
    }

    pub fn hess_count(&self) -> usize {
        self.hessians.load(Ordering::Relaxed)
    }
}

impl Objective for CountingObjective<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn eval(&self, x: &Vector) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(x)
    }

    fn grad(&self, x: &Vector) -> Vector {
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.grad(x)
    }

    fn hess(&self, x: &Vector) -> Matrix {
        self.hessians.fetch_add(1, Ordering::Relaxed);
        self.inner.hess(x)
    }

    fn third_scalar(&self, x: f64) -> Option<f64> {
        self.inner.third_scalar(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fd_gradient, fd_hessian, fd_step, sym_eigenvalues};

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn quadratic1d_basic_values() {
        let p = builtin("quadratic1d", &params(&[("a", 2.0), ("b", 3.0)])).unwrap();
        let m = p.minimizer().unwrap();
        assert_eq!(m.x_star[0], 3.0);
        assert_eq!(m.hess_at_star.get(0, 0), 2.0);
        assert!(m.is_unique);
        assert_eq!(p.eval(&Vector::scalar(3.0)), 0.0);
        assert_eq!(p.grad(&Vector::scalar(4.0))[0], 2.0);
    }

    #[test]
    fn quartic_shift_probe_point() {
        let p = builtin("quartic_shift", &BTreeMap::new()).unwrap();
        let zero = Vector::scalar(0.0);
        assert_eq!(p.grad(&zero)[0], 1.0);
        assert_eq!(p.hess(&zero).get(0, 0), 0.0);
        assert_eq!(p.third_scalar(0.0), Some(6.0));
        assert!(p.minimizer().is_none());
    }

    #[test]
    fn rosenbrock_minimum_and_growth() {
        let p = builtin("rosenbrock", &params(&[("n", 2.0)])).unwrap();
        let m = p.minimizer().unwrap();
        assert_eq!(m.x_star.as_slice(), &[1.0, 1.0]);
        assert_eq!(p.eval(&m.x_star), 0.0);
        assert!(p.eval(&Vector::new(vec![-1.2, 1.0])) > 1.0);
    }

    #[test]
    fn cubic_perturbed_quadratic_derivatives() {
        let p = builtin("cubic_perturbed_quadratic", &params(&[("c", 0.1)])).unwrap();
        let third = p.third_scalar(0.0).unwrap();
        assert!((third - 0.6).abs() < 1e-15, "third derivative {third}");
        let m = p.minimizer().unwrap();
        assert_eq!(m.x_star[0], 0.0);
        assert!(!m.is_unique);
    }

    #[test]
    fn quadratic_nd_spectrum_is_reconstructed_by_eigensolve() {
        let p = builtin(
            "quadratic_nd",
            &params(&[("lambda1", 1.0), ("lambda2", 100.0), ("seed", 7.0)]),
        )
        .unwrap();
        let h = p.hess(&Vector::zeros(2));
        assert!(h.is_symmetric());
        let e = sym_eigenvalues(&h);
        assert!((e[0] - 1.0).abs() < 1e-9, "eigs {e:?}");
        assert!((e[1] - 100.0).abs() < 1e-9, "eigs {e:?}");
    }

    #[test]
    fn quadratic_nd_is_seed_reproducible() {
        let args = params(&[("lambda1", 2.0), ("lambda2", 5.0), ("seed", 11.0)]);
        let p1 = builtin("quadratic_nd", &args).unwrap();
        let p2 = builtin("quadratic_nd", &args).unwrap();
        let (h1, h2) = (p1.hess(&Vector::zeros(2)), p2.hess(&Vector::zeros(2)));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(h1.get(i, j).to_bits(), h2.get(i, j).to_bits());
            }
        }
    }

    #[test]
    fn seeded_orthogonal_has_orthonormal_columns() {
        for n in 1..6 {
            let q = seeded_orthogonal(42, n);
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = (0..n).map(|r| q.get(r, i) * q.get(r, j)).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12, "n={n} ({i},{j}): {dot}");
                }
            }
        }
    }

    #[test]
    fn error_cases() {
        assert!(matches!(
            builtin("nope", &BTreeMap::new()),
            Err(ProblemError::UnknownProblem(_))
        ));
        assert!(matches!(
            builtin("quadratic1d", &params(&[("a", -1.0)])),
            Err(ProblemError::BadParams { .. })
        ));
        assert!(matches!(
            builtin("quadratic1d", &params(&[("a", 1.0), ("zz", 1.0)])),
            Err(ProblemError::BadParams { .. })
        ));
        assert!(matches!(
            builtin("rosenbrock", &params(&[("n", 2.5)])),
            Err(ProblemError::BadParams { .. })
        ));
        assert!(matches!(
            builtin("quadratic_nd", &params(&[("lambda1", -3.0)])),
            Err(ProblemError::BadParams { .. })
        ));
    }

    #[test]
    fn known_minimizers_are_stationary_with_psd_hessian() {
        let cases: Vec<Builtin> = vec![
            builtin("quadratic1d", &params(&[("a", 2.0), ("b", 3.0)])).unwrap(),
            builtin(
                "quadratic_nd",
                &params(&[("lambda1", 1.0), ("lambda2", 100.0), ("seed", 3.0)]),
            )
            .unwrap(),
            builtin("rosenbrock", &params(&[("n", 4.0)])).unwrap(),
            builtin("cubic_perturbed_quadratic", &params(&[("c", 0.1)])).unwrap(),
        ];
        for p in &cases {
            let m = p.minimizer().unwrap();
            assert!(
                p.grad(&m.x_star).norm2() <= 1e-12,
                "{} gradient at minimizer",
                p.name()
            );
            let eigs = sym_eigenvalues(&m.hess_at_star);
            assert!(
                eigs.iter().all(|&l| l >= -1e-10),
                "{} hessian not PSD: {eigs:?}",
                p.name()
            );
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        let cases: Vec<Builtin> = vec![
            builtin("quadratic1d", &params(&[("a", 0.5), ("b", -2.0)])).unwrap(),
            builtin(
                "quadratic_nd",
                &params(&[("lambda1", 1.0), ("lambda2", 9.0), ("lambda3", 25.0), ("seed", 5.0)]),
            )
            .unwrap(),
            builtin("quartic_shift", &BTreeMap::new()).unwrap(),
            builtin("rosenbrock", &params(&[("n", 3.0)])).unwrap(),
            builtin("cubic_perturbed_quadratic", &params(&[("c", 0.3)])).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut unif = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0;
        for p in &cases {
            for _ in 0..20 {
                let x = Vector::new((0..p.dim()).map(|_| unif()).collect());
                let g = p.grad(&x);
                let g_fd = fd_gradient(|y| p.eval(y), &x, fd_step(x.norm_inf())).unwrap();
                let tol = 1e-6_f64.max(1e-6 * g.norm2());
                assert!(
                    g.sub(&g_fd).norm2() <= tol,
                    "{} gradient mismatch at {:?}",
                    p.name(),
                    x.as_slice()
                );
                let h = p.hess(&x);
                let h_fd = fd_hessian(|y| p.eval(y), &x, fd_step(x.norm_inf())).unwrap();
                for i in 0..p.dim() {
                    for j in 0..p.dim() {
                        let scale = 1.0_f64.max(h.get(i, j).abs());
                        assert!(
                            (h.get(i, j) - h_fd.get(i, j)).abs() <= 1e-3 * scale,
                            "{} hessian mismatch ({i},{j})",
                            p.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn counting_wrapper_tracks_calls() {
        let p = builtin("quadratic1d", &params(&[("a", 1.0)])).unwrap();
        let c = CountingObjective::new(&p);
        let x = Vector::scalar(1.0);
        c.eval(&x);
        c.grad(&x);
        c.grad(&x);
        c.hess(&x);
        assert_eq!((c.eval_count(), c.grad_count(), c.hess_count()), (1, 2, 1));
    }
}
