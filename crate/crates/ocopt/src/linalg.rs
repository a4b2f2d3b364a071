//! Dense vectors and square matrices at desk scale, the factorizations the
//! solvers are built on, and central-difference stencils used to validate
//! analytic derivatives.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericError {
    #[error("matrix is not positive definite: pivot {pivot_index} = {pivot_value:.6e}")]
    NotPositiveDefinite { pivot_index: usize, pivot_value: f64 },
    #[error("function evaluation returned a non-finite value at a probe point")]
    NonFiniteEvaluation,
    #[error("matrix is singular to working precision (elimination column {column})")]
    Singular { column: usize },
}

/// Column vector. Entries are validated finite on construction from user
/// data; arithmetic results produced internally are re-checked by callers
/// before they are recorded anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Panics on empty input or non-finite entries.
    pub fn new(entries: Vec<f64>) -> Self {
        assert!(!entries.is_empty(), "vector needs at least one entry");
        assert!(
            entries.iter().all(|v| v.is_finite()),
            "vector entries must be finite"
        );
        Vector(entries)
    }

    /// Checked constructor: None on empty or non-finite input.
    pub fn try_new(entries: Vec<f64>) -> Option<Self> {
        if entries.is_empty() || entries.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Vector(entries))
    }

    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1);
        Vector(vec![0.0; n])
    }

    /// One-dimensional vector, handy for the scalar problems.
    pub fn scalar(v: f64) -> Self {
        Vector::new(vec![v])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector::from_raw(self.0.iter().map(|v| v * s).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        Vector::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        Vector::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Dense square matrix, row-major. The symmetry flag is computed on
/// construction and kept consistent: when set, |A - A^T|_max <= 1e-12 * |A|_max.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
    symmetric: bool,
}

const SYMMETRY_REL_TOL: f64 = 1e-12;

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1);
        Matrix {
            n,
            data: vec![0.0; n * n],
            symmetric: true,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        assert!(s.is_finite());
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = s;
        }
        m
    }

    /// Panics on ragged/empty rows or non-finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(n >= 1, "matrix needs at least one row");
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix must be square");
            for &v in row {
                assert!(v.is_finite(), "matrix entries must be finite");
                data.push(v);
            }
        }
        let mut m = Matrix {
            n,
            data,
            symmetric: false,
        };
        m.symmetric = m.check_symmetry();
        m
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        let mut m = Matrix {
            n,
            data,
            symmetric: false,
        };
        m.symmetric = m.check_symmetry();
        m
    }

    fn check_symmetry(&self) -> bool {
        let scale = self.max_abs();
        let mut dev: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                dev = dev.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        dev <= SYMMETRY_REL_TOL * scale
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.symmetric = false;
    }

    /// Averages A with A^T and sets the symmetry flag.
    pub fn symmetrized(&self) -> Matrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        Matrix {
            n,
            data,
            symmetric: true,
        }
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        assert_eq!(self.n, v.dim());
        let mut out = vec![0.0; self.n];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(v.as_slice()).map(|(a, b)| a * b).sum();
        }
        Vector::from_raw(out)
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix::from_raw(self.n, data)
    }

    /// A + s*I without touching off-diagonal storage.
    pub fn add_scaled_identity(&self, s: f64) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] += s;
        }
        m.symmetric = self.symmetric;
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Factorization refuses to proceed past a pivot <= 1e-12 * |A|_F, reporting
/// the offending index and value instead of returning garbage.
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

pub const SPD_PIVOT_REL_TOL: f64 = 1e-12;

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self, NumericError> {
        assert!(
            a.is_symmetric(),
            "cholesky factorization requires a symmetric matrix"
        );
        let n = a.dim();
        let tol = SPD_PIVOT_REL_TOL * a.frobenius_norm();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a.get(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    // `sum` is the pivot before the square root.
                    if sum <= tol {
                        return Err(NumericError::NotPositiveDefinite {
                            pivot_index: i,
                            pivot_value: sum,
                        });
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn solve(&self, b: &Vector) -> Vector {
        Vector::from_raw(self.solve_slice(b.as_slice()))
    }

    pub fn solve_slice(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

/// Solves A x = b for symmetric positive definite A.
pub fn solve_spd(a: &Matrix, b: &Vector) -> Result<Vector, NumericError> {
    Ok(Cholesky::factor(a)?.solve(b))
}

/// Solves A x = b by LU with partial pivoting; A need not be symmetric.
pub fn solve_lu(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, NumericError> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let mut m = a.clone().data;
    let mut x = b.to_vec();
    let scale = a.max_abs();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() <= 1e-14 * scale {
            return Err(NumericError::Singular { column: col });
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[r * n + j] -= f * m[col * n + j];
            }
            x[r] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            x[i] -= m[i * n + j] * x[j];
        }
        x[i] /= m[i * n + i];
    }
    Ok(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(a: &Matrix) -> Vec<f64> {
    assert!(a.is_symmetric(), "eigenvalue sweep requires a symmetric matrix");
    let n = a.dim();
    let mut m = a.symmetrized().data;
    let off = |m: &Vec<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        s.sqrt()
    };
    let fro = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        if off(&m) <= 1e-14 * fro {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Default step for first- and second-order central differences.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Default step for the third-derivative stencil.
pub fn fd_step_third(x: f64) -> f64 {
    f64::EPSILON.powf(0.2) * x.abs().max(1.0)
}

fn finite_or_err(v: f64) -> Result<f64, NumericError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NumericError::NonFiniteEvaluation)
    }
}

/// Central-difference gradient with a shared step h in every coordinate.
pub fn fd_gradient<F: Fn(&Vector) -> f64>(
    f: F,
    x: &Vector,
    h: f64,
) -> Result<Vector, NumericError> {
    assert!(h > 0.0 && h.is_finite());
    let n = x.dim();
    let mut g = vec![0.0; n];
    let mut p = x.as_slice().to_vec();
    for i in 0..n {
        let xi = p[i];
        p[i] = xi + h;
        let fp = finite_or_err(f(&Vector::from_raw(p.clone())))?;
        p[i] = xi - h;
        let fm = finite_or_err(f(&Vector::from_raw(p.clone())))?;
        p[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(Vector::from_raw(g))
}

/// Central-difference Hessian, symmetrized as (H + H^T)/2.
pub fn fd_hessian<F: Fn(&Vector) -> f64>(
    f: F,
    x: &Vector,
    h: f64,
) -> Result<Matrix, NumericError> {
    assert!(h > 0.0 && h.is_finite());
    let n = x.dim();
    let f0 = finite_or_err(f(x))?;
    let mut m = vec![0.0; n * n];
    let mut p = x.as_slice().to_vec();
    for i in 0..n {
        let xi = p[i];
        p[i] = xi + h;
        let fp = finite_or_err(f(&Vector::from_raw(p.clone())))?;
        p[i] = xi - h;
        let fm = finite_or_err(f(&Vector::from_raw(p.clone())))?;
        p[i] = xi;
        m[i * n + i] = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (xi, xj) = (p[i], p[j]);
            let probe = |si: f64, sj: f64, p: &mut Vec<f64>| -> Result<f64, NumericError> {
                p[i] = xi + si * h;
                p[j] = xj + sj * h;
                let v = finite_or_err(f(&Vector::from_raw(p.clone())));
                p[i] = xi;
                p[j] = xj;
                v
            };
            let fpp = probe(1.0, 1.0, &mut p)?;
            let fpm = probe(1.0, -1.0, &mut p)?;
            let fmp = probe(-1.0, 1.0, &mut p)?;
            let fmm = probe(-1.0, -1.0, &mut p)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    Ok(Matrix::from_raw(n, m).symmetrized())
}

/// Central-difference third derivative of a scalar function.
pub fn fd_third<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> Result<f64, NumericError> {
    assert!(h > 0.0 && h.is_finite());
    let f2p = finite_or_err(f(x + 2.0 * h))?;
    let f1p = finite_or_err(f(x + h))?;
    let f1m = finite_or_err(f(x - h))?;
    let f2m = finite_or_err(f(x - 2.0 * h))?;
    Ok((f2p - 2.0 * f1p + 2.0 * f1m - f2m) / (2.0 * h * h * h))
}
