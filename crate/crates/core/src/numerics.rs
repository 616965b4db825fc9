//! Dense complex linear algebra used by the rest of the crate.
//!
//! [`ComplexMatrix`] stores its entries in column-major order, so `vec(X)` is
//! simply the backing slice and columns are contiguous.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from column-major entries. Every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadShape { rows, cols, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: pos % rows.max(1), col: pos / rows.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Stacks equal-length vectors as the columns of a matrix.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::ShapeMismatch(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Self::new(rows, columns.len(), data)
    }

    /// Real matrix promoted to complex. `f(i, j)` gives entry (i, j).
    pub fn from_real_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(rows, cols, |i, j| C64::new(f(i, j), 0.0))
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Column-major entries, i.e. `vec(self)`.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b == ZERO {
                    continue;
                }
                for (d, &a) in dst.iter_mut().zip(self.col(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "matvec length mismatch");
        let mut y = vec![ZERO; self.rows];
        for (k, &xk) in x.iter().enumerate() {
            if xk == ZERO {
                continue;
            }
            for (yi, &a) in y.iter_mut().zip(self.col(k)) {
                *yi += a * xk;
            }
        }
        y
    }

    /// `selfᴴ · x`
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows, "adjoint_matvec length mismatch");
        (0..self.cols).map(|j| dot_conj(self.col(j), x)).collect()
    }

    /// `selfᴴ · self`
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for j in 0..self.cols {
            for i in 0..=j {
                let v = dot_conj(self.col(i), self.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
            g[(j, j)] = C64::new(g[(j, j)].re, 0.0);
        }
        g
    }

    /// Largest `|A - Aᴴ|` entry relative to the Frobenius norm (0 for the zero matrix).
    pub fn hermitian_asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in 0..=j {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst / norm
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// `Σ conj(a_i) b_i`
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Column-major stacking of `x`.
pub fn vec(x: &ComplexMatrix) -> Vec<C64> {
    x.as_slice().to_vec()
}

/// Inverse of [`vec`].
pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Result<ComplexMatrix> {
    ComplexMatrix::new(rows, cols, v.to_vec())
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: ComplexMatrix,
}

const HERMITIAN_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;
// Off-diagonal entries below this fraction of ‖A‖_F are treated as converged.
const ABS_FLOOR: f64 = 1e-18;

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of `a_pq` with a diagonal unitary and
/// then applies the real symmetric Jacobi rotation. A pair is skipped once
/// `|a_pq| ≤ ε·sqrt(|a_pp a_qq|)` or `|a_pq| ≤ 1e-18·‖A‖_F`; the iteration stops
/// after a sweep that performs no rotation.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return Err(Error::ShapeMismatch(format!("hermitian_eig needs a square n>=1 matrix, got {:?}", a.shape())));
    }
    let asymmetry = a.hermitian_asymmetry();
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NonHermitianInput { asymmetry });
    }
    let norm = a.frobenius_norm();
    let mut w = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    for i in 0..n {
        w[(i, i)] = C64::new(w[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let floor = ABS_FLOOR * norm;

    let mut converged = norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                let mag = apq.norm();
                let app = w[(p, p)].re;
                let aqq = w[(q, q)].re;
                if mag <= floor || mag <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = apq / mag;
                let pc = phase.conj();
                // J = [[c, s], [-s·conj(e), c·conj(e)]] on coordinates (p, q)
                let jqp = -pc * s;
                let jqq = pc * c;
                for k in 0..n {
                    let x = w[(k, p)];
                    let y = w[(k, q)];
                    w[(k, p)] = x * c + y * jqp;
                    w[(k, q)] = x * s + y * jqq;
                }
                let jqp_c = jqp.conj();
                let jqq_c = jqq.conj();
                for k in 0..n {
                    let x = w[(p, k)];
                    let y = w[(q, k)];
                    w[(p, k)] = x * c + y * jqp_c;
                    w[(q, k)] = x * s + y * jqq_c;
                }
                w[(p, q)] = ZERO;
                w[(q, p)] = ZERO;
                w[(p, p)] = C64::new(app - t * mag, 0.0);
                w[(q, q)] = C64::new(aqq + t * mag, 0.0);
                for k in 0..n {
                    let x = v[(k, p)];
                    let y = v[(k, q)];
                    v[(k, p)] = x * c + y * jqp;
                    v[(k, q)] = x * s + y * jqq;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { what: "Jacobi eigensolver", iterations: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].re.total_cmp(&w[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| w[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.col_mut(dst).copy_from_slice(v.col(src));
    }
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    ComplexMatrix::from_fn(m * p, n * q, |r, c| a[(r / p, c / q)] * b[(r % p, c % q)])
}

/// Proximal operator of `t·|x|` on the complex plane.
pub fn soft_threshold_complex(x: C64, t: f64) -> C64 {
    debug_assert!(t >= 0.0);
    // sqrt of norm_sqr: hypot's overflow guard costs more than it buys here
    let mag = x.norm_sqr().sqrt();
    if mag <= t {
        ZERO
    } else {
        x * ((mag - t) / mag)
    }
}

const POWER_MAX_ITERS: usize = 20_000;
const POWER_TOL: f64 = 1e-13;

/// `λ_max(AᴴA)` by power iteration.
pub fn spectral_norm_sq(a: &ComplexMatrix) -> Result<f64> {
    spectral_norm_sq_with(a.cols(), |x| a.adjoint_matvec(&a.matvec(x)))
}

/// `λ_max` of a Hermitian PSD operator given only its action `x ↦ AᴴA·x`.
pub fn spectral_norm_sq_with(n: usize, apply_gram: impl Fn(&[C64]) -> Vec<C64>) -> Result<f64> {
    if n == 0 {
        return Err(Error::ShapeMismatch("spectral norm of an empty operator".into()));
    }
    // fixed, generic start vector so results are reproducible
    let mut x: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + 0.37 * ((i * 7 + 3) % 11) as f64, 0.21 * ((i * 5 + 1) % 13) as f64))
        .collect();
    let nx = norm_sqr(&x).sqrt();
    x.iter_mut().for_each(|z| *z /= nx);

    let mut prev = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        let y = apply_gram(&x);
        let rq = dot_conj(&x, &y).re;
        let ny = norm_sqr(&y).sqrt();
        if ny == 0.0 {
            return Ok(0.0);
        }
        if (rq - prev).abs() <= POWER_TOL * rq.abs() {
            return Ok(rq.max(ny));
        }
        prev = rq;
        x = y.into_iter().map(|z| z / ny).collect();
    }
    Err(Error::NonConvergence { what: "power iteration", iterations: POWER_MAX_ITERS })
}
