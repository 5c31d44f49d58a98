use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix shape {rows}x{cols} must be positive"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(v, 0.0);
        }
        m
    }

    /// `|v><v|` for a column vector given as a slice.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |r, c| v[r] * v[c].conj())
    }

    /// Column vector (n x 1).
    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Computational basis projector `|k><k|` on `C^n`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[k * n + k] = ONE;
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(C64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    pub fn diag_real(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i].re)
            .collect()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert!(
            self.cols == other.rows && self.rows == other.cols,
            "trace_product shape mismatch"
        );
        let mut acc = ZERO;
        for i in 0..self.rows {
            let row = self.row(i);
            for (k, a) in row.iter().enumerate() {
                acc += a * other.data[k * other.cols + i];
            }
        }
        acc
    }

    /// Maximum entry-wise `|A - A^dagger|`.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                let d = (self.data[r * n + c] - self.data[c * n + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `(A + A^dagger)/2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        Self::from_fn(n, n, |r, c| (self.data[r * n + c] + self.data[c * n + r].conj()) * 0.5)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * p];
        for i in 0..n {
            let out_row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * p..(k + 1) * p];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self {
            rows: n,
            cols: p,
            data: out,
        }
    }

    /// `self^dagger * other`.
    pub fn adjoint_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "adjoint_matmul shape mismatch");
        let (m, n, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * p];
        for k in 0..m {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, a) in a_row.iter().enumerate() {
                let ac = a.conj();
                if ac == ZERO {
                    continue;
                }
                let out_row = &mut out[i * p..(i + 1) * p];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += ac * b;
                }
            }
        }
        Self {
            rows: n,
            cols: p,
            data: out,
        }
    }

    /// `A X A^dagger`.
    pub fn sandwich(&self, x: &Self) -> Self {
        self.matmul(x).matmul(&self.adjoint())
    }

    /// Kronecker product; row index `i*q + k`, column index `j*r + l` maps to `A_ij B_kl`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (self.rows, self.cols);
        let (r, s) = (other.rows, other.cols);
        let mut out = vec![ZERO; p * r * q * s];
        let width = q * s;
        for i in 0..p {
            for j in 0..q {
                let a = self.data[i * q + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..r {
                    let row = (i * r + k) * width;
                    for l in 0..s {
                        out[row + j * s + l] = a * other.data[k * s + l];
                    }
                }
            }
        }
        Self {
            rows: p * r,
            cols: q * s,
            data: out,
        }
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl ComplexMatrix {
    pub fn add_assign_scaled(&mut self, other: &Self, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }
}
