use nalgebra::SymmetricEigen;

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Entry-wise Hermiticity tolerance, scaled by `max(1, max|entry|)`.
pub const TOL_HERM: f64 = 1e-10;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.col(k)
    }

    /// `V f(diag) V^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let a = v[(r, k)] * w;
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * v[(c, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

pub(crate) fn hermitian_tolerance(a: &ComplexMatrix) -> f64 {
    TOL_HERM * a.max_abs().max(1.0)
}

/// Hermitian eigensolver; the input is symmetrized as `(A + A^dagger)/2` first.
pub fn eig_herm(a: &ComplexMatrix) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let residual = a.hermitian_residual();
    if residual > hermitian_tolerance(a) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(eig_herm_unchecked(a))
}

pub(crate) fn eig_herm_unchecked(a: &ComplexMatrix) -> Spectrum {
    let n = a.rows();
    if n == 1 {
        return Spectrum {
            eigenvalues: vec![a[(0, 0)].re],
            eigenvectors: ComplexMatrix::identity(1),
        };
    }
    let sym = a.hermitian_part().to_nalgebra();
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

pub(crate) fn eigenvalues_unchecked(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    if n == 1 {
        return vec![a[(0, 0)].re];
    }
    if n == 2 {
        // closed form keeps the tight inner loops cheap
        let p = a[(0, 0)].re;
        let q = a[(1, 1)].re;
        let off = (a[(0, 1)] + a[(1, 0)].conj()) * 0.5;
        let mean = 0.5 * (p + q);
        let rad = (0.25 * (p - q) * (p - q) + off.norm_sqr()).sqrt();
        return vec![mean + rad, mean - rad];
    }
    let sym = a.hermitian_part().to_nalgebra();
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    vals
}

/// Low-rank signed factor of a Hermitian matrix, `A = sum_k s_k w_k w_k^dagger` with
/// `s_k = +-1`.
///
/// Eigen-directions with `|lambda| <= 1e-13 * max |lambda|` are dropped.
#[derive(Debug, Clone)]
pub struct HermFactor {
    dim: usize,
    signs: Vec<f64>,
    /// Row-major `rank x dim`: row k is `sqrt(|lambda_k|) * v_k^dagger`.
    rows: Vec<C64>,
}

impl HermFactor {
    pub fn of(a: &ComplexMatrix) -> Self {
        let spec = eig_herm_unchecked(a);
        let n = a.rows();
        let top = spec.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let cutoff = 1e-13 * top;
        let mut rows = Vec::new();
        let mut signs = Vec::new();
        for (k, &l) in spec.eigenvalues.iter().enumerate() {
            if l.abs() <= cutoff || l == 0.0 {
                continue;
            }
            let s = l.abs().sqrt();
            for r in 0..n {
                rows.push(spec.eigenvectors[(r, k)].conj() * s);
            }
            signs.push(l.signum());
        }
        Self { dim: n, signs, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.signs.len()
    }

    /// `Tr(A B) = sum_{k,l} s_k s_l |<w_k, w_l>|^2`.
    pub fn overlap(&self, other: &HermFactor) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = 0.0;
        for (a, sa) in self.rows.chunks_exact(n).zip(&self.signs) {
            for (b, sb) in other.rows.chunks_exact(n).zip(&other.signs) {
                let mut z = ZERO;
                for (x, y) in a.iter().zip(b) {
                    z += x.conj() * y;
                }
                acc += sa * sb * z.norm_sqr();
            }
        }
        acc
    }
}
