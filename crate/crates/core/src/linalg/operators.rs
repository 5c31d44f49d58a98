use super::eigen::{eig_herm, eig_herm_unchecked, eigenvalues_unchecked, hermitian_tolerance, Spectrum};
use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Eigenvalue floor accepted for positive semidefinite operators.
pub const TOL_PSD: f64 = 1e-10;
/// Unit-trace tolerance for states.
pub const TOL_TRACE: f64 = 1e-10;

fn check_dims(matrix: &ComplexMatrix, dims: &[usize]) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "operator must be square, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidParameter(format!("invalid tensor dims {dims:?}")));
    }
    let prod: usize = dims.iter().product();
    if prod != matrix.rows() {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} multiply to {prod}, side length is {}",
            matrix.rows()
        )));
    }
    Ok(())
}

/// Positive semidefinite, unit-trace operator with explicit tensor-factor structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityOperator {
    /// Validates Hermiticity, eigenvalue floor and unit trace.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&matrix, &dims)?;
        let residual = matrix.hermitian_residual();
        if residual > hermitian_tolerance(&matrix) || !matrix.is_finite() {
            return Err(Error::NotHermitian { residual });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TOL_TRACE {
            return Err(Error::TraceNotOne { trace });
        }
        let min = eigenvalues_unchecked(&matrix).last().copied().unwrap_or(0.0);
        if min < -TOL_PSD {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(Self { matrix, dims })
    }

    /// For operators valid by construction; checked only under debug assertions.
    pub(crate) fn from_trusted(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        let m = matrix.hermitian_part();
        debug_assert!(
            Self::new(m.clone(), dims.clone()).is_ok(),
            "trusted density operator failed validation: {:?}",
            Self::new(m.clone(), dims.clone()).err()
        );
        Self { matrix: m, dims }
    }

    /// Normalizes the trace and symmetrizes before validating; for results carrying roundoff.
    pub fn normalized(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&matrix, &dims)?;
        let tr = matrix.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::TraceNotOne { trace: tr });
        }
        Self::new(matrix.hermitian_part().scale(1.0 / tr), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        let m = ComplexMatrix::identity(d).scale(1.0 / d as f64);
        Self { matrix: m, dims }
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let s = 1.0 / norm.sqrt();
        let v: Vec<C64> = psi.iter().map(|z| z * s).collect();
        Ok(Self::from_trusted(ComplexMatrix::outer(&v), vec![psi.len()]))
    }

    pub fn basis_state(d: usize, k: usize) -> Self {
        Self {
            matrix: ComplexMatrix::basis_projector(d, k),
            dims: vec![d],
        }
    }

    /// `|Phi_d><Phi_d|` with `|Phi_d> = d^{-1/2} sum_j |j>|j>`, dims `[d, d]`.
    pub fn max_entangled(d: usize) -> Self {
        let mut v = vec![ZERO; d * d];
        let s = 1.0 / (d as f64).sqrt();
        for j in 0..d {
            v[j * d + j] = C64::new(s, 0.0);
        }
        Self {
            matrix: ComplexMatrix::outer(&v),
            dims: vec![d, d],
        }
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        validate_distribution(p)?;
        Ok(Self {
            matrix: ComplexMatrix::from_real_diag(p),
            dims: vec![p.len()],
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&self.matrix, &dims)?;
        self.dims = dims;
        Ok(self)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn kron(&self, other: &DensityOperator) -> DensityOperator {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            matrix: self.matrix.kron(&other.matrix),
            dims,
        }
    }

    pub fn expectation(&self, op: &ComplexMatrix) -> f64 {
        self.matrix.trace_product(op).re
    }

    pub fn spectrum(&self) -> Spectrum {
        eig_herm_unchecked(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_unchecked(&self.matrix)
    }

    pub fn as_hermitian(&self) -> HermitianOperator {
        HermitianOperator {
            matrix: self.matrix.clone(),
            dims: self.dims.clone(),
        }
    }
}

/// Hermitian operator with tensor-factor structure (decoders, projectors, POVM elements).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&matrix, &dims)?;
        let residual = matrix.hermitian_residual();
        if residual > hermitian_tolerance(&matrix) || !matrix.is_finite() {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
            dims,
        })
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        debug_assert!(check_dims(&matrix, &dims).is_ok());
        Self {
            matrix: matrix.hermitian_part(),
            dims,
        }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let d = dims.iter().product();
        Self {
            matrix: ComplexMatrix::identity(d),
            dims,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn spectrum(&self) -> Spectrum {
        eig_herm_unchecked(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_unchecked(&self.matrix)
    }

    /// Checks `-tol <= A <= 1 + tol`.
    pub fn is_effect(&self, tol: f64) -> bool {
        let ev = self.eigenvalues();
        ev.first().is_none_or(|&top| top <= 1.0 + tol) && ev.last().is_none_or(|&low| low >= -tol)
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.matrix.matmul(&self.matrix).max_abs_diff(&self.matrix) <= tol
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tol).count()
    }
}

/// Any operator carrying a matrix and tensor dims.
pub trait FactoredOperator: Sized {
    fn parts(&self) -> (&ComplexMatrix, &[usize]);
    fn from_parts(matrix: ComplexMatrix, dims: Vec<usize>) -> Self;
}

impl FactoredOperator for DensityOperator {
    fn parts(&self) -> (&ComplexMatrix, &[usize]) {
        (&self.matrix, &self.dims)
    }
    fn from_parts(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        Self::from_trusted(matrix, dims)
    }
}

impl FactoredOperator for HermitianOperator {
    fn parts(&self) -> (&ComplexMatrix, &[usize]) {
        (&self.matrix, &self.dims)
    }
    fn from_parts(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        Self::from_trusted(matrix, dims)
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Partial trace on a raw matrix; keeps the listed factors in their original order.
pub fn partial_trace_matrix(
    matrix: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<(ComplexMatrix, Vec<usize>)> {
    check_dims(matrix, dims)?;
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                factors: dims.len(),
            });
        }
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let keep_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let trace_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = keep_dims.iter().product();
    let dt: usize = trace_dims.iter().product();
    let full = strides(dims);

    // full index for (kept multi-index a, traced multi-index t)
    let offsets = |factors: &[usize], fdims: &[usize], count: usize| -> Vec<usize> {
        let mut out = vec![0usize; count];
        let local = strides(fdims);
        for (idx, o) in out.iter_mut().enumerate() {
            let mut rem = idx;
            for (pos, &f) in factors.iter().enumerate() {
                let digit = rem / local[pos];
                rem %= local[pos];
                *o += digit * full[f];
            }
        }
        out
    };
    let keep_off = offsets(&kept, &keep_dims, dk);
    let trace_off = offsets(&traced, &trace_dims, dt);

    let n = matrix.rows();
    let data = matrix.data();
    let mut out = ComplexMatrix::zeros(dk.max(1), dk.max(1));
    for &t in &trace_off {
        for (a, &ka) in keep_off.iter().enumerate() {
            let row = (ka + t) * n;
            for (b, &kb) in keep_off.iter().enumerate() {
                out[(a, b)] += data[row + kb + t];
            }
        }
    }
    let keep_dims = if keep_dims.is_empty() { vec![1] } else { keep_dims };
    Ok((out, keep_dims))
}

pub fn partial_trace<O: FactoredOperator>(op: &O, keep: &[usize]) -> Result<O> {
    let (m, dims) = op.parts();
    let (out, dims) = partial_trace_matrix(m, dims, keep)?;
    Ok(O::from_parts(out, dims))
}

/// Reorders tensor factors: output factor `k` is input factor `perm[k]`.
pub fn permute_factors(
    matrix: &ComplexMatrix,
    dims: &[usize],
    perm: &[usize],
) -> Result<(ComplexMatrix, Vec<usize>)> {
    check_dims(matrix, dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() {
        return Err(Error::InvalidParameter(format!("permutation {perm:?} for dims {dims:?}")));
    }
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::InvalidParameter(format!("permutation {perm:?} for dims {dims:?}")));
        }
        seen[p] = true;
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let old_strides = strides(dims);
    let new_strides = strides(&new_dims);
    let n = matrix.rows();
    // map new linear index -> old linear index
    let map: Vec<usize> = (0..n)
        .map(|idx| {
            let mut rem = idx;
            let mut old = 0;
            for (k, &p) in perm.iter().enumerate() {
                let digit = rem / new_strides[k];
                rem %= new_strides[k];
                old += digit * old_strides[p];
            }
            old
        })
        .collect();
    let out = ComplexMatrix::from_fn(n, n, |r, c| matrix[(map[r], map[c])]);
    Ok((out, new_dims))
}

pub fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!("entry {x} is negative or not finite")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidDistribution(format!("sums to {s}")));
    }
    Ok(())
}

/// `-sum x log2 x` over clamped eigenvalues / probabilities, with `0 log 0 = 0`.
pub(crate) fn entropy_of(values: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in values {
        if x > 0.0 {
            s -= x * x.log2();
        }
    }
    s.max(0.0)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    let d = rho.dim() as f64;
    entropy_of(&rho.eigenvalues()).min(d.log2())
}

/// Shannon entropy in bits.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    validate_distribution(p)?;
    Ok(entropy_of(p).min((p.len() as f64).log2()))
}

/// `(1/2) ||rho - sigma||_1`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(trace_norm(&(rho.matrix() - sigma.matrix())) * 0.5)
}

pub(crate) fn trace_norm(a: &ComplexMatrix) -> f64 {
    eigenvalues_unchecked(a).iter().map(|l| l.abs()).sum()
}

/// Projector onto eigenvectors with eigenvalue above `rank_tol`
/// (default `1e-9 * largest eigenvalue`).
pub fn support_projector(rho: &DensityOperator, rank_tol: Option<f64>) -> HermitianOperator {
    let spec = rho.spectrum();
    support_from_spectrum(&spec, rank_tol, rho.dims().to_vec())
}

pub(crate) fn default_rank_tol(spec: &Spectrum) -> f64 {
    1e-9 * spec.eigenvalues.first().copied().unwrap_or(0.0).max(0.0)
}

pub(crate) fn support_from_spectrum(spec: &Spectrum, rank_tol: Option<f64>, dims: Vec<usize>) -> HermitianOperator {
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(spec));
    let p = spec.reconstruct_with(|l| if l > tol { 1.0 } else { 0.0 });
    HermitianOperator::from_trusted(p, dims)
}

/// Orthonormal basis (columns) of the range of a projector.
pub(crate) fn projector_basis(p: &ComplexMatrix) -> ComplexMatrix {
    let spec = eig_herm_unchecked(p);
    let r = spec.eigenvalues.iter().filter(|&&l| l > 0.5).count();
    let n = p.rows();
    ComplexMatrix::from_fn(n, r.max(1), |row, c| {
        if c < r {
            spec.eigenvectors[(row, c)]
        } else {
            ZERO
        }
    })
}

/// True iff every eigenvalue of `rho` compressed to the range of `within` (or the full
/// space) lies in `[a, b]`.
pub fn operator_interval_check(
    rho: &DensityOperator,
    a: f64,
    b: f64,
    within: Option<&HermitianOperator>,
) -> Result<bool> {
    if a > b {
        return Err(Error::InvalidParameter(format!("interval [{a}, {b}] is empty")));
    }
    let values = match within {
        None => rho.eigenvalues(),
        Some(p) => {
            if p.dim() != rho.dim() {
                return Err(Error::DimensionMismatch("projector and state differ in size".into()));
            }
            let basis = projector_basis(p.matrix());
            if basis.cols() == 1 && basis.max_abs() == 0.0 {
                return Ok(true);
            }
            let compressed = basis.adjoint_matmul(&rho.matrix().matmul(&basis));
            eigenvalues_unchecked(&compressed)
        }
    };
    Ok(values.iter().all(|&l| l >= a && l <= b))
}

/// Square root of a PSD operator. Negative eigenvalues down to `-max(tol, 1e-6)` are
/// clamped to zero; anything lower is an error.
pub fn mat_sqrt_psd(a: &HermitianOperator, tol: f64) -> Result<HermitianOperator> {
    let spec = eig_herm(a.matrix())?;
    let low = spec.eigenvalues.last().copied().unwrap_or(0.0);
    if low < -tol.max(1e-6) {
        return Err(Error::StronglyNegative { eigenvalue: low });
    }
    let m = spec.reconstruct_with(|l| l.max(0.0).sqrt());
    Ok(HermitianOperator::from_trusted(m, a.dims().to_vec()))
}

/// `log2` of a PSD matrix with eigenvalues floored at `floor`.
pub(crate) fn log2_psd(spec: &Spectrum, floor: f64) -> ComplexMatrix {
    spec.reconstruct_with(|l| l.max(floor).log2())
}
