use crate::error::{Error, Result};
use crate::linalg::{
    eig_herm, partial_trace_matrix, trace_norm, ComplexMatrix, DensityOperator, C64, ZERO,
};

/// Kraus-completeness tolerance for `sum K^dagger K = I`.
pub const TOL_KRAUS: f64 = 1e-9;

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
    d_in: usize,
    d_out: usize,
}

fn kraus_completeness(kraus: &[ComplexMatrix], d_in: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d_in, d_in);
    for k in kraus {
        s.add_assign_scaled(&k.adjoint_matmul(k), C64::new(1.0, 0.0));
    }
    s
}

impl QuantumChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("channel needs at least one Kraus operator".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if let Some(k) = kraus.iter().find(|k| (k.rows(), k.cols()) != (d_out, d_in)) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator {}x{} in a {d_out}x{d_in} channel",
                k.rows(),
                k.cols()
            )));
        }
        let ch = Self { kraus, d_in, d_out };
        let residual = ch.kraus_residual();
        if residual > TOL_KRAUS || residual.is_nan() {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            kraus: vec![ComplexMatrix::identity(d)],
            d_in: d,
            d_out: d,
        }
    }

    /// `rho -> Tr(rho) I/d`, Kraus operators `|i><j| / sqrt(d)`.
    pub fn fully_depolarizing(d: usize) -> Self {
        let s = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        let kraus = (0..d * d)
            .map(|ij| {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(ij / d, ij % d)] = s;
                k
            })
            .collect();
        Self { kraus, d_in: d, d_out: d }
    }

    /// `rho -> (1-p) rho + p Tr(rho) I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("depolarizing probability {p}")));
        }
        let mut kraus = vec![ComplexMatrix::identity(d).scale((1.0 - p).sqrt())];
        if p > 0.0 {
            kraus.extend(Self::fully_depolarizing(d).kraus.into_iter().map(|k| k.scale(p.sqrt())));
        }
        Self::new(kraus)
    }

    /// `rho -> Tr(rho) sigma` on a `d_in`-dimensional input.
    pub fn constant(d_in: usize, sigma: &DensityOperator) -> Result<Self> {
        let spec = sigma.spectrum();
        let d_out = sigma.dim();
        let mut kraus = Vec::new();
        for (k, &l) in spec.eigenvalues.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let v = spec.vector(k);
            for j in 0..d_in {
                let mut m = ComplexMatrix::zeros(d_out, d_in);
                for (o, z) in v.iter().enumerate() {
                    m[(o, j)] = z * l.sqrt();
                }
                kraus.push(m);
            }
        }
        Self::new(kraus)
    }

    /// Unitary or isometric channel `rho -> V rho V^dagger`.
    pub fn isometry(v: ComplexMatrix) -> Result<Self> {
        Self::new(vec![v])
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// `max |sum K^dagger K - I|`.
    pub fn kraus_residual(&self) -> f64 {
        kraus_completeness(&self.kraus, self.d_in).max_abs_diff(&ComplexMatrix::identity(self.d_in))
    }

    /// `sum K X K^dagger` on an arbitrary `d_in x d_in` matrix.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out.add_assign_scaled(&k.sandwich(x), C64::new(1.0, 0.0));
        }
        out
    }

    /// Heisenberg picture `sum K^dagger Y K`.
    pub fn adjoint_matrix(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            out.add_assign_scaled(&k.adjoint_matmul(&y.matmul(k)), C64::new(1.0, 0.0));
        }
        out
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {} applied to a {}-dimensional state",
                self.d_in,
                rho.dim()
            )));
        }
        Ok(DensityOperator::from_trusted(
            self.apply_matrix(rho.matrix()).hermitian_part(),
            vec![self.d_out],
        ))
    }

    /// `T2 o T1` where `self = T1`.
    pub fn then(&self, next: &QuantumChannel) -> Result<QuantumChannel> {
        if next.d_in != self.d_out {
            return Err(Error::DimensionMismatch("composition of incompatible channels".into()));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b.matmul(a));
            }
        }
        Ok(QuantumChannel {
            kraus,
            d_in: self.d_in,
            d_out: next.d_out,
        })
    }

    /// `(id (x) T) Phi_{d_in}` on `C^{d_in} (x) C^{d_out}`.
    pub fn choi_state(&self) -> DensityOperator {
        let (di, dout) = (self.d_in, self.d_out);
        let s = 1.0 / (di as f64).sqrt();
        let mut j = ComplexMatrix::zeros(di * dout, di * dout);
        for k in &self.kraus {
            // |kappa> = sum_j |j> (x) K|j> / sqrt(d)
            let kappa: Vec<C64> = (0..di * dout).map(|idx| k[(idx % dout, idx / dout)] * s).collect();
            for (r, a) in kappa.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                for (c, b) in kappa.iter().enumerate() {
                    j[(r, c)] += a * b.conj();
                }
            }
        }
        DensityOperator::from_trusted(j.hermitian_part(), vec![di, dout])
    }

    /// Stinespring isometry `V = sum_k K_k (x) |k>_env`.
    pub fn stinespring(&self) -> StinespringDilation {
        let d_env = self.kraus.len();
        let v = ComplexMatrix::from_fn(self.d_out * d_env, self.d_in, |row, i| {
            self.kraus[row % d_env][(row / d_env, i)]
        });
        StinespringDilation {
            isometry: v,
            d_out: self.d_out,
            d_env,
        }
    }

    /// `T` followed by dephasing in the orthonormal basis given by the columns of `basis`.
    pub fn dephase(&self, basis: &ComplexMatrix) -> Result<QuantumChannel> {
        if basis.rows() != self.d_out || basis.cols() != self.d_out {
            return Err(Error::DimensionMismatch("dephasing basis must be d_out x d_out".into()));
        }
        let residual = basis.adjoint_matmul(basis).max_abs_diff(&ComplexMatrix::identity(self.d_out));
        if residual > 1e-9 {
            return Err(Error::InvalidParameter(format!("dephasing basis not unitary ({residual:.2e})")));
        }
        let mut kraus = Vec::with_capacity(self.d_out * self.kraus.len());
        for j in 0..self.d_out {
            let e = basis.col(j);
            let proj = ComplexMatrix::outer(&e);
            for k in &self.kraus {
                kraus.push(proj.matmul(k));
            }
        }
        Ok(QuantumChannel {
            kraus,
            d_in: self.d_in,
            d_out: self.d_out,
        })
    }

    /// Constant iff the Choi state equals `(I/d_in) (x) sigma` entry-wise within `tol`.
    pub fn is_constant(&self, tol: f64) -> bool {
        let sigma = self.apply_matrix(&ComplexMatrix::identity(self.d_in).scale(1.0 / self.d_in as f64));
        let product = ComplexMatrix::identity(self.d_in)
            .scale(1.0 / self.d_in as f64)
            .kron(&sigma);
        self.choi_state().matrix().max_abs_diff(&product) <= tol
    }

    /// Extensional equality: Choi states within `tol` in trace distance.
    pub fn approx_eq(&self, other: &QuantumChannel, tol: f64) -> bool {
        if (self.d_in, self.d_out) != (other.d_in, other.d_out) {
            return false;
        }
        0.5 * trace_norm(&(self.choi_state().matrix() - other.choi_state().matrix())) <= tol
    }
}

/// Inverts the Choi map. The first factor of `choi` is the input system.
///
/// Fails when the input reduction is not `I/d_in` within `1e-6`.
pub fn channel_from_choi(choi: &DensityOperator, d_in: usize, d_out: usize) -> Result<QuantumChannel> {
    if choi.dim() != d_in * d_out {
        return Err(Error::DimensionMismatch(format!(
            "Choi state of size {} for a {d_in} -> {d_out} channel",
            choi.dim()
        )));
    }
    let (red, _) = partial_trace_matrix(choi.matrix(), &[d_in, d_out], &[0])?;
    let deviation = red.max_abs_diff(&ComplexMatrix::identity(d_in).scale(1.0 / d_in as f64));
    if deviation > 1e-6 {
        return Err(Error::ReductionNotMaximallyMixed { deviation });
    }
    let spec = eig_herm(choi.matrix())?;
    let top = spec.eigenvalues.first().copied().unwrap_or(0.0);
    let mut kraus = Vec::new();
    for (k, &mu) in spec.eigenvalues.iter().enumerate() {
        if mu <= 1e-14 * top {
            continue;
        }
        let w = (mu * d_in as f64).sqrt();
        kraus.push(ComplexMatrix::from_fn(d_out, d_in, |o, i| {
            spec.eigenvectors[(i * d_out + o, k)] * w
        }));
    }
    // absorb the small reduction drift: K -> K S^{-1/2}
    let s = kraus_completeness(&kraus, d_in);
    let s_spec = eig_herm(&s)?;
    if s_spec.eigenvalues.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::ReductionNotMaximallyMixed { deviation });
    }
    let s_inv_half = s_spec.reconstruct_with(|l| 1.0 / l.sqrt());
    let kraus = kraus.into_iter().map(|k| k.matmul(&s_inv_half)).collect();
    QuantumChannel::new(kraus)
}

/// Isometry `V: C^{d_in} -> C^{d_out} (x) C^{d_env}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StinespringDilation {
    pub isometry: ComplexMatrix,
    pub d_out: usize,
    pub d_env: usize,
}

impl StinespringDilation {
    pub fn d_in(&self) -> usize {
        self.isometry.cols()
    }

    pub fn isometry_residual(&self) -> f64 {
        self.isometry
            .adjoint_matmul(&self.isometry)
            .max_abs_diff(&ComplexMatrix::identity(self.d_in()))
    }

    /// `V rho V^dagger` on `C^{d_out} (x) C^{d_env}`.
    pub fn dilate(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.d_in() {
            return Err(Error::DimensionMismatch("dilation input dimension".into()));
        }
        Ok(DensityOperator::from_trusted(
            self.isometry.sandwich(rho.matrix()).hermitian_part(),
            vec![self.d_out, self.d_env],
        ))
    }

    /// `Tr_env(V rho V^dagger)`.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let full = self.dilate(rho)?;
        let (m, dims) = partial_trace_matrix(full.matrix(), full.dims(), &[0])?;
        Ok(DensityOperator::from_trusted(m, dims))
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let kraus = (0..self.d_env)
            .map(|k| ComplexMatrix::from_fn(self.d_out, self.d_in(), |o, i| self.isometry[(o * self.d_env + k, i)]))
            .collect();
        QuantumChannel::new(kraus)
    }
}
