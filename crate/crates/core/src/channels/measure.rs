use crate::error::{Error, Result};
use crate::linalg::{
    eig_herm, von_neumann_entropy, ComplexMatrix, DensityOperator, HermitianOperator, C64, TOL_PSD,
};

/// Measurement channel `rho -> sum_y Tr(rho M_y) |y><y|`.
#[derive(Debug, Clone, PartialEq)]
pub struct QcChannel {
    povm: Vec<HermitianOperator>,
    d_in: usize,
}

impl QcChannel {
    pub fn new(povm: Vec<HermitianOperator>) -> Result<Self> {
        let d_in = povm
            .first()
            .ok_or_else(|| Error::InvalidParameter("POVM needs at least one element".into()))?
            .dim();
        let mut sum = ComplexMatrix::zeros(d_in, d_in);
        for m in &povm {
            if m.dim() != d_in {
                return Err(Error::DimensionMismatch("POVM elements differ in size".into()));
            }
            let low = m.eigenvalues().last().copied().unwrap_or(0.0);
            if low < -TOL_PSD {
                return Err(Error::NotPositive { min_eigenvalue: low });
            }
            sum.add_assign_scaled(m.matrix(), C64::new(1.0, 0.0));
        }
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(d_in));
        if residual > 1e-9 {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self { povm, d_in })
    }

    /// Projective measurement onto the columns of a unitary (the computational basis for `I`).
    pub fn projective(basis: &ComplexMatrix) -> Result<Self> {
        let d = basis.rows();
        let povm = (0..basis.cols())
            .map(|k| HermitianOperator::new(ComplexMatrix::outer(&basis.col(k)), vec![d]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(povm)
    }

    pub fn computational(d: usize) -> Self {
        let povm = (0..d)
            .map(|k| HermitianOperator::from_trusted(ComplexMatrix::basis_projector(d, k), vec![d]))
            .collect();
        Self { povm, d_in: d }
    }

    pub fn povm(&self) -> &[HermitianOperator] {
        &self.povm
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn alphabet_size(&self) -> usize {
        self.povm.len()
    }

    /// `p_y = Tr(rho M_y)` on a raw matrix, clamped at zero.
    pub fn probabilities_of(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.povm
            .iter()
            .map(|m| rho.trace_product(m.matrix()).re.max(0.0))
            .collect()
    }

    pub fn qc_apply(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "POVM on dimension {} applied to a {}-dimensional state",
                self.d_in,
                rho.dim()
            )));
        }
        let mut p = self.probabilities_of(rho.matrix());
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        Ok(p)
    }

    /// Constant iff every `M_y` is proportional to the identity.
    pub fn is_constant(&self, tol: f64) -> bool {
        self.povm.iter().all(|m| {
            let c = m.matrix().trace().re / self.d_in as f64;
            m.matrix().max_abs_diff(&ComplexMatrix::identity(self.d_in).scale(c)) <= tol
        })
    }
}

/// Preparation channel `x -> rho_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqChannel {
    letter_states: Vec<DensityOperator>,
}

impl CqChannel {
    pub fn new(letter_states: Vec<DensityOperator>) -> Result<Self> {
        let d = letter_states
            .first()
            .ok_or_else(|| Error::InvalidParameter("cq channel needs at least one letter".into()))?
            .dim();
        if letter_states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch("letter states differ in size".into()));
        }
        Ok(Self { letter_states })
    }

    pub fn letter_states(&self) -> &[DensityOperator] {
        &self.letter_states
    }

    pub fn alphabet_size(&self) -> usize {
        self.letter_states.len()
    }

    pub fn d_out(&self) -> usize {
        self.letter_states[0].dim()
    }

    /// `sum_x P(x) rho_x`.
    pub fn average(&self, p: &[f64]) -> Result<DensityOperator> {
        if p.len() != self.letter_states.len() {
            return Err(Error::DimensionMismatch("distribution length differs from alphabet".into()));
        }
        let d = self.d_out();
        let mut m = ComplexMatrix::zeros(d, d);
        for (px, s) in p.iter().zip(&self.letter_states) {
            m.add_assign_scaled(s.matrix(), C64::new(*px, 0.0));
        }
        DensityOperator::normalized(m, vec![d])
    }

    /// Purification `|Psi_x> = sum_k sqrt(lambda_k) |k> (x) |v_k>` as a vector on
    /// `C^d (x) C^d` (reference factor first).
    pub fn purification(&self, x: usize) -> Result<Vec<C64>> {
        let state = self
            .letter_states
            .get(x)
            .ok_or_else(|| Error::InvalidParameter(format!("letter {x} out of range")))?;
        let spec = eig_herm(state.matrix())?;
        let d = state.dim();
        let mut v = vec![C64::new(0.0, 0.0); d * d];
        for k in 0..d {
            let w = spec.eigenvalues[k].max(0.0).sqrt();
            for i in 0..d {
                v[k * d + i] = spec.eigenvectors[(i, k)] * w;
            }
        }
        Ok(v)
    }

    pub fn letter_entropies(&self) -> Vec<f64> {
        self.letter_states.iter().map(von_neumann_entropy).collect()
    }
}
