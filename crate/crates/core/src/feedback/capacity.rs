use serde::{Deserialize, Serialize};

use crate::channels::{max_output_entropy, QcChannel, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_herm, partial_trace, shannon_entropy, von_neumann_entropy, ComplexMatrix, DensityOperator, HermitianOperator,
};

/// Constancy tolerance for the zero-capacity branch.
pub const TOL_CONSTANT: f64 = 1e-9;

/// Minimum purity `Tr(psi^2)` of the components of a correlated resource.
pub const MIN_PURITY: f64 = 1.0 - 1e-8;

/// A capacity value in bits together with the optimizer's certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityValue {
    pub bits: f64,
    /// Certified upper bound on `bits` (equal to it for constant channels).
    pub upper_bound: f64,
    pub constant: bool,
    pub converged: bool,
}

impl CapacityValue {
    fn zero() -> Self {
        Self {
            bits: 0.0,
            upper_bound: 0.0,
            constant: true,
            converged: true,
        }
    }
}

/// Identification capacity of a qc-channel with passive feedback: its maximum output
/// Shannon entropy, or 0 when every effect is proportional to the identity.
pub fn qc_feedback_capacity(channel: &QcChannel, tol: f64) -> Result<CapacityValue> {
    if channel.is_constant(TOL_CONSTANT) {
        return Ok(CapacityValue::zero());
    }
    let best = max_output_entropy(channel, tol)?;
    Ok(CapacityValue {
        bits: best.value,
        upper_bound: best.upper_bound,
        constant: false,
        converged: best.converged,
    })
}

/// Identification capacity of a quantum channel with coherent feedback: twice its maximum
/// output von Neumann entropy, or 0 for constant channels.
pub fn coherent_feedback_capacity(channel: &QuantumChannel, tol: f64) -> Result<CapacityValue> {
    if channel.is_constant(TOL_CONSTANT) {
        return Ok(CapacityValue::zero());
    }
    let best = max_output_entropy(channel, tol)?;
    Ok(CapacityValue {
        bits: 2.0 * best.value,
        upper_bound: 2.0 * best.upper_bound,
        constant: false,
        converged: best.converged,
    })
}

/// `H(p) + 2 sum_mu p_mu S(Tr_B psi_mu)` for pure bipartite states `psi_mu` on `A (x) B`.
pub fn correlated_capacity(p: &[f64], states: &[DensityOperator]) -> Result<f64> {
    if p.len() != states.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for {} states",
            p.len(),
            states.len()
        )));
    }
    let h = shannon_entropy(p)?;
    let mut ent = 0.0;
    for (index, (psi, &w)) in states.iter().zip(p).enumerate() {
        if psi.dims().len() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "state {index} has dims {:?}, expected two factors",
                psi.dims()
            )));
        }
        let purity = psi.purity();
        if purity < MIN_PURITY {
            return Err(Error::NotPure { index, purity });
        }
        if w > 0.0 {
            ent += w * von_neumann_entropy(&partial_trace(psi, &[0])?);
        }
    }
    Ok(h + 2.0 * ent)
}

/// The qc-channel `rho -> (<m_y| T(rho) |m_y>)_y` for the eigenbasis `|m_y>` of `T`'s
/// entropy-maximizing output; its effects are `T^dagger(|m_y><m_y|)`.
pub fn dephased_measurement(channel: &QuantumChannel, tol: f64) -> Result<QcChannel> {
    let best = max_output_entropy(channel, tol)?;
    let basis = eig_herm(best.output.matrix())?.eigenvectors;
    let d = channel.d_in();
    let povm = (0..basis.cols())
        .map(|y| {
            let m = channel.adjoint_matrix(&ComplexMatrix::outer(&basis.col(y)));
            HermitianOperator::new(m.hermitian_part(), vec![d])
        })
        .collect::<Result<Vec<_>>>()?;
    QcChannel::new(povm)
}
