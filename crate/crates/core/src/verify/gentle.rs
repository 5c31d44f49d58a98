use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{trace_norm, DensityOperator, HermitianOperator};

/// `(1/2) ||rho - Pi rho Pi / Tr(Pi rho Pi)||_1` against `8 sqrt(delta)`, `delta = 1 - Tr(rho Pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GentleCheck {
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

pub fn gentle_measurement_check(rho: &DensityOperator, pi: &HermitianOperator) -> Result<GentleCheck> {
    if rho.dim() != pi.dim() {
        return Err(Error::DimensionMismatch(format!("state {} vs projector {}", rho.dim(), pi.dim())));
    }
    if !pi.is_projector(1e-9) {
        return Err(Error::InvalidParameter("measurement operator is not a projector".into()));
    }
    let p = pi.matrix();
    let post = p.matmul(rho.matrix()).matmul(p);
    let mass = post.trace().re;
    if mass <= 1e-15 {
        return Err(Error::ZeroProbability);
    }
    let delta = (1.0 - mass).max(0.0);
    let lhs = 0.5 * trace_norm(&(rho.matrix() - &post.scale(1.0 / mass)));
    let rhs = 8.0 * delta.sqrt();
    Ok(GentleCheck {
        delta,
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-12,
    })
}
