use super::code::{IdCode, IdEntry};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator};

/// Off-diagonal magnitude tolerated in a "diagonal" decoder.
const TOL_DIAGONAL: f64 = 1e-12;

/// Added before flooring so that exact multiples of `1/c` stored with roundoff stay put.
const FLOOR_SLACK: f64 = 1e-9;

/// `floor(c x) / c`.
pub fn round_down(x: f64, c: u64) -> f64 {
    let c = c as f64;
    (c * x + FLOOR_SLACK).floor().max(0.0) / c
}

/// Rounds diagonal decoders down to multiples of `1/c` on `typical_sets[i]` (basis indices)
/// and zeroes them elsewhere.
pub fn round_decoders(code: &IdCode, typical_sets: &[Vec<usize>], c: u64) -> Result<IdCode> {
    if c == 0 {
        return Err(Error::InvalidParameter("c must be at least 1".into()));
    }
    if typical_sets.len() != code.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} typical sets for {} entries",
            typical_sets.len(),
            code.len()
        )));
    }
    let mut entries = Vec::with_capacity(code.len());
    for (i, (e, set)) in code.entries().iter().zip(typical_sets).enumerate() {
        let m = e.decoder.matrix();
        let n = m.rows();
        let off = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .any(|(r, c)| m[(r, c)].norm() > TOL_DIAGONAL);
        if off {
            return Err(Error::NonDiagonalDecoder { index: i });
        }
        let diag = m.diag_real();
        let mut rounded = vec![0.0; n];
        for &y in set {
            if y >= n {
                return Err(Error::IndexOutOfRange { index: y, factors: n });
            }
            rounded[y] = round_down(diag[y], c).min(1.0);
        }
        let decoder = HermitianOperator::new(ComplexMatrix::from_real_diag(&rounded), e.decoder.dims().to_vec())?;
        entries.push(IdEntry {
            state: e.state.clone(),
            decoder,
        });
    }
    IdCode::new(code.dims().to_vec(), entries)
}
