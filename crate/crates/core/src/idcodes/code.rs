use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityOperator, HermFactor, HermitianOperator};

/// Decoder eigenvalues must lie in `[-TOL_EFFECT, 1 + TOL_EFFECT]`.
pub const TOL_EFFECT: f64 = 1e-9;

/// One message of an identification code: the encoding state and its decoding effect.
#[derive(Debug, Clone)]
pub struct IdEntry {
    pub state: DensityOperator,
    pub decoder: HermitianOperator,
}

impl IdEntry {
    pub fn new(state: DensityOperator, decoder: HermitianOperator) -> Result<Self> {
        if !decoder.is_effect(TOL_EFFECT) {
            let ev = decoder.eigenvalues();
            let bad = if ev.first().copied().unwrap_or(0.0) > 1.0 + TOL_EFFECT {
                ev[0]
            } else {
                ev.last().copied().unwrap_or(0.0)
            };
            return Err(Error::DecoderOutOfRange { eigenvalue: bad });
        }
        Ok(Self { state, decoder })
    }
}

/// Identification code: a list of (state, decoder) pairs. States live on the channel input
/// and decoders on the channel output, both with factor structure `dims` when no channel
/// is in between.
#[derive(Debug, Clone)]
pub struct IdCode {
    entries: Vec<IdEntry>,
    dims: Vec<usize>,
}

impl IdCode {
    /// Validates every decoder as an effect; states carry their own validation.
    /// `dims` are the state (input) dims; decoders may live on a different output space.
    pub fn new(dims: Vec<usize>, entries: Vec<IdEntry>) -> Result<Self> {
        let d: usize = dims.iter().product();
        let out = entries.first().map(|e| e.decoder.dim());
        for e in &entries {
            if e.state.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "code dims {dims:?} but a state has side {}",
                    e.state.dim()
                )));
            }
            if Some(e.decoder.dim()) != out {
                return Err(Error::DimensionMismatch("decoders differ in size".into()));
            }
            if !e.decoder.is_effect(TOL_EFFECT) {
                return Err(Error::DecoderOutOfRange {
                    eigenvalue: e.decoder.eigenvalues()[0],
                });
            }
        }
        Ok(Self { entries, dims })
    }

    pub(crate) fn from_trusted(dims: Vec<usize>, entries: Vec<IdEntry>) -> Self {
        Self { entries, dims }
    }

    pub fn empty(dims: Vec<usize>) -> Self {
        Self {
            entries: Vec::new(),
            dims,
        }
    }

    pub fn entries(&self) -> &[IdEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<IdEntry> {
        self.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Error probabilities of a code, with the index (pairs) attaining them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdErrorReport {
    /// `max_i 1 - Tr(T(rho_i) D_i)`.
    pub lambda1: f64,
    /// `max_{i != j} Tr(T(rho_i) D_j)`.
    pub lambda2: f64,
    pub argmax1: Option<usize>,
    /// `(i, j)`: state `i` accepted by decoder `j`.
    pub argmax2: Option<(usize, usize)>,
    /// Exact `(collisions, M)` behind `lambda2` for classical codes.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda2_count: Option<(usize, usize)>,
}

/// Hermitian operand with its low-rank factor, for repeated `Tr(A B)` evaluations.
#[derive(Clone, Copy)]
pub(crate) struct Operand<'a> {
    pub matrix: &'a ComplexMatrix,
    pub factor: &'a HermFactor,
}

pub(crate) fn factors_of<'a>(matrices: impl IndexedParallelIterator<Item = &'a ComplexMatrix>) -> Vec<HermFactor> {
    matrices.map(HermFactor::of).collect()
}

fn operands<'a>(matrices: &[&'a ComplexMatrix], factors: &'a [HermFactor]) -> Vec<Operand<'a>> {
    matrices
        .iter()
        .zip(factors)
        .map(|(m, f)| Operand { matrix: m, factor: f })
        .collect()
}

/// `Tr(A B)` through the factors when both are low rank, directly otherwise. The choice depends
/// only on the operands, so every caller gets the same floats for the same pair.
#[inline]
pub(crate) fn overlap(a: &Operand, b: &Operand) -> f64 {
    if a.factor.rank() * b.factor.rank() < a.factor.dim() {
        a.factor.overlap(&b.factor)
    } else {
        a.matrix.trace_product(b.matrix).re
    }
}

/// Error probabilities of `code` when its states pass through `channel` (identity if `None`).
///
/// Ties keep the smallest index (pair in lexicographic order), so the report does not depend
/// on the thread count.
pub fn eval_id_errors(code: &IdCode, channel: Option<&QuantumChannel>) -> Result<IdErrorReport> {
    let outputs: Vec<ComplexMatrix> = match channel {
        None => code.entries.iter().map(|e| e.state.matrix().clone()).collect(),
        Some(t) => {
            if t.d_in() != code.entries.first().map_or(t.d_in(), |e| e.state.dim()) {
                return Err(Error::DimensionMismatch(format!(
                    "channel input {} does not match code states",
                    t.d_in()
                )));
            }
            code.entries.iter().map(|e| t.apply_matrix(e.state.matrix())).collect()
        }
    };
    if let (Some(o), Some(e)) = (outputs.first(), code.entries.first()) {
        if o.rows() != e.decoder.dim() {
            return Err(Error::DimensionMismatch(format!(
                "outputs have side {}, decoders {}",
                o.rows(),
                e.decoder.dim()
            )));
        }
    }
    let out_refs: Vec<&ComplexMatrix> = outputs.iter().collect();
    let dec_refs: Vec<&ComplexMatrix> = code.entries.iter().map(|e| e.decoder.matrix()).collect();
    let out_f = factors_of(out_refs.par_iter().copied());
    let dec_f = factors_of(dec_refs.par_iter().copied());
    Ok(eval_overlaps(&operands(&out_refs, &out_f), &operands(&dec_refs, &dec_f)))
}

fn eval_overlaps(outputs: &[Operand], decoders: &[Operand]) -> IdErrorReport {
    let n = outputs.len();
    // per state: (1 - own acceptance, best false acceptance with its decoder index)
    let rows: Vec<(f64, Option<(f64, usize)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = 1.0 - overlap(&outputs[i], &decoders[i]);
            let mut best: Option<(f64, usize)> = None;
            for (j, dj) in decoders.iter().enumerate() {
                if j == i {
                    continue;
                }
                let v = overlap(&outputs[i], dj);
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, j));
                }
            }
            (own, best)
        })
        .collect();
    let mut report = IdErrorReport {
        lambda1: 0.0,
        lambda2: 0.0,
        argmax1: None,
        argmax2: None,
        lambda2_count: None,
    };
    for (i, (own, best)) in rows.into_iter().enumerate() {
        if report.argmax1.is_none() || own > report.lambda1 {
            report.lambda1 = own;
            report.argmax1 = Some(i);
        }
        if let Some((v, j)) = best {
            if report.argmax2.is_none() || v > report.lambda2 {
                report.lambda2 = v;
                report.argmax2 = Some((i, j));
            }
        }
    }
    // roundoff can push an exact 0 or 1 slightly outside
    report.lambda1 = report.lambda1.clamp(0.0, 1.0);
    report.lambda2 = report.lambda2.clamp(0.0, 1.0);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{support_projector, C64};
    use crate::sampling::{sample_random_state, Seed};

    fn perfect_code(d: usize) -> IdCode {
        let entries = (0..d)
            .map(|i| {
                let s = DensityOperator::basis_state(d, i);
                let p = HermitianOperator::new(ComplexMatrix::basis_projector(d, i), vec![d]).unwrap();
                IdEntry::new(s, p).unwrap()
            })
            .collect();
        IdCode::new(vec![d], entries).unwrap()
    }

    #[test]
    fn perfect_transmission_code_has_zero_errors() {
        let r = eval_id_errors(&perfect_code(4), None).unwrap();
        assert_eq!(r.lambda1, 0.0);
        assert_eq!(r.lambda2, 0.0);
        let r = eval_id_errors(&perfect_code(3), Some(&QuantumChannel::identity(3))).unwrap();
        assert!(r.lambda1 < 1e-12 && r.lambda2 < 1e-12);
    }

    #[test]
    fn identical_entries_with_full_decoder() {
        let s = DensityOperator::maximally_mixed(vec![2]);
        let e = IdEntry::new(s, HermitianOperator::identity(vec![2])).unwrap();
        let code = IdCode::new(vec![2], vec![e.clone(), e]).unwrap();
        let r = eval_id_errors(&code, None).unwrap();
        assert!((r.lambda2 - 1.0).abs() < 1e-12);
        assert_eq!(r.argmax2, Some((0, 1)));
    }

    #[test]
    fn matches_brute_force_double_loop() {
        let d = 4;
        let entries: Vec<IdEntry> = (0..3)
            .map(|k| {
                let s = sample_random_state(d, 2, Seed::new(31, k)).unwrap();
                let p = support_projector(&s, None);
                // shrink the decoder so lambda1 is nonzero
                let dec = HermitianOperator::new(p.matrix().scale(0.8), vec![d]).unwrap();
                IdEntry::new(s, dec).unwrap()
            })
            .collect();
        let code = IdCode::new(vec![d], entries.clone()).unwrap();
        let chan = QuantumChannel::depolarizing(d, 0.3).unwrap();
        let r = eval_id_errors(&code, Some(&chan)).unwrap();
        let (mut l1, mut l2) = (0.0f64, 0.0f64);
        for i in 0..3 {
            let out = chan.apply_matrix(entries[i].state.matrix());
            for j in 0..3 {
                // entrywise sum_{a,b} out_ab D_ba
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..d {
                    for b in 0..d {
                        acc += out[(a, b)] * entries[j].decoder.matrix()[(b, a)];
                    }
                }
                if i == j {
                    l1 = l1.max(1.0 - acc.re);
                } else {
                    l2 = l2.max(acc.re);
                }
            }
        }
        assert!((r.lambda1 - l1).abs() < 1e-12);
        assert!((r.lambda2 - l2).abs() < 1e-12);
    }

    #[test]
    fn rejects_decoder_above_one() {
        let s = DensityOperator::maximally_mixed(vec![2]);
        let d = HermitianOperator::new(ComplexMatrix::identity(2).scale(1.1), vec![2]).unwrap();
        assert!(matches!(IdEntry::new(s, d), Err(Error::DecoderOutOfRange { .. })));
    }

    #[test]
    fn channel_dimension_mismatch() {
        let code = perfect_code(2);
        assert!(eval_id_errors(&code, Some(&QuantumChannel::identity(3))).is_err());
    }
}
