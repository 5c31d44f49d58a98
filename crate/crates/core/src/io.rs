//! JSON and CSV interchange: matrices as row lists of `[re, im]` pairs, channels, codes,
//! feedback strategies, output distributions, and the experiment report envelope.

use std::collections::BTreeMap;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

use crate::channels::{CqChannel, QcChannel, QuantumChannel};
use crate::error::{Error, Result};
use crate::feedback::{history_string, parse_history, FeedbackStrategy};
use crate::idcodes::{IdCode, IdEntry};
use crate::linalg::{ComplexMatrix, DensityOperator, HermitianOperator, C64};

/// Row-major matrix, each entry `[re, im]`.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &ComplexMatrix) -> MatrixRows {
    (0..m.rows()).map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn matrix_from_rows(rows: &MatrixRows) -> Result<ComplexMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::Format("matrix must have at least one row and column".into()));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Format("matrix rows differ in length".into()));
    }
    let data: Vec<C64> = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    let m = ComplexMatrix::new(rows.len(), cols, data)?;
    if !m.is_finite() {
        return Err(Error::Format("matrix has non-finite entries".into()));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumChannelJson {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<MatrixRows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcChannelJson {
    pub d_in: usize,
    pub povm: Vec<MatrixRows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqChannelJson {
    pub d_out: usize,
    pub letter_states: Vec<MatrixRows>,
}

/// Any channel file; the keys decide the kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelJson {
    Quantum(QuantumChannelJson),
    Qc(QcChannelJson),
    Cq(CqChannelJson),
}

impl From<&QuantumChannel> for QuantumChannelJson {
    fn from(t: &QuantumChannel) -> Self {
        Self {
            d_in: t.d_in(),
            d_out: t.d_out(),
            kraus: t.kraus().iter().map(matrix_to_rows).collect(),
        }
    }
}

impl QuantumChannelJson {
    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let kraus = self.kraus.iter().map(matrix_from_rows).collect::<Result<Vec<_>>>()?;
        if kraus.iter().any(|k| k.rows() != self.d_out || k.cols() != self.d_in) {
            return Err(Error::Format(format!(
                "Kraus operators must be {} x {}",
                self.d_out, self.d_in
            )));
        }
        QuantumChannel::new(kraus)
    }
}

impl From<&QcChannel> for QcChannelJson {
    fn from(t: &QcChannel) -> Self {
        Self {
            d_in: t.d_in(),
            povm: t.povm().iter().map(|m| matrix_to_rows(m.matrix())).collect(),
        }
    }
}

impl QcChannelJson {
    pub fn to_channel(&self) -> Result<QcChannel> {
        let povm = self
            .povm
            .iter()
            .map(|rows| {
                let m = matrix_from_rows(rows)?;
                if m.rows() != self.d_in {
                    return Err(Error::Format(format!("POVM elements must be {0} x {0}", self.d_in)));
                }
                HermitianOperator::new(m, vec![self.d_in])
            })
            .collect::<Result<Vec<_>>>()?;
        QcChannel::new(povm)
    }
}

impl From<&CqChannel> for CqChannelJson {
    fn from(t: &CqChannel) -> Self {
        Self {
            d_out: t.d_out(),
            letter_states: t.letter_states().iter().map(|s| matrix_to_rows(s.matrix())).collect(),
        }
    }
}

impl CqChannelJson {
    pub fn to_channel(&self) -> Result<CqChannel> {
        let states = self
            .letter_states
            .iter()
            .map(|rows| {
                let m = matrix_from_rows(rows)?;
                if m.rows() != self.d_out {
                    return Err(Error::Format(format!("letter states must be {0} x {0}", self.d_out)));
                }
                DensityOperator::new(m, vec![self.d_out])
            })
            .collect::<Result<Vec<_>>>()?;
        CqChannel::new(states)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub state: MatrixRows,
    pub decoder: MatrixRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdCodeJson {
    pub dims: Vec<usize>,
    pub entries: Vec<EntryJson>,
}

impl From<&IdCode> for IdCodeJson {
    fn from(code: &IdCode) -> Self {
        Self {
            dims: code.dims().to_vec(),
            entries: code
                .entries()
                .iter()
                .map(|e| EntryJson {
                    state: matrix_to_rows(e.state.matrix()),
                    decoder: matrix_to_rows(e.decoder.matrix()),
                })
                .collect(),
        }
    }
}

impl IdCodeJson {
    /// Decoders of the state's size share its factor structure; others get a single factor.
    pub fn to_code(&self) -> Result<IdCode> {
        let d: usize = self.dims.iter().product();
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let state = DensityOperator::new(matrix_from_rows(&e.state)?, self.dims.clone())?;
                let dec = matrix_from_rows(&e.decoder)?;
                let dims = if dec.rows() == d { self.dims.clone() } else { vec![dec.rows()] };
                IdEntry::new(state, HermitianOperator::new(dec, dims)?)
            })
            .collect::<Result<Vec<_>>>()?;
        IdCode::new(self.dims.clone(), entries)
    }
}

/// Passive-feedback strategy keyed by history strings (`""` is the first round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyJson {
    pub n: usize,
    pub alphabet: usize,
    pub nodes: BTreeMap<String, MatrixRows>,
}

impl From<&FeedbackStrategy> for StrategyJson {
    fn from(f: &FeedbackStrategy) -> Self {
        let mut nodes = BTreeMap::new();
        for (t, level) in f.levels().iter().enumerate() {
            for (h, s) in level.iter().enumerate() {
                nodes.insert(history_string(h, t, f.alphabet()), matrix_to_rows(s.matrix()));
            }
        }
        Self {
            n: f.n(),
            alphabet: f.alphabet(),
            nodes,
        }
    }
}

impl StrategyJson {
    pub fn to_strategy(&self) -> Result<FeedbackStrategy> {
        let mut levels: Vec<Vec<Option<DensityOperator>>> =
            (0..self.n).map(|t| vec![None; self.alphabet.pow(t as u32)]).collect();
        for (h, rows) in &self.nodes {
            let t = h.len();
            if t >= self.n {
                return Err(Error::Format(format!("history '{h}' is too long for n={}", self.n)));
            }
            let m = matrix_from_rows(rows)?;
            let d = m.rows();
            levels[t][parse_history(h, self.alphabet)?] = Some(DensityOperator::new(m, vec![d])?);
        }
        let levels = levels
            .into_iter()
            .enumerate()
            .map(|(t, level)| {
                level
                    .into_iter()
                    .enumerate()
                    .map(|(h, s)| {
                        s.ok_or_else(|| {
                            Error::Format(format!("missing state for history '{}'", history_string(h, t, self.alphabet)))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        FeedbackStrategy::new(self.alphabet, levels)
    }
}

/// `string,probability` lines with a header, strings in index order.
pub fn distribution_csv(q: &[f64], n: usize, alphabet: usize) -> String {
    let mut out = String::from("string,probability\n");
    for (i, p) in q.iter().enumerate() {
        out.push_str(&format!("{},{}\n", history_string(i, n, alphabet), p));
    }
    out
}

/// Named pass/fail outcome of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Output of one CLI command. The wall-clock duration is kept out of the serialized form so
/// that reruns with the same config produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub items: Vec<Value>,
    pub verdicts: Vec<Verdict>,
    #[serde(skip)]
    pub duration_secs: f64,
}

impl ExperimentReport {
    pub fn new(command: impl Into<String>, config: Value) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            items: Vec::new(),
            verdicts: Vec::new(),
            duration_secs: 0.0,
        }
    }

    pub fn push_item<T: Serialize>(&mut self, item: &T) -> Result<()> {
        self.items.push(to_value(item)?);
        Ok(())
    }

    pub fn verdict(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict::new(name, pass, detail));
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Format(e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(x: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(x).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idcodes::{greedy_random_code, GreedyParams};
    use crate::sampling::{sample_random_channel, sample_random_state, RandomChannelSpec, Seed};

    #[test]
    fn channel_roundtrip_is_exact() {
        let t = sample_random_channel(RandomChannelSpec::new(2, 3, 2).unwrap(), Seed::new(1, 0)).unwrap();
        let s = to_json_string(&ChannelJson::Quantum((&t).into())).unwrap();
        match from_json_str::<ChannelJson>(&s).unwrap() {
            ChannelJson::Quantum(j) => assert_eq!(j.to_channel().unwrap().kraus(), t.kraus()),
            other => panic!("parsed as {other:?}"),
        }
    }

    #[test]
    fn keys_select_the_channel_kind() {
        let qc = QcChannel::computational(2);
        let s = to_json_string(&ChannelJson::Qc((&qc).into())).unwrap();
        assert!(matches!(from_json_str::<ChannelJson>(&s).unwrap(), ChannelJson::Qc(_)));
        let cq = CqChannel::new(vec![DensityOperator::basis_state(2, 0), DensityOperator::basis_state(2, 1)]).unwrap();
        let s = to_json_string(&ChannelJson::Cq((&cq).into())).unwrap();
        match from_json_str::<ChannelJson>(&s).unwrap() {
            ChannelJson::Cq(j) => assert_eq!(j.to_channel().unwrap(), cq),
            other => panic!("parsed as {other:?}"),
        }
    }

    #[test]
    fn code_roundtrip_preserves_errors() {
        let params = GreedyParams::new(4, 2, 0.9, 0.5, 50).unwrap();
        let (code, _) = greedy_random_code(&params, Seed::new(2, 0)).unwrap();
        let json = IdCodeJson::from(&code);
        let back = from_json_str::<IdCodeJson>(&to_json_string(&json).unwrap()).unwrap().to_code().unwrap();
        let a = crate::idcodes::eval_id_errors(&code, None).unwrap();
        let b = crate::idcodes::eval_id_errors(&back, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strategy_roundtrip_and_missing_node() {
        let levels = vec![
            vec![sample_random_state(2, 2, Seed::new(3, 0)).unwrap()],
            (0..2).map(|k| sample_random_state(2, 2, Seed::new(3, 1 + k)).unwrap()).collect(),
        ];
        let f = FeedbackStrategy::new(2, levels).unwrap();
        let mut json = StrategyJson::from(&f);
        assert_eq!(json.nodes.keys().cloned().collect::<Vec<_>>(), vec!["", "0", "1"]);
        assert_eq!(json.to_strategy().unwrap(), f);
        json.nodes.remove("1");
        assert!(json.to_strategy().is_err());
    }

    #[test]
    fn distribution_csv_layout() {
        assert_eq!(distribution_csv(&[0.25, 0.75], 1, 2), "string,probability\n0,0.25\n1,0.75\n");
    }

    #[test]
    fn ragged_matrix_rejected() {
        let rows = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0]]];
        assert!(matrix_from_rows(&rows).is_err());
    }

    #[test]
    fn report_skips_duration() {
        let mut r = ExperimentReport::new("show", Value::Null);
        r.duration_secs = 3.5;
        r.verdict("ok", true, "");
        let s = to_json_string(&r).unwrap();
        assert!(!s.contains("duration"));
        assert!(r.all_pass());
    }
}
