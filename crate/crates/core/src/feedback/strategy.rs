use rayon::prelude::*;

use crate::channels::QcChannel;
use crate::error::{Error, Result};
use crate::linalg::DensityOperator;

/// Largest `log2 |Y|^n` for which output distributions are held densely.
pub const MAX_LOG2_OUTCOMES: f64 = 24.0;

/// Letters of history strings; alphabets are limited to its length.
pub const SYMBOLS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Number of length-`n` strings over `alphabet` letters, checked against the dense cap.
pub fn outcome_count(alphabet: usize, n: usize) -> Result<usize> {
    let log2 = n as f64 * (alphabet as f64).log2();
    if log2 > MAX_LOG2_OUTCOMES + 1e-9 {
        return Err(Error::CapExceeded {
            what: "n log2|Y|",
            value: log2,
            cap: MAX_LOG2_OUTCOMES,
        });
    }
    Ok(alphabet.pow(n as u32))
}

/// String of `index` as `len` base-`alphabet` digits, most significant (earliest) first.
pub fn history_string(index: usize, len: usize, alphabet: usize) -> String {
    let mut out = vec![b'0'; len];
    let mut rem = index;
    for slot in out.iter_mut().rev() {
        *slot = SYMBOLS[rem % alphabet];
        rem /= alphabet;
    }
    String::from_utf8(out).expect("ascii symbols")
}

/// Inverse of [`history_string`].
pub fn parse_history(s: &str, alphabet: usize) -> Result<usize> {
    let mut idx = 0usize;
    for ch in s.bytes() {
        let v = SYMBOLS
            .iter()
            .position(|&c| c == ch)
            .filter(|&v| v < alphabet)
            .ok_or_else(|| Error::Format(format!("'{}' is not a letter of a {alphabet}-letter alphabet", ch as char)))?;
        idx = idx * alphabet + v;
    }
    Ok(idx)
}

/// Passive-feedback strategy for block length `n`: level `t` (0-based) holds one input state
/// per history `y_1..y_t`, indexed as base-`|Y|` numbers with `y_1` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackStrategy {
    alphabet: usize,
    levels: Vec<Vec<DensityOperator>>,
}

impl FeedbackStrategy {
    /// Requires level `t` to hold exactly `|Y|^t` states of a common dimension.
    pub fn new(alphabet: usize, levels: Vec<Vec<DensityOperator>>) -> Result<Self> {
        if alphabet < 1 || alphabet > SYMBOLS.len() {
            return Err(Error::InvalidParameter(format!(
                "alphabet size must be in 1..={}, got {alphabet}",
                SYMBOLS.len()
            )));
        }
        if levels.is_empty() {
            return Err(Error::InvalidParameter("block length must be positive".into()));
        }
        outcome_count(alphabet, levels.len())?;
        let d = levels[0].first().map(|s| s.dim()).unwrap_or(0);
        for (t, level) in levels.iter().enumerate() {
            let want = alphabet.pow(t as u32);
            if level.len() != want {
                return Err(Error::InvalidParameter(format!(
                    "round {} needs {want} histories, got {}",
                    t + 1,
                    level.len()
                )));
            }
            if level.iter().any(|s| s.dim() != d) {
                return Err(Error::DimensionMismatch("strategy states differ in dimension".into()));
            }
        }
        Ok(Self { alphabet, levels })
    }

    /// The same state in every round, ignoring feedback.
    pub fn constant(rho: &DensityOperator, n: usize, alphabet: usize) -> Result<Self> {
        outcome_count(alphabet, n)?;
        let levels = (0..n).map(|t| vec![rho.clone(); alphabet.pow(t as u32)]).collect();
        Self::new(alphabet, levels)
    }

    pub fn n(&self) -> usize {
        self.levels.len()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn input_dim(&self) -> usize {
        self.levels[0][0].dim()
    }

    /// Input state in round `t` (0-based) after history `history`.
    pub fn state(&self, t: usize, history: usize) -> &DensityOperator {
        &self.levels[t][history]
    }

    pub fn levels(&self) -> &[Vec<DensityOperator>] {
        &self.levels
    }
}

/// `Q(y^n) = prod_t Tr(rho_{t:y^{t-1}} M_{y_t})`, indexed like histories of length `n`.
pub fn feedback_output_dist(strategy: &FeedbackStrategy, channel: &QcChannel) -> Result<Vec<f64>> {
    let y = channel.alphabet_size();
    if y != strategy.alphabet {
        return Err(Error::DimensionMismatch(format!(
            "strategy alphabet {} but the POVM has {y} outcomes",
            strategy.alphabet
        )));
    }
    if channel.d_in() != strategy.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "strategy states have dimension {}, POVM acts on {}",
            strategy.input_dim(),
            channel.d_in()
        )));
    }
    let mut q = vec![1.0];
    for level in &strategy.levels {
        // each entry depends only on its parent, so the parallel map is deterministic
        let probs: Vec<Vec<f64>> = level.par_iter().map(|s| channel.probabilities_of(s.matrix())).collect();
        q = q
            .par_iter()
            .zip(probs.par_iter())
            .flat_map_iter(|(&w, p)| p.iter().map(move |x| w * x))
            .collect();
    }
    Ok(q)
}
