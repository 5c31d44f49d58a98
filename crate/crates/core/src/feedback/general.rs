use crate::channels::{QcChannel, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace_matrix, ComplexMatrix, DensityOperator};

use super::strategy::{history_string, outcome_count, FeedbackStrategy};

/// Conditional outcome probabilities at or below this leave the ancilla update undefined.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-12;

/// Feedback strategy with memory: an ancilla starts in `sigma0`, and round `t` applies
/// `phi_t: F^{(x)(t-1)} (x) A -> A (x) H` to the classical history and the ancilla.
#[derive(Debug, Clone)]
pub struct GeneralFeedbackStrategy {
    alphabet: usize,
    input_dim: usize,
    sigma0: DensityOperator,
    maps: Vec<QuantumChannel>,
}

impl GeneralFeedbackStrategy {
    /// `maps[t]` (0-based) must have input dimension `|Y|^t * a` and output `a * d`.
    pub fn new(alphabet: usize, input_dim: usize, sigma0: DensityOperator, maps: Vec<QuantumChannel>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidParameter("block length must be positive".into()));
        }
        outcome_count(alphabet, maps.len())?;
        let a = sigma0.dim();
        for (t, m) in maps.iter().enumerate() {
            let want_in = alphabet.pow(t as u32) * a;
            if m.d_in() != want_in || m.d_out() != a * input_dim {
                return Err(Error::DimensionMismatch(format!(
                    "round {} map is {} -> {}, expected {want_in} -> {}",
                    t + 1,
                    m.d_in(),
                    m.d_out(),
                    a * input_dim
                )));
            }
        }
        Ok(Self {
            alphabet,
            input_dim,
            sigma0,
            maps,
        })
    }

    pub fn ancilla_dim(&self) -> usize {
        self.sigma0.dim()
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn sigma0(&self) -> &DensityOperator {
        &self.sigma0
    }

    pub fn maps(&self) -> &[QuantumChannel] {
        &self.maps
    }

    /// `phi_t(|h><h| (x) sigma)` on `A (x) H`.
    pub(crate) fn round_output(&self, t: usize, history: usize, sigma: &ComplexMatrix) -> ComplexMatrix {
        let hist_dim = self.alphabet.pow(t as u32);
        let a = self.ancilla_dim();
        let mut input = ComplexMatrix::zeros(hist_dim * a, hist_dim * a);
        for r in 0..a {
            for c in 0..a {
                input[(history * a + r, history * a + c)] = sigma[(r, c)];
            }
        }
        self.maps[t].apply_matrix(&input)
    }
}

/// Result of [`reduce_general_strategy`].
#[derive(Debug, Clone)]
pub struct ReducedStrategy {
    pub strategy: FeedbackStrategy,
    /// Histories (as strings) whose ancilla state was replaced by a placeholder because the
    /// last outcome had probability at most [`MIN_BRANCH_PROBABILITY`].
    pub placeholder_histories: Vec<String>,
}

/// `Tr_H[(I (x) M) Omega]` for `Omega` on `A (x) H`.
fn conditional_ancilla(omega: &ComplexMatrix, m: &ComplexMatrix, a: usize, d: usize) -> ComplexMatrix {
    let weighted = omega.matmul(&ComplexMatrix::identity(a).kron(m));
    let (out, _) = partial_trace_matrix(&weighted, &[a, d], &[0]).expect("consistent dims");
    out.hermitian_part()
}

/// Memoryless strategy with the same output distribution: `rho_{t:h} = Tr_A phi_t(|h><h| (x) sigma_h)`
/// and `sigma_{h y} = Tr_H[(I (x) M_y) phi_t(..)] / Tr(rho_{t:h} M_y)`.
pub fn reduce_general_strategy(g: &GeneralFeedbackStrategy, channel: &QcChannel) -> Result<ReducedStrategy> {
    let y = channel.alphabet_size();
    if y != g.alphabet || channel.d_in() != g.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "strategy is over {} letters and dimension {}, POVM has {y} outcomes on dimension {}",
            g.alphabet,
            g.input_dim,
            channel.d_in()
        )));
    }
    let (a, d) = (g.ancilla_dim(), g.input_dim);
    let placeholder_sigma = ComplexMatrix::identity(a).scale(1.0 / a as f64);
    let mut sigmas = vec![g.sigma0.matrix().clone()];
    let mut levels = Vec::with_capacity(g.n());
    let mut flagged = Vec::new();
    for t in 0..g.n() {
        let mut states = Vec::with_capacity(sigmas.len());
        let mut next = Vec::with_capacity(sigmas.len() * y);
        for (h, sigma) in sigmas.iter().enumerate() {
            let omega = g.round_output(t, h, sigma);
            let (rho, _) = partial_trace_matrix(&omega, &[a, d], &[1])?;
            let rho = DensityOperator::normalized(rho, vec![d])?;
            if t + 1 < g.n() {
                for (k, m) in channel.povm().iter().enumerate() {
                    let p = rho.expectation(m.matrix());
                    if p > MIN_BRANCH_PROBABILITY {
                        next.push(conditional_ancilla(&omega, m.matrix(), a, d).scale(1.0 / p));
                    } else {
                        flagged.push(history_string(h * y + k, t + 1, y));
                        next.push(placeholder_sigma.clone());
                    }
                }
            }
            states.push(rho);
        }
        levels.push(states);
        sigmas = next;
    }
    Ok(ReducedStrategy {
        strategy: FeedbackStrategy::new(y, levels)?,
        placeholder_histories: flagged,
    })
}

/// Output distribution of `g` by direct simulation: the unnormalized ancilla branches
/// `tau_{y^t}` are propagated and `Q(y^n) = Tr tau_{y^n}`.
pub fn general_output_dist(g: &GeneralFeedbackStrategy, channel: &QcChannel) -> Result<Vec<f64>> {
    let y = channel.alphabet_size();
    if y != g.alphabet || channel.d_in() != g.input_dim {
        return Err(Error::DimensionMismatch("strategy and POVM do not match".into()));
    }
    let (a, d) = (g.ancilla_dim(), g.input_dim);
    let mut branches = vec![g.sigma0.matrix().clone()];
    for t in 0..g.n() {
        let mut next = Vec::with_capacity(branches.len() * y);
        for (h, tau) in branches.iter().enumerate() {
            let omega = g.round_output(t, h, tau);
            for m in channel.povm() {
                next.push(conditional_ancilla(&omega, m.matrix(), a, d));
            }
        }
        branches = next;
    }
    Ok(branches.iter().map(|tau| tau.trace().re).collect())
}
