use serde::{Deserialize, Serialize};

use super::code::IdCode;
use super::greedy::{check_budget, check_unit, grow, BuildStats, Candidate, Rejection, TAG_ENTANGLED};
use crate::channels::{balance_operator_with, channel_from_choi, BalanceMethod, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    default_rank_tol, eigenvalues_unchecked, partial_trace_matrix, support_from_spectrum, DensityOperator,
};
use crate::sampling::{sample_random_state, Seed};

/// Kraus residual a code channel may carry.
const TOL_CHANNEL: f64 = 1e-8;

/// Parameters of the entanglement-assisted hashing construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntangledParams {
    /// Dimension of the shared maximally entangled state (channel input).
    pub d: usize,
    /// Channel output dimension.
    pub big_delta: usize,
    pub lambda: f64,
    pub max_trials: usize,
    pub patience: Option<usize>,
    #[serde(default)]
    pub balance: BalanceMethod,
}

impl EntangledParams {
    pub fn new(d: usize, big_delta: usize, lambda: f64, max_trials: usize) -> Result<Self> {
        let p = Self {
            d,
            big_delta,
            lambda,
            max_trials,
            patience: None,
            balance: BalanceMethod::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.big_delta < 2 {
            return Err(Error::InvalidParameter(format!(
                "need d >= 1 and Delta >= 2, got d={}, Delta={}",
                self.d, self.big_delta
            )));
        }
        check_unit("lambda", self.lambda)?;
        check_budget(self.max_trials, self.patience)
    }

    /// Window parameter of the eigenvalue and reduction filters.
    pub fn eta(&self) -> f64 {
        self.lambda / 3.0
    }
}

/// Output dimension the asymptotic statement asks for: `(900/lambda^2) log(30d/lambda) log d`.
pub fn entangled_paper_delta(d: usize, lambda: f64) -> f64 {
    900.0 / (lambda * lambda) * (30.0 * d as f64 / lambda).log2() * (d as f64).log2()
}

/// Entanglement-assisted code: entries are Choi states `rho_i = (id (x) T_i) Phi_d` on
/// `C^d (x) C^Delta` with decoders `supp rho_i`.
///
/// Candidate `R` is a random rank-`d` state on `C^d (x) C^Delta`. It is kept only if its
/// nonzero eigenvalues and its `C^d` reduction lie in `[(1-eta)/d, (1+eta)/d]` (`eta = lambda/3`),
/// balancing yields `R0` with `Tr_Delta R0 = I/d`, `R0 <= (1+lambda)/d` on its rank-`d` support,
/// and the cross-overlaps with the code stay at most `lambda`.
pub fn entangled_hashing_code(
    params: &EntangledParams,
    seed: Seed,
) -> Result<(IdCode, Vec<QuantumChannel>, BuildStats)> {
    params.validate()?;
    let (d, delta) = (params.d, params.big_delta);
    let eta = params.eta();
    let lo = (1.0 - eta) / d as f64;
    let hi = (1.0 + eta) / d as f64;
    let top = (1.0 + params.lambda) / d as f64;
    let base = seed.derive(TAG_ENTANGLED);
    let dims = vec![d, delta];
    let prepare = |k: u64| {
        let r = sample_random_state(d * delta, d, base.with_stream(k))
            .expect("validated dimensions")
            .with_dims(dims.clone())
            .expect("dims multiply out");
        let spec = r.spectrum();
        let cutoff = default_rank_tol(&spec);
        let support: Vec<f64> = spec.eigenvalues.iter().copied().filter(|&l| l > cutoff).collect();
        if support.len() != d {
            return Err(Rejection::Rank);
        }
        if support.iter().any(|&l| l < lo || l > hi) {
            return Err(Rejection::Interval);
        }
        let (red, _) = partial_trace_matrix(r.matrix(), &dims, &[0]).expect("valid factor");
        if eigenvalues_unchecked(&red).iter().any(|&l| l < lo || l > hi) {
            return Err(Rejection::Reduction);
        }
        let balanced = balance_operator_with(&r, 1e-12, params.balance).map_err(|_| Rejection::Balance)?;
        let r0 = balanced.r0;
        let spec0 = r0.spectrum();
        let cutoff0 = default_rank_tol(&spec0);
        let support0: Vec<f64> = spec0.eigenvalues.iter().copied().filter(|&l| l > cutoff0).collect();
        if support0.len() != d {
            return Err(Rejection::Rank);
        }
        if support0[0] > top {
            return Err(Rejection::OperatorBound);
        }
        let channel = channel_from_choi(&r0, d, delta).map_err(|_| Rejection::Channel)?;
        if channel.kraus_residual() > TOL_CHANNEL {
            return Err(Rejection::Channel);
        }
        let decoder = support_from_spectrum(&spec0, Some(cutoff0), dims.clone());
        Ok(Candidate {
            state: r0,
            decoder,
            extra: channel,
        })
    };
    let (entries, channels, stats) = grow(params.max_trials, params.patience, params.lambda, prepare);
    Ok((IdCode::from_trusted(vec![d, delta], entries), channels, stats))
}

/// Max-norm deviation of `Tr_Delta rho` from `I/d`.
pub fn reduction_deviation(rho: &DensityOperator) -> Result<f64> {
    let (red, _) = partial_trace_matrix(rho.matrix(), rho.dims(), &[0])?;
    let d = red.rows();
    let target = crate::linalg::ComplexMatrix::identity(d).scale(1.0 / d as f64);
    Ok(red.max_abs_diff(&target))
}
