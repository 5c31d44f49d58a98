use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::code::{overlap, IdCode, IdEntry, Operand};
use crate::error::{Error, Result};
use crate::linalg::{default_rank_tol, support_from_spectrum, DensityOperator, HermFactor, HermitianOperator};
use crate::sampling::{sample_random_state, Seed};

/// Candidates prepared in parallel per batch; acceptance then runs over the batch in order.
const BATCH: usize = 256;

/// Existing entries checked in parallel once the code has this many.
const PAR_OVERLAP_MIN: usize = 64;

/// Seed tags separating the candidate streams of different constructions.
pub(crate) const TAG_GREEDY: u64 = 0x6EED;
pub(crate) const TAG_ENTANGLED: u64 = 0xE27A;

/// Parameters of the greedy random-state construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyParams {
    pub d: usize,
    /// Rank of every code state.
    pub delta: usize,
    /// Bound on the error of the second kind.
    pub lambda: f64,
    /// Relative width of the eigenvalue window `[(1-eta)/delta, (1+eta)/delta]`.
    pub eta: f64,
    /// Total number of candidates drawn.
    pub max_trials: usize,
    /// Stop early after this many consecutive rejections.
    pub patience: Option<usize>,
}

impl GreedyParams {
    pub fn new(d: usize, delta: usize, lambda: f64, eta: f64, max_trials: usize) -> Result<Self> {
        let p = Self {
            d,
            delta,
            lambda,
            eta,
            max_trials,
            patience: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.delta == 0 || self.delta > self.d {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= delta <= d, got d={}, delta={}",
                self.d, self.delta
            )));
        }
        check_unit("lambda", self.lambda)?;
        check_unit("eta", self.eta)?;
        check_budget(self.max_trials, self.patience)
    }
}

pub(crate) fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {x}")));
    }
    Ok(())
}

pub(crate) fn check_budget(max_trials: usize, patience: Option<usize>) -> Result<()> {
    if max_trials == 0 || patience == Some(0) {
        return Err(Error::InvalidParameter("max_trials and patience must be positive".into()));
    }
    Ok(())
}

/// Why a candidate was not added.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rejection {
    Rank,
    Interval,
    Reduction,
    Balance,
    OperatorBound,
    Channel,
}

/// Why the construction stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    Patience,
}

/// Acceptance statistics of a randomized construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub trials: usize,
    pub accepted: usize,
    pub rejected_rank: usize,
    pub rejected_interval: usize,
    pub rejected_reduction: usize,
    pub rejected_balance: usize,
    pub rejected_operator_bound: usize,
    pub rejected_channel: usize,
    pub rejected_overlap: usize,
    pub longest_rejection_run: usize,
    pub stop: Option<StopReason>,
}

impl BuildStats {
    fn record(&mut self, r: Rejection) {
        match r {
            Rejection::Rank => self.rejected_rank += 1,
            Rejection::Interval => self.rejected_interval += 1,
            Rejection::Reduction => self.rejected_reduction += 1,
            Rejection::Balance => self.rejected_balance += 1,
            Rejection::OperatorBound => self.rejected_operator_bound += 1,
            Rejection::Channel => self.rejected_channel += 1,
        }
    }

    pub fn rejected(&self) -> usize {
        self.trials - self.accepted
    }
}

pub(crate) struct Candidate<T> {
    pub state: DensityOperator,
    pub decoder: HermitianOperator,
    pub extra: T,
}

/// Greedy growth: candidate `k` is `prepare(k)`; it joins the code iff it passed `prepare`
/// and both `Tr(rho D_j)` and `Tr(rho_j D)` are at most `lambda` for every entry `j`.
pub(crate) fn grow<T, F>(
    max_trials: usize,
    patience: Option<usize>,
    lambda: f64,
    prepare: F,
) -> (Vec<IdEntry>, Vec<T>, BuildStats)
where
    T: Send,
    F: Fn(u64) -> std::result::Result<Candidate<T>, Rejection> + Sync,
{
    let mut entries: Vec<IdEntry> = Vec::new();
    let mut factors: Vec<(HermFactor, HermFactor)> = Vec::new();
    let mut extras = Vec::new();
    let mut stats = BuildStats::default();
    let mut run = 0usize;
    let mut next = 0usize;
    'outer: while next < max_trials {
        let end = (next + BATCH).min(max_trials);
        let batch: Vec<_> = (next..end)
            .into_par_iter()
            .map(|k| {
                prepare(k as u64).map(|c| {
                    let f = (HermFactor::of(c.state.matrix()), HermFactor::of(c.decoder.matrix()));
                    (c, f)
                })
            })
            .collect();
        next = end;
        for cand in batch {
            stats.trials += 1;
            let ok = match cand {
                Err(r) => {
                    stats.record(r);
                    None
                }
                Ok((c, f)) => {
                    if fits(&entries, &factors, &c, &f, lambda) {
                        Some((c, f))
                    } else {
                        stats.rejected_overlap += 1;
                        None
                    }
                }
            };
            match ok {
                Some((c, f)) => {
                    run = 0;
                    factors.push(f);
                    stats.accepted += 1;
                    entries.push(IdEntry {
                        state: c.state,
                        decoder: c.decoder,
                    });
                    extras.push(c.extra);
                }
                None => {
                    run += 1;
                    stats.longest_rejection_run = stats.longest_rejection_run.max(run);
                    if patience.is_some_and(|p| run >= p) {
                        stats.stop = Some(StopReason::Patience);
                        break 'outer;
                    }
                }
            }
        }
    }
    stats.stop.get_or_insert(StopReason::Budget);
    (entries, extras, stats)
}

fn fits<T>(
    entries: &[IdEntry],
    factors: &[(HermFactor, HermFactor)],
    cand: &Candidate<T>,
    f: &(HermFactor, HermFactor),
    lambda: f64,
) -> bool {
    let state = Operand {
        matrix: cand.state.matrix(),
        factor: &f.0,
    };
    let decoder = Operand {
        matrix: cand.decoder.matrix(),
        factor: &f.1,
    };
    // argument order matches eval_id_errors so both sides compute identical floats
    let ok = |(e, (fs, fd)): (&IdEntry, &(HermFactor, HermFactor))| {
        let es = Operand {
            matrix: e.state.matrix(),
            factor: fs,
        };
        let ed = Operand {
            matrix: e.decoder.matrix(),
            factor: fd,
        };
        overlap(&state, &ed) <= lambda && overlap(&es, &decoder) <= lambda
    };
    if entries.len() >= PAR_OVERLAP_MIN {
        entries.par_iter().zip(factors).all(ok)
    } else {
        entries.iter().zip(factors).all(ok)
    }
}

/// Greedy random-state code: candidates are random rank-`delta` states on `C^d`, decoders
/// their supports. A candidate needs its nonzero eigenvalues in
/// `[(1-eta)/delta, (1+eta)/delta]` and cross-overlaps at most `lambda` with every entry.
pub fn greedy_random_code(params: &GreedyParams, seed: Seed) -> Result<(IdCode, BuildStats)> {
    params.validate()?;
    let GreedyParams { d, delta, eta, .. } = *params;
    let base = seed.derive(TAG_GREEDY);
    let lo = (1.0 - eta) / delta as f64;
    let hi = (1.0 + eta) / delta as f64;
    let prepare = |k: u64| {
        let state = sample_random_state(d, delta, base.with_stream(k)).expect("validated dimensions");
        let spec = state.spectrum();
        let cutoff = default_rank_tol(&spec);
        let support: Vec<f64> = spec.eigenvalues.iter().copied().filter(|&l| l > cutoff).collect();
        if support.len() != delta {
            return Err(Rejection::Rank);
        }
        if support.iter().any(|&l| l < lo || l > hi) {
            return Err(Rejection::Interval);
        }
        let decoder = support_from_spectrum(&spec, Some(cutoff), vec![d]);
        Ok(Candidate {
            state,
            decoder,
            extra: (),
        })
    };
    let (entries, _, stats) = grow(params.max_trials, params.patience, params.lambda, prepare);
    Ok((IdCode::from_trusted(vec![d], entries), stats))
}

/// Reference values of the asymptotic constants: rank `alpha d / log d` with
/// `alpha = lambda/3000`, and `log2` of the guaranteed code size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyPaperConstants {
    pub alpha: f64,
    pub delta: f64,
    pub log2_code_size: f64,
}

pub fn greedy_paper_constants(d: usize, lambda: f64) -> GreedyPaperConstants {
    let alpha = lambda / 3000.0;
    let delta = alpha * d as f64 / (d as f64).log2();
    GreedyPaperConstants {
        alpha,
        delta,
        log2_code_size: delta * delta,
    }
}
