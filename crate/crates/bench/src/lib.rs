//! Fixtures shared by the criterion benches.

use qid_core::idcodes::{greedy_random_code, GreedyParams};
use qid_core::sampling::{sample_random_channel, sample_random_state, RandomChannelSpec};
use qid_core::{DensityOperator, FeedbackStrategy, IdCode, QuantumChannel, Seed};

/// Greedy code on `C^d` with rank-2 states, capped at `trials` candidates.
pub fn greedy_code(d: usize, trials: usize) -> IdCode {
    let params = GreedyParams::new(d, 2, 0.6, 1.0 / 3.0, trials).expect("valid parameters");
    greedy_random_code(&params, Seed::new(1, 0)).expect("construction runs").0
}

pub fn random_channel(d: usize, env: usize) -> QuantumChannel {
    let spec = RandomChannelSpec::new(d, d, env).expect("valid dimensions");
    sample_random_channel(spec, Seed::new(2, 0)).expect("sampling runs")
}

/// Qubit strategy with an independent random state at every node.
pub fn adaptive_strategy(n: usize) -> FeedbackStrategy {
    let mut k = 0;
    let levels = (0..n)
        .map(|t| {
            (0..1usize << t)
                .map(|_| {
                    k += 1;
                    sample_random_state(2, 2, Seed::new(3, k)).expect("sampling runs")
                })
                .collect::<Vec<DensityOperator>>()
        })
        .collect();
    FeedbackStrategy::new(2, levels).expect("consistent levels")
}
