//! Seeded stock objects shared by the commands.

use std::f64::consts::PI;

use anyhow::Result;
use qid_core::feedback::{FeedbackStrategy, GeneralFeedbackStrategy};
use qid_core::linalg::{ComplexMatrix, DensityOperator, HermitianOperator, C64};
use qid_core::sampling::{haar_unitary, sample_random_channel, sample_random_state, RandomChannelSpec};
use qid_core::{QcChannel, Seed};

/// Rank-one POVM from the first `d` columns of a Haar unitary on `C^outcomes`.
pub fn random_povm(d: usize, outcomes: usize, seed: Seed) -> Result<QcChannel> {
    let u = haar_unitary(outcomes.max(d), seed)?;
    let effects = (0..outcomes)
        .map(|y| {
            let row: Vec<C64> = (0..d).map(|i| u[(y, i)].conj()).collect();
            HermitianOperator::new(ComplexMatrix::outer(&row), vec![d])
        })
        .collect::<qid_core::Result<Vec<_>>>()?;
    Ok(QcChannel::new(effects)?)
}

/// Strategy whose every node is an independent random mixed state on `C^d`.
pub fn random_adaptive_strategy(d: usize, n: usize, alphabet: usize, seed: Seed) -> Result<FeedbackStrategy> {
    // derive first: it folds the caller's stream into the root, which with_stream would drop
    let seed = seed.derive(0xADA7);
    let mut k = 0u64;
    let mut levels = Vec::with_capacity(n);
    for t in 0..n {
        let mut level = Vec::new();
        for _ in 0..alphabet.pow(t as u32) {
            level.push(sample_random_state(d, d, seed.with_stream(k))?);
            k += 1;
        }
        levels.push(level);
    }
    Ok(FeedbackStrategy::new(alphabet, levels)?)
}

/// General strategy with random CPTP round maps (`|Y|^t a -> a d`, environment 3).
pub fn random_general_strategy(
    ancilla: usize,
    d: usize,
    n: usize,
    alphabet: usize,
    seed: Seed,
) -> Result<GeneralFeedbackStrategy> {
    let seed = seed.derive(0x6E4E);
    let sigma0 = sample_random_state(ancilla, ancilla, seed.with_stream(0))?;
    let maps = (0..n)
        .map(|t| {
            let spec = RandomChannelSpec::new(alphabet.pow(t as u32) * ancilla, ancilla * d, 3)?;
            sample_random_channel(spec, seed.with_stream(1 + t as u64))
        })
        .collect::<qid_core::Result<Vec<_>>>()?;
    Ok(GeneralFeedbackStrategy::new(alphabet, d, sigma0, maps)?)
}

/// Qubit states on a Bloch-ball grid: `steps` radii, `steps` polar angles, `2 steps` azimuths,
/// plus the centre.
pub fn bloch_ball_grid(steps: usize) -> Vec<DensityOperator> {
    let mut out = vec![DensityOperator::maximally_mixed(vec![2])];
    for ir in 1..=steps {
        let r = ir as f64 / steps as f64;
        for it in 0..steps {
            let th = PI * (it as f64 + 0.5) / steps as f64;
            for ip in 0..2 * steps {
                let ph = PI * ip as f64 / steps as f64;
                let (x, y, z) = (r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos());
                let m = ComplexMatrix::from_fn(2, 2, |a, b| match (a, b) {
                    (0, 0) => C64::new((1.0 + z) / 2.0, 0.0),
                    (0, 1) => C64::new(x / 2.0, -y / 2.0),
                    (1, 0) => C64::new(x / 2.0, y / 2.0),
                    _ => C64::new((1.0 - z) / 2.0, 0.0),
                });
                if let Ok(s) = DensityOperator::new(m, vec![2]) {
                    out.push(s);
                }
            }
        }
    }
    out
}
