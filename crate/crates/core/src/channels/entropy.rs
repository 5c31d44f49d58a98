//! Maximization of output entropy over input states, with a certified upper bound.
//!
//! The ascent is exponentiated gradient in the log-parametrization `rho ~ exp(H)`. For
//! `G = -T^dagger(log2 T(rho))`, Klein's inequality gives `S(T(sigma)) <= Tr(sigma G)` for
//! every state `sigma`, so `lambda_max(G)` bounds the maximum from above. The run stops
//! once that bound is within `tol` of the current value.

use serde::{Deserialize, Serialize};

use super::measure::{CqChannel, QcChannel};
use super::quantum::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    eig_herm_unchecked, entropy_of, log2_psd, ComplexMatrix, DensityOperator, Spectrum, C64, LOG_FLOOR,
};
use crate::sampling::{ginibre, Seed};

/// Linear trace-preserving map together with its adjoint.
pub trait OutputMap: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn map(&self, rho: &ComplexMatrix) -> ComplexMatrix;
    fn adjoint(&self, y: &ComplexMatrix) -> ComplexMatrix;
}

impl OutputMap for QuantumChannel {
    fn input_dim(&self) -> usize {
        self.d_in()
    }

    fn output_dim(&self) -> usize {
        self.d_out()
    }

    fn map(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.apply_matrix(rho)
    }

    fn adjoint(&self, y: &ComplexMatrix) -> ComplexMatrix {
        self.adjoint_matrix(y)
    }
}

impl OutputMap for QcChannel {
    fn input_dim(&self) -> usize {
        self.d_in()
    }

    fn output_dim(&self) -> usize {
        self.alphabet_size()
    }

    fn map(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&self.probabilities_of(rho))
    }

    fn adjoint(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let d = self.d_in();
        let mut out = ComplexMatrix::zeros(d, d);
        for (k, m) in self.povm().iter().enumerate() {
            out.add_assign_scaled(m.matrix(), C64::new(y[(k, k)].re, 0.0));
        }
        out
    }
}

pub const MAX_ITERATIONS: usize = 10_000;
const RESTARTS: u64 = 5;
// fixed so that results are reproducible without a caller-supplied seed
const RESTART_ROOT: u64 = 0x5EED_0E27;

/// Result of [`max_output_entropy`].
#[derive(Debug, Clone)]
pub struct EntropyMax {
    /// Best value found, in bits.
    pub value: f64,
    /// An input achieving `value`; maximizing inputs need not be unique.
    pub argmax: DensityOperator,
    pub output: DensityOperator,
    /// Certified upper bound on the true maximum.
    pub upper_bound: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl EntropyMax {
    pub fn gap(&self) -> f64 {
        self.upper_bound - self.value
    }
}

struct Point {
    h: ComplexMatrix,
    rho: ComplexMatrix,
    out: ComplexMatrix,
    value: f64,
    grad: ComplexMatrix,
    upper: f64,
}

fn exp_state(h: &ComplexMatrix) -> ComplexMatrix {
    let spec = eig_herm_unchecked(h);
    let top = spec.eigenvalues[0];
    let z: f64 = spec.eigenvalues.iter().map(|l| (l - top).exp()).sum();
    spec.reconstruct_with(|l| (l - top).exp() / z)
}

/// Entropy of `out` and the Klein-bound gradient `-T^dagger(log2 out)`.
fn floored_log(out: &ComplexMatrix) -> (f64, ComplexMatrix, f64) {
    let spec: Spectrum = eig_herm_unchecked(out);
    let value = entropy_of(&spec.eigenvalues);
    let log = log2_psd(&spec, LOG_FLOOR);
    // Tr A - 1 for the floored operator A enters the bound as (Tr A - 1)/ln 2
    let excess: f64 = spec.eigenvalues.iter().map(|l| l.max(LOG_FLOOR)).sum::<f64>() - 1.0;
    (value, log, excess.max(0.0) / std::f64::consts::LN_2)
}

fn evaluate<M: OutputMap + ?Sized>(map: &M, h: ComplexMatrix) -> Point {
    let rho = exp_state(&h);
    let out = map.map(&rho).hermitian_part();
    let (value, log, slack) = floored_log(&out);
    let grad = map.adjoint(&log).scale(-1.0).hermitian_part();
    let upper = eig_herm_unchecked(&grad).eigenvalues[0] + slack;
    Point {
        h,
        rho,
        out,
        value,
        grad,
        upper,
    }
}

fn ascend<M: OutputMap + ?Sized>(map: &M, h0: ComplexMatrix, tol: f64, budget: usize) -> (Point, f64, usize) {
    let mut cur = evaluate(map, h0);
    let mut best_upper = cur.upper;
    let mut beta = 1.0;
    let mut used = 0;
    while used < budget && best_upper - cur.value > tol {
        used += 1;
        let mut h = cur.h.clone();
        h.add_assign_scaled(&cur.grad, C64::new(beta, 0.0));
        let trial = evaluate(map, h);
        best_upper = best_upper.min(trial.upper);
        if trial.value >= cur.value {
            cur = trial;
            beta *= 1.5;
        } else {
            beta *= 0.5;
            if beta < 1e-14 {
                break;
            }
        }
    }
    (cur, best_upper, used)
}

/// Maximizes `S(T(rho))` (bits) over input states.
///
/// Starts from `I/d`; only if that run fails to certify `gap <= tol` within the
/// iteration cap are five seeded interior restarts tried. Non-convergence is reported
/// through `converged`, not as an error.
pub fn max_output_entropy<M: OutputMap + ?Sized>(map: &M, tol: f64) -> Result<EntropyMax> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let d = map.input_dim();
    let (mut best, mut upper, mut iterations) = ascend(map, ComplexMatrix::zeros(d, d), tol, MAX_ITERATIONS);
    if upper - best.value > tol {
        for k in 0..RESTARTS {
            let g = ginibre(d, d, Seed::new(RESTART_ROOT, k))?.hermitian_part();
            let (p, u, used) = ascend(map, g, tol, MAX_ITERATIONS);
            iterations += used;
            upper = upper.min(u);
            if p.value > best.value {
                best = p;
            }
            if upper - best.value <= tol {
                break;
            }
        }
    }
    let d_out = map.output_dim();
    Ok(EntropyMax {
        value: best.value,
        argmax: DensityOperator::normalized(best.rho, vec![d])?,
        output: DensityOperator::normalized(best.out, vec![d_out])?,
        // the bound can sit a hair below the value through rounding
        upper_bound: upper.max(best.value),
        converged: upper - best.value <= tol,
        iterations,
    })
}

/// Result of [`cq_ff_capacity`]; the value is a lower bound on the capacity, not the capacity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CqLowerBound {
    pub value: f64,
    pub distribution: Vec<f64>,
    pub upper_bound: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `max_P S(sum_x P(x) rho_x) + sum_x P(x) S(rho_x)` over the probability simplex.
pub fn cq_ff_capacity(channel: &CqChannel, tol: f64) -> Result<CqLowerBound> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let letters = channel.letter_states();
    let own = channel.letter_entropies();
    let d = channel.d_out();
    let n = letters.len();

    // returns (value, per-letter gradient, upper bound)
    let eval = |p: &[f64]| {
        let mut avg = ComplexMatrix::zeros(d, d);
        for (px, s) in p.iter().zip(letters) {
            avg.add_assign_scaled(s.matrix(), C64::new(*px, 0.0));
        }
        let (h, log, slack) = floored_log(&avg.hermitian_part());
        let value = h + p.iter().zip(&own).map(|(a, b)| a * b).sum::<f64>();
        let g: Vec<f64> = letters
            .iter()
            .zip(&own)
            .map(|(s, sx)| -s.matrix().trace_product(&log).re + sx)
            .collect();
        let upper = g.iter().copied().fold(f64::NEG_INFINITY, f64::max) + slack;
        (value, g, upper)
    };

    let mut logp = vec![0.0; n];
    let to_p = |logp: &[f64]| {
        let top = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logp.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect::<Vec<_>>()
    };
    let mut p = to_p(&logp);
    let (mut value, mut g, mut upper) = eval(&p);
    let mut beta = 1.0;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && upper - value > tol {
        iterations += 1;
        let trial_logp: Vec<f64> = logp.iter().zip(&g).map(|(l, gx)| l + beta * gx).collect();
        let trial_p = to_p(&trial_logp);
        let (tv, tg, tu) = eval(&trial_p);
        upper = upper.min(tu);
        if tv >= value {
            logp = trial_logp;
            p = trial_p;
            value = tv;
            g = tg;
            beta *= 1.5;
        } else {
            beta *= 0.5;
            if beta < 1e-14 {
                break;
            }
        }
    }
    Ok(CqLowerBound {
        value,
        distribution: p,
        upper_bound: upper.max(value),
        converged: upper - value <= tol,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::QuantumChannel;
    use crate::linalg::{von_neumann_entropy, HermitianOperator};
    use crate::sampling::{random_isometry, sample_random_channel, sample_random_state, RandomChannelSpec};

    const TOL: f64 = 1e-7;

    fn pauli_state(x: f64, y: f64, z: f64) -> ComplexMatrix {
        ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new((1.0 + z) / 2.0, 0.0),
                C64::new(x / 2.0, -y / 2.0),
                C64::new(x / 2.0, y / 2.0),
                C64::new((1.0 - z) / 2.0, 0.0),
            ],
        )
        .unwrap()
    }

    /// About 5 * 10^4 lattice points inside the Bloch ball plus 5 * 10^4 on the sphere.
    fn bloch_grid() -> Vec<[f64; 3]> {
        let mut pts = Vec::with_capacity(100_000);
        let h = 0.0437;
        let m = (1.0 / h) as i64;
        for i in -m..=m {
            for j in -m..=m {
                for k in -m..=m {
                    let v = [i as f64 * h, j as f64 * h, k as f64 * h];
                    if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
                        pts.push(v);
                    }
                }
            }
        }
        let n = 50_000;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        for i in 0..n {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            pts.push([r * phi.cos(), r * phi.sin(), z]);
        }
        pts
    }

    /// Brute-force `max S(T(rho))` over the grid, using direct entropy of the output matrix.
    fn grid_max<M: OutputMap>(map: &M) -> f64 {
        bloch_grid()
            .iter()
            .map(|v| {
                let out = map.map(&pauli_state(v[0], v[1], v[2]));
                entropy_of(&crate::linalg::eigenvalues_unchecked(&out))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn random_qubit_channel(root: u64) -> QuantumChannel {
        sample_random_channel(RandomChannelSpec::new(2, 2, 2).unwrap(), Seed::new(root, 0)).unwrap()
    }

    #[test]
    fn grid_size() {
        let n = bloch_grid().len();
        assert!((95_000..=105_000).contains(&n), "{n}");
    }

    #[test]
    fn identity_qubit() {
        let r = max_output_entropy(&QuantumChannel::identity(2), TOL).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.argmax.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-6);
    }

    #[test]
    fn constant_channel_gives_entropy_of_its_output() {
        let sigma = sample_random_state(3, 2, Seed::new(1, 0)).unwrap();
        let ch = QuantumChannel::constant(2, &sigma).unwrap();
        let r = max_output_entropy(&ch, TOL).unwrap();
        assert!(r.converged);
        assert!((r.value - von_neumann_entropy(&sigma)).abs() < 1e-9);
    }

    #[test]
    fn random_qubit_channels_match_grid() {
        for root in 0..4 {
            let ch = random_qubit_channel(root);
            let r = max_output_entropy(&ch, TOL).unwrap();
            assert!(r.converged, "root {root}: gap {}", r.gap());
            let g = grid_max(&ch);
            assert!(g <= r.upper_bound + 1e-12, "grid beats certified bound");
            assert!(r.value >= g - 1e-9);
            assert!(r.value - g <= 1e-3, "root {root}: {} vs {}", r.value, g);
            let achieved = entropy_of(&ch.apply(&r.argmax).unwrap().eigenvalues());
            assert!((achieved - r.value).abs() < 1e-9);
        }
    }

    #[test]
    fn random_three_outcome_povm_matches_grid() {
        for root in 0..3 {
            let v = random_isometry(2, 6, Seed::new(50 + root, 0)).unwrap();
            let povm = (0..3)
                .map(|y| {
                    let rows = ComplexMatrix::from_fn(2, 2, |r, c| v[(y * 2 + r, c)]);
                    HermitianOperator::new(rows.adjoint_matmul(&rows).hermitian_part(), vec![2]).unwrap()
                })
                .collect();
            let qc = QcChannel::new(povm).unwrap();
            let r = max_output_entropy(&qc, TOL).unwrap();
            assert!(r.converged);
            let g = grid_max(&qc);
            assert!(g <= r.upper_bound + 1e-12);
            assert!(r.value - g <= 1e-3 && r.value >= g - 1e-9);
        }
    }

    #[test]
    fn concavity_spot_check() {
        let ch = sample_random_channel(RandomChannelSpec::new(3, 3, 2).unwrap(), Seed::new(2, 0)).unwrap();
        for i in 0..20 {
            let a = sample_random_state(3, 1, Seed::new(3, i)).unwrap();
            let b = sample_random_state(3, 2, Seed::new(4, i)).unwrap();
            let mid = DensityOperator::normalized(a.matrix() + b.matrix(), vec![3]).unwrap();
            let s = |x: &DensityOperator| von_neumann_entropy(&ch.apply(x).unwrap());
            assert!(s(&mid) >= 0.5 * (s(&a) + s(&b)) - 1e-9);
        }
    }

    fn dephasing_gap(ch: &QuantumChannel) -> f64 {
        let base = max_output_entropy(ch, TOL).unwrap();
        let basis = base.output.spectrum().eigenvectors;
        let deph = ch.dephase(&basis).unwrap();
        let after = max_output_entropy(&deph, TOL).unwrap();
        assert!(base.converged && after.converged);
        (after.value - base.value).abs()
    }

    #[test]
    fn dephasing_in_optimal_output_basis_keeps_max_entropy() {
        for (d, root) in [(2, 10u64), (2, 11), (3, 12), (3, 13)] {
            let ch = sample_random_channel(RandomChannelSpec::new(d, d, 2).unwrap(), Seed::new(root, 0)).unwrap();
            assert!(dephasing_gap(&ch) <= 1e-3);
        }
    }

    #[test]
    fn dephasing_with_degenerate_optimal_output() {
        // fully degenerate optimum
        assert!(dephasing_gap(&QuantumChannel::identity(2)) <= 1e-6);
        // rank-deficient optimum: isometric embedding C^2 -> C^3
        let v = random_isometry(2, 3, Seed::new(20, 0)).unwrap();
        let emb = QuantumChannel::isometry(v).unwrap();
        let r = max_output_entropy(&emb, TOL).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
        assert!(dephasing_gap(&emb) <= 1e-6);
    }

    #[test]
    fn cq_orthogonal_letters() {
        let cq = CqChannel::new(vec![DensityOperator::basis_state(2, 0), DensityOperator::basis_state(2, 1)]).unwrap();
        let r = cq_ff_capacity(&cq, TOL).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-6);
        assert!((r.distribution[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn cq_identical_letters() {
        let sigma = sample_random_state(2, 2, Seed::new(30, 0)).unwrap();
        let cq = CqChannel::new(vec![sigma.clone(); 3]).unwrap();
        let r = cq_ff_capacity(&cq, TOL).unwrap();
        assert!((r.value - 2.0 * von_neumann_entropy(&sigma)).abs() < 1e-9);
    }

    #[test]
    fn cq_matches_grid_over_two_letters() {
        for root in 0..3 {
            let a = sample_random_state(2, 2, Seed::new(40 + root, 0)).unwrap();
            let b = sample_random_state(2, 1, Seed::new(40 + root, 1)).unwrap();
            let cq = CqChannel::new(vec![a.clone(), b.clone()]).unwrap();
            let (sa, sb) = (von_neumann_entropy(&a), von_neumann_entropy(&b));
            let grid = (0..=10_000)
                .map(|i| {
                    let p = i as f64 / 10_000.0;
                    let mix = &a.matrix().scale(p) + &b.matrix().scale(1.0 - p);
                    entropy_of(&crate::linalg::eigenvalues_unchecked(&mix)) + p * sa + (1.0 - p) * sb
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let r = cq_ff_capacity(&cq, TOL).unwrap();
            assert!(grid <= r.upper_bound + 1e-12);
            assert!((r.value - grid).abs() <= 1e-4, "{} vs {grid}", r.value);
        }
    }
}
