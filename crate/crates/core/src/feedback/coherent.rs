use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::typical::typical_set;
use crate::channels::{max_output_entropy, QuantumChannel, StinespringDilation};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_herm, partial_trace_matrix, permute_factors, ComplexMatrix, DensityOperator, HermitianOperator, C64, ZERO,
};

/// Largest side length of the joint state held during coherent simulation.
pub const COHERENT_DIM_CAP: usize = 1 << 11;

/// Coherent-feedback strategy: ancilla `A` in `sigma0`; round `t` (0-based) applies
/// `phi_t: A (x) E^{(x)t} -> A (x) E^{(x)t} (x) H_in`, where `E` is the environment of the
/// channel's dilation, returned to the sender after every use.
#[derive(Debug, Clone)]
pub struct CoherentFeedbackStrategy {
    sigma0: DensityOperator,
    d_env: usize,
    d_in: usize,
    maps: Vec<QuantumChannel>,
}

impl CoherentFeedbackStrategy {
    pub fn new(sigma0: DensityOperator, d_env: usize, d_in: usize, maps: Vec<QuantumChannel>) -> Result<Self> {
        if maps.is_empty() || d_env == 0 || d_in == 0 {
            return Err(Error::InvalidParameter("need at least one round and positive dimensions".into()));
        }
        let a = sigma0.dim();
        for (t, m) in maps.iter().enumerate() {
            let x = a * d_env.pow(t as u32);
            if m.d_in() != x || m.d_out() != x * d_in {
                return Err(Error::DimensionMismatch(format!(
                    "round {} map is {} -> {}, expected {x} -> {}",
                    t + 1,
                    m.d_in(),
                    m.d_out(),
                    x * d_in
                )));
            }
        }
        Ok(Self {
            sigma0,
            d_env,
            d_in,
            maps,
        })
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    pub fn ancilla_dim(&self) -> usize {
        self.sigma0.dim()
    }

    pub fn d_env(&self) -> usize {
        self.d_env
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn sigma0(&self) -> &DensityOperator {
        &self.sigma0
    }

    pub fn maps(&self) -> &[QuantumChannel] {
        &self.maps
    }
}

/// `(I_left (x) op (x) I_right) m` for `m` with rows indexed `(left, op.cols, right)`.
pub(crate) fn apply_middle(op: &ComplexMatrix, m: &ComplexMatrix, left: usize, right: usize) -> ComplexMatrix {
    let (o, i) = (op.rows(), op.cols());
    debug_assert_eq!(m.rows(), left * i * right);
    let cols = m.cols();
    let src = m.data();
    let mut out = ComplexMatrix::zeros(left * o * right, cols);
    let dst = out.data_mut();
    for l in 0..left {
        for a in 0..o {
            for b in 0..i {
                let w = op[(a, b)];
                if w == ZERO {
                    continue;
                }
                for r in 0..right {
                    let from = ((l * i + b) * right + r) * cols;
                    let to = ((l * o + a) * right + r) * cols;
                    for c in 0..cols {
                        dst[to + c] += w * src[from + c];
                    }
                }
            }
        }
    }
    out
}

/// `(I (x) op (x) I) rho (I (x) op (x) I)^dagger` for Hermitian `rho`.
pub(crate) fn conjugate_middle(op: &ComplexMatrix, rho: &ComplexMatrix, left: usize, right: usize) -> ComplexMatrix {
    let half = apply_middle(op, rho, left, right);
    apply_middle(op, &half.adjoint(), left, right)
}

/// Joint output `omega` on `H_out^{(x)n}` of `n` channel uses with coherent feedback:
/// every use is the full isometry `V`, with `H_out` going to the receiver and the environment
/// to the sender, and every map is padded by the identity on the systems it does not touch.
pub fn coherent_feedback_output(
    strategy: &CoherentFeedbackStrategy,
    dilation: &StinespringDilation,
) -> Result<DensityOperator> {
    if dilation.d_in() != strategy.d_in || dilation.d_env != strategy.d_env {
        return Err(Error::DimensionMismatch(format!(
            "strategy expects a {} -> env {} dilation, got {} -> env {}",
            strategy.d_in,
            strategy.d_env,
            dilation.d_in(),
            dilation.d_env
        )));
    }
    let (a, d1, d2, d3) = (strategy.ancilla_dim(), strategy.d_in, dilation.d_out, dilation.d_env);
    let n = strategy.n();
    // peak side length: after the last phi (a d3^{n-1} d1 d2^{n-1}) or after the last V
    let peak = (a * d3.pow(n as u32 - 1) * d2.pow(n as u32 - 1)).saturating_mul(d1.max(d2 * d3));
    if peak > COHERENT_DIM_CAP {
        return Err(Error::CapExceeded {
            what: "coherent simulation dimension",
            value: peak as f64,
            cap: COHERENT_DIM_CAP as f64,
        });
    }
    // joint state on [A E^t, B^t]
    let mut rho = strategy.sigma0.matrix().clone();
    for (t, phi) in strategy.maps.iter().enumerate() {
        let x = a * d3.pow(t as u32);
        let b = d2.pow(t as u32);
        let mut next = ComplexMatrix::zeros(x * d1 * b, x * d1 * b);
        for k in phi.kraus() {
            next = &next + &conjugate_middle(k, &rho, 1, b);
        }
        // [A E^t, H_in, B^t] -> [A E^t, H_out, E, B^t]
        let dilated = conjugate_middle(&dilation.isometry, &next, x, b);
        let (perm, _) = permute_factors(&dilated, &[x, d2, d3, b], &[0, 2, 3, 1])?;
        rho = perm.hermitian_part();
    }
    let x = a * d3.pow(n as u32);
    let b = d2.pow(n as u32);
    let (omega, _) = partial_trace_matrix(&rho, &[x, b], &[1])?;
    DensityOperator::normalized(omega, vec![d2; n])
}

/// Strategy that sends one half of a fresh maximally entangled qubit pair in every round and
/// keeps the other half in the ancilla (`n` qubits, starting in `|0..0>`). Input dimension 2.
pub fn epr_strategy(n: usize, d_env: usize) -> Result<CoherentFeedbackStrategy> {
    if n == 0 || n > 10 {
        return Err(Error::InvalidParameter(format!("epr strategy needs 1 <= n <= 10, got {n}")));
    }
    let a = 1usize << n;
    let sigma0 = DensityOperator::basis_state(a, 0);
    let maps = (0..n)
        .map(|t| {
            let e = d_env.pow(t as u32);
            let bit = n - 1 - t;
            // |alpha, eps> -> sum_s (-1)^{b s} / sqrt2 |alpha[bit := s], eps, s>
            let mut w = ComplexMatrix::zeros(a * e * 2, a * e);
            for alpha in 0..a {
                let b = (alpha >> bit) & 1;
                for eps in 0..e {
                    for s in 0..2usize {
                        let target = (alpha & !(1 << bit)) | (s << bit);
                        let sign = if b * s == 1 { -1.0 } else { 1.0 };
                        w[((target * e + eps) * 2 + s, alpha * e + eps)] = C64::new(sign * FRAC_1_SQRT_2, 0.0);
                    }
                }
            }
            QuantumChannel::isometry(w)
        })
        .collect::<Result<Vec<_>>>()?;
    CoherentFeedbackStrategy::new(sigma0, d_env, 2, maps)
}

/// Projector `Pi` onto the typical strings of the product eigenbasis of the channel's
/// entropy-maximizing output.
#[derive(Debug, Clone)]
pub struct OutputProjector {
    pub projector: HermitianOperator,
    /// `Tr(omega Pi)`.
    pub mass: f64,
    pub rank: usize,
    pub log2_bound: f64,
    pub max_entropy: f64,
}

/// Summary of an [`OutputProjector`] for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputProjectorSummary {
    pub mass: f64,
    pub rank: usize,
    pub log2_bound: f64,
    pub max_entropy: f64,
}

impl OutputProjector {
    pub fn summary(&self) -> OutputProjectorSummary {
        OutputProjectorSummary {
            mass: self.mass,
            rank: self.rank,
            log2_bound: self.log2_bound,
            max_entropy: self.max_entropy,
        }
    }

    /// `rank <= min(2^{log2_bound}, d^n)`.
    pub fn within_bound(&self) -> bool {
        (self.rank as f64).log2() <= self.log2_bound + 1e-12 && self.rank <= self.projector.dim()
    }
}

/// Measures `omega` (on `H_out^{(x)n}`) in the product eigenbasis `|m_{y^n}>` of the output
/// `T(rho*)` of an entropy maximizer `rho*`, and returns the projector onto the smallest set
/// of strings with mass `>= 1 - eps`. The bound uses `alpha = d_out eps^{-1/2}`.
pub fn output_projector(omega: &DensityOperator, channel: &QuantumChannel, eps: f64, tol: f64) -> Result<OutputProjector> {
    let d = channel.d_out();
    if omega.dims().iter().any(|&k| k != d) {
        return Err(Error::DimensionMismatch(format!(
            "omega has dims {:?}, expected copies of {d}",
            omega.dims()
        )));
    }
    let best = max_output_entropy(channel, tol)?;
    output_projector_in_basis(omega, &eig_herm(best.output.matrix())?.eigenvectors, eps, best.value)
}

/// [`output_projector`] with the single-letter basis (columns of `basis`) and entropy given.
pub fn output_projector_in_basis(
    omega: &DensityOperator,
    basis: &ComplexMatrix,
    eps: f64,
    max_entropy: f64,
) -> Result<OutputProjector> {
    let d = basis.rows();
    let n = omega.dims().len();
    let total = omega.dim();
    // rotate every factor into the basis: U^dagger^{(x)n} omega U^{(x)n}
    let ud = basis.adjoint();
    let mut rotated = omega.matrix().clone();
    for k in 0..n {
        let left = d.pow(k as u32);
        let right = d.pow((n - 1 - k) as u32);
        rotated = conjugate_middle(&ud, &rotated, left, right);
    }
    let q: Vec<f64> = rotated.diag_real().into_iter().map(|x| x.max(0.0)).collect();
    let set = typical_set(&q, n, d, eps, max_entropy)?;
    let mut keep = vec![0.0; total];
    for &y in &set.strings {
        keep[y] = 1.0;
    }
    let mut proj = ComplexMatrix::from_real_diag(&keep);
    for k in 0..n {
        let left = d.pow(k as u32);
        let right = d.pow((n - 1 - k) as u32);
        proj = conjugate_middle(basis, &proj, left, right);
    }
    let projector = HermitianOperator::new(proj.hermitian_part(), omega.dims().to_vec())?;
    let mass = omega.expectation(projector.matrix());
    Ok(OutputProjector {
        projector,
        mass,
        rank: set.len(),
        log2_bound: set.log2_bound,
        max_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_random_channel, sample_random_state, RandomChannelSpec, Seed};

    #[test]
    fn apply_middle_matches_kron() {
        let op = crate::sampling::ginibre(3, 2, Seed::new(1, 0)).unwrap();
        let m = crate::sampling::ginibre(2 * 2 * 5, 4, Seed::new(1, 1)).unwrap();
        let full = ComplexMatrix::identity(2).kron(&op).kron(&ComplexMatrix::identity(5));
        assert!(apply_middle(&op, &m, 2, 5).max_abs_diff(&full.matmul(&m)) < 1e-12);
    }

    #[test]
    fn epr_halves_through_identity_are_maximally_mixed() {
        let id = QuantumChannel::identity(2).stinespring();
        let s = epr_strategy(2, 1).unwrap();
        let omega = coherent_feedback_output(&s, &id).unwrap();
        let target = ComplexMatrix::identity(4).scale(0.25);
        assert!(omega.matrix().max_abs_diff(&target) < 1e-12);
        assert_eq!(omega.dims(), &[2, 2]);
    }

    #[test]
    fn single_round_fixed_preparation_gives_channel_output() {
        let rho = sample_random_state(2, 2, Seed::new(3, 0)).unwrap();
        let t = sample_random_channel(RandomChannelSpec::new(2, 3, 2).unwrap(), Seed::new(3, 1)).unwrap();
        let dil = t.stinespring();
        // phi_1 keeps the (one-dimensional) ancilla and prepares rho
        let phi = QuantumChannel::constant(1, &rho).unwrap();
        let s = CoherentFeedbackStrategy::new(DensityOperator::basis_state(1, 0), dil.d_env, 2, vec![phi]).unwrap();
        let omega = coherent_feedback_output(&s, &dil).unwrap();
        assert!(omega.matrix().max_abs_diff(t.apply(&rho).unwrap().matrix()) < 1e-12);
    }

    // Oracle: build every padded operator as an explicit matrix and compose on the full space.
    fn composed_oracle(s: &CoherentFeedbackStrategy, dil: &StinespringDilation) -> ComplexMatrix {
        let (a, d1, d2, d3) = (s.ancilla_dim(), s.d_in(), dil.d_out, dil.d_env);
        let mut rho = s.sigma0().matrix().clone();
        for (t, phi) in s.maps().iter().enumerate() {
            let x = a * d3.pow(t as u32);
            let b = d2.pow(t as u32);
            let id_b = ComplexMatrix::identity(b);
            let mut next = ComplexMatrix::zeros(x * d1 * b, x * d1 * b);
            for k in phi.kraus() {
                let big = k.kron(&id_b);
                next = &next + &big.matmul(&rho).matmul(&big.adjoint());
            }
            let big_v = ComplexMatrix::identity(x).kron(&dil.isometry).kron(&id_b);
            let dilated = big_v.matmul(&next).matmul(&big_v.adjoint());
            // permutation matrix taking [x, d2, d3, b] to [x, d3, b, d2]
            let dim = x * d2 * d3 * b;
            let mut p = ComplexMatrix::zeros(dim, dim);
            for i in 0..x {
                for o in 0..d2 {
                    for e in 0..d3 {
                        for r in 0..b {
                            let from = ((i * d2 + o) * d3 + e) * b + r;
                            let to = ((i * d3 + e) * b + r) * d2 + o;
                            p[(to, from)] = C64::new(1.0, 0.0);
                        }
                    }
                }
            }
            rho = p.matmul(&dilated).matmul(&p.adjoint());
        }
        let x = a * d3.pow(s.n() as u32);
        partial_trace_matrix(&rho, &[x, d2.pow(s.n() as u32)], &[1]).unwrap().0
    }

    #[test]
    fn random_two_round_strategy_matches_composition() {
        let t = sample_random_channel(RandomChannelSpec::new(2, 2, 2).unwrap(), Seed::new(4, 0)).unwrap();
        let dil = t.stinespring();
        assert_eq!(dil.d_env, 2);
        let a = 2;
        let sigma0 = sample_random_state(a, 2, Seed::new(4, 1)).unwrap();
        let maps = (0..2)
            .map(|r| {
                let x = a * 2usize.pow(r);
                sample_random_channel(RandomChannelSpec::new(x, x * 2, 2).unwrap(), Seed::new(4, 2 + r as u64)).unwrap()
            })
            .collect();
        let s = CoherentFeedbackStrategy::new(sigma0, 2, 2, maps).unwrap();
        let omega = coherent_feedback_output(&s, &dil).unwrap();
        assert!(omega.matrix().max_abs_diff(&composed_oracle(&s, &dil)) < 1e-12);
    }

    #[test]
    fn simulation_cap() {
        let id = QuantumChannel::identity(2).stinespring();
        let s = epr_strategy(10, 1).unwrap();
        assert!(matches!(coherent_feedback_output(&s, &id), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn projector_on_iid_output() {
        let t = QuantumChannel::depolarizing(2, 0.4).unwrap();
        let best = max_output_entropy(&t, 1e-9).unwrap();
        let n = 4;
        let mut omega = best.output.clone();
        for _ in 1..n {
            omega = omega.kron(&best.output);
        }
        let p = output_projector(&omega, &t, 0.5, 1e-9).unwrap();
        assert!(p.mass >= 0.5 - 1e-12);
        assert!(p.within_bound());
        assert!(p.projector.is_projector(1e-9));
        assert_eq!(p.projector.rank(0.5), p.rank);
    }

    #[test]
    fn projector_extremes() {
        // n = 1 and tiny eps need both basis strings of a non-pure qubit state
        let t = QuantumChannel::identity(2);
        let omega = sample_random_state(2, 2, Seed::new(5, 0)).unwrap();
        let p = output_projector(&omega, &t, 0.01, 1e-9).unwrap();
        if omega.eigenvalues()[1] > 0.01 {
            assert_eq!(p.rank, 2);
            assert!(p.projector.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-9);
        }
        // eps close to 1 keeps a single string
        let p = output_projector(&omega, &t, 0.99, 1e-9).unwrap();
        assert_eq!(p.rank, 1);
    }
}
