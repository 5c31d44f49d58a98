//! Seeded Haar sampling: Ginibre matrices, unitaries, isometries, random channels and
//! random states.
//!
//! Every draw is a pure function of a [`Seed`]. Monte Carlo trial `i` uses stream `i`,
//! so results do not depend on how trials are scheduled across threads.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityOperator, C64};

/// Counter-based seed: a root key plus a substream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub root: u64,
    pub stream: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl Seed {
    pub const fn new(root: u64, stream: u64) -> Self {
        Self { root, stream }
    }

    /// Same root, different substream.
    pub const fn with_stream(self, stream: u64) -> Self {
        Self {
            root: self.root,
            stream,
        }
    }

    /// Independent root for a named sub-experiment; stream reset to 0.
    pub fn derive(self, tag: u64) -> Self {
        let root = splitmix64(self.root ^ splitmix64(tag.wrapping_add(self.stream.rotate_left(32))));
        Self { root, stream: 0 }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(self.stream);
        rng
    }
}

/// Standard complex Gaussians (`E|z|^2 = 1`) by Box-Muller.
pub struct GaussianSource {
    rng: ChaCha8Rng,
}

impl GaussianSource {
    pub fn new(seed: Seed) -> Self {
        Self { rng: seed.rng() }
    }

    pub fn complex(&mut self) -> C64 {
        // u1 in (0, 1] keeps the log finite
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let r = (-u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        C64::new(r * c, r * s)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// `m x n` matrix of i.i.d. standard complex Gaussians, filled row-major.
pub fn ginibre(m: usize, n: usize, seed: Seed) -> Result<ComplexMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("ginibre shape {m}x{n}")));
    }
    let mut g = GaussianSource::new(seed);
    Ok(ComplexMatrix::from_fn(m, n, |_, _| g.complex()))
}

/// Thin QR with the diagonal of R made real-positive: column k of Q is multiplied by
/// `R_kk / |R_kk|`, which is what makes the result Haar distributed.
pub(crate) fn phase_fixed_q(a: &ComplexMatrix) -> ComplexMatrix {
    let qr = a.to_nalgebra().qr();
    let q: DMatrix<C64> = qr.q();
    let r: DMatrix<C64> = qr.r();
    let mut out = ComplexMatrix::from_nalgebra(&q);
    for k in 0..out.cols() {
        let rkk = r[(k, k)];
        let n = rkk.norm();
        let phase = if n > 0.0 { rkk / n } else { C64::new(1.0, 0.0) };
        for row in 0..out.rows() {
            out[(row, k)] *= phase;
        }
    }
    out
}

/// Haar-random `d x d` unitary (QR of Ginibre with phase fix).
pub fn haar_unitary(d: usize, seed: Seed) -> Result<ComplexMatrix> {
    let g = ginibre(d, d, seed)?;
    Ok(phase_fixed_q(&g))
}

/// Haar-random isometry `C^s -> C^dim` as a `dim x s` matrix; distributed as the first
/// `s` columns of a Haar unitary.
pub fn random_isometry(s: usize, dim: usize, seed: Seed) -> Result<ComplexMatrix> {
    if s == 0 || s > dim {
        return Err(Error::InvalidParameter(format!(
            "isometry from C^{s} into C^{dim} requires 1 <= s <= dim"
        )));
    }
    if s == 1 {
        // normalization is the phase-fixed QR of a single column
        let mut g = GaussianSource::new(seed);
        let v: Vec<C64> = (0..dim).map(|_| g.complex()).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        return Ok(ComplexMatrix::column(&v.iter().map(|z| z / norm).collect::<Vec<_>>()));
    }
    let g = ginibre(dim, s, seed)?;
    Ok(phase_fixed_q(&g))
}

/// Haar-random unit vector in `C^dim`.
pub fn haar_vector(dim: usize, seed: Seed) -> Result<Vec<C64>> {
    Ok(random_isometry(1, dim, seed)?.into_data())
}

/// Parameters of the random channel `C^s -> C^t` with a `u`-dimensional environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomChannelSpec {
    pub s: usize,
    pub t: usize,
    pub u: usize,
}

impl RandomChannelSpec {
    pub fn new(s: usize, t: usize, u: usize) -> Result<Self> {
        if s == 0 || t == 0 || u == 0 {
            return Err(Error::InvalidParameter("channel dimensions must be positive".into()));
        }
        if s > t * u {
            return Err(Error::InvalidParameter(format!(
                "random channel needs s <= t*u, got s={s}, t*u={}",
                t * u
            )));
        }
        Ok(Self { s, t, u })
    }
}

/// Random channel: Haar isometry `V: C^s -> C^t (x) C^u` followed by the trace over `C^u`.
/// Kraus operators are `K_j = (I_t (x) <j|) V`.
pub fn sample_random_channel(spec: RandomChannelSpec, seed: Seed) -> Result<QuantumChannel> {
    let spec = RandomChannelSpec::new(spec.s, spec.t, spec.u)?;
    let v = random_isometry(spec.s, spec.t * spec.u, seed)?;
    let kraus = (0..spec.u)
        .map(|j| ComplexMatrix::from_fn(spec.t, spec.s, |a, i| v[(a * spec.u + j, i)]))
        .collect();
    QuantumChannel::new(kraus)
}

/// Random state on `C^t`: reduction of a Haar vector on `C^t (x) C^u`; rank <= min(t, u).
pub fn sample_random_state(t: usize, u: usize, seed: Seed) -> Result<DensityOperator> {
    if t == 0 || u == 0 {
        return Err(Error::InvalidParameter("random state dimensions must be positive".into()));
    }
    let v = haar_vector(t * u, seed)?;
    Ok(DensityOperator::from_trusted(reduce_vector(&v, t, u), vec![t]))
}

/// `Tr_u |v><v|` for `v` in `C^t (x) C^u`, i.e. `W W^dagger` with `W` the `t x u` reshape.
pub(crate) fn reduce_vector(v: &[C64], t: usize, u: usize) -> ComplexMatrix {
    let w = ComplexMatrix::from_fn(t, u, |a, k| v[a * u + k]);
    w.matmul(&w.adjoint())
}

/// `Tr_t |v><v|`, the other Schmidt reduction.
#[cfg(test)]
pub(crate) fn reduce_vector_first(v: &[C64], t: usize, u: usize) -> ComplexMatrix {
    let w = ComplexMatrix::from_fn(t, u, |a, k| v[a * u + k]);
    w.adjoint_matmul(&w).transpose()
}
