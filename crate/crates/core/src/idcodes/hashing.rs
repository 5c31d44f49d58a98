use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::code::{IdCode, IdEntry, IdErrorReport};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityOperator, HermitianOperator};
use crate::sampling::Seed;

const TAG_HASHING: u64 = 0x4A54;

/// Largest side length of a blown-up code.
pub const BLOWUP_DIM_CAP: usize = 1024;

/// Classical ID code from shared randomness: message `i` is the function `f_i: [M] -> [N]`,
/// sent as `f_i(mu)` for a shared uniform `mu`; the decoder of `i` accepts the graph of `f_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalIdCode {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub functions: Vec<Vec<u32>>,
}

impl ClassicalIdCode {
    pub fn new(m: usize, n: usize, functions: Vec<Vec<u32>>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameter("M and N must be positive".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("N={n} exceeds the u32 letter range")));
        }
        let mut seen = HashSet::with_capacity(functions.len());
        for (i, f) in functions.iter().enumerate() {
            if f.len() != m {
                return Err(Error::DimensionMismatch(format!("function {i} has {} values, M={m}", f.len())));
            }
            if let Some(&v) = f.iter().find(|&&v| v as usize >= n) {
                return Err(Error::IndexOutOfRange {
                    index: v as usize,
                    factors: n,
                });
            }
            if !seen.insert(f.as_slice()) {
                return Err(Error::InvalidParameter(format!("function {i} repeats an earlier one")));
            }
        }
        Ok(Self { m, n, functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// `log2(N^M)`, compared instead of `N^M` to avoid overflow.
fn fits_count(m: usize, n: usize, count: usize) -> bool {
    (m as f64) * (n as f64).log2() >= (count as f64).log2() - 1e-12 && {
        // exact check when N^M is representable
        match (n as u128).checked_pow(m.min(u32::MAX as usize) as u32) {
            Some(total) => count as u128 <= total,
            None => true,
        }
    }
}

/// `count` distinct functions `[M] -> [N]`, each uniformly random; repeats are redrawn.
pub fn hashing_code(m: usize, n: usize, count: usize, seed: Seed) -> Result<ClassicalIdCode> {
    if m == 0 {
        return Err(Error::InvalidParameter("M must be positive".into()));
    }
    if n < 2 || count < 2 {
        return Err(Error::InvalidParameter(format!("need N >= 2 and count >= 2, got N={n}, count={count}")));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!("N={n} exceeds the u32 letter range")));
    }
    sample_functions(m, n, count, seed)
}

fn sample_functions(m: usize, n: usize, count: usize, seed: Seed) -> Result<ClassicalIdCode> {
    if !fits_count(m, n, count) {
        return Err(Error::Infeasible(format!("{count} distinct functions requested but N^M = {n}^{m}")));
    }
    let mut rng = seed.derive(TAG_HASHING).rng();
    let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(count);
    let mut functions = Vec::with_capacity(count);
    while functions.len() < count {
        let f: Vec<u32> = (0..m).map(|_| rng.random_range(0..n as u32)).collect();
        if seen.insert(f.clone()) {
            functions.push(f);
        }
    }
    Ok(ClassicalIdCode { m, n, functions })
}

/// Number of points where two functions agree.
pub fn collisions(f: &[u32], g: &[u32]) -> usize {
    f.iter().zip(g).filter(|(a, b)| a == b).count()
}

/// Exact error probabilities: `lambda1 = 0`, `lambda2 = max_{i != j} |{mu: f_i(mu) = f_j(mu)}| / M`.
pub fn eval_classical_id(code: &ClassicalIdCode) -> IdErrorReport {
    let k = code.functions.len();
    let f = &code.functions;
    // best partner j > i for each i; collisions are symmetric
    let best: Vec<Option<(usize, usize)>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(usize, usize)> = None;
            for j in (i + 1)..k {
                let c = collisions(&f[i], &f[j]);
                if best.is_none_or(|(b, _)| c > b) {
                    best = Some((c, j));
                }
            }
            best
        })
        .collect();
    let mut top: Option<(usize, usize, usize)> = None;
    for (i, b) in best.into_iter().enumerate() {
        if let Some((c, j)) = b {
            if top.is_none_or(|(t, _, _)| c > t) {
                top = Some((c, i, j));
            }
        }
    }
    let (count, pair) = match top {
        Some((c, i, j)) => (c, Some((i, j))),
        None => (0, None),
    };
    IdErrorReport {
        lambda1: 0.0,
        lambda2: count as f64 / code.m as f64,
        argmax1: if k > 0 { Some(0) } else { None },
        argmax2: pair,
        lambda2_count: Some((count, code.m)),
    }
}

/// Blowup of a quantum code by `M` values of shared randomness: for `count` distinct random
/// `f: [M] -> [N]` the new entry is `sigma_f = (1/M) sum_mu |mu><mu| (x) rho_{f(mu)}` with
/// block-diagonal decoder `sum_mu |mu><mu| (x) D_{f(mu)}`. Returns the functions as well.
pub fn blowup_code(base: &IdCode, m: usize, count: usize, seed: Seed) -> Result<(IdCode, ClassicalIdCode)> {
    let n = base.len();
    if n == 0 {
        return Err(Error::InvalidParameter("blowup needs a nonempty base code".into()));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("M must be positive".into()));
    }
    let d_in = base.entries()[0].state.dim();
    let d_out = base.entries()[0].decoder.dim();
    if m * d_in.max(d_out) > BLOWUP_DIM_CAP {
        return Err(Error::CapExceeded {
            what: "blown-up dimension",
            value: (m * d_in.max(d_out)) as f64,
            cap: BLOWUP_DIM_CAP as f64,
        });
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be positive".into()));
    }
    let functions = sample_functions(m, n, count, seed)?;
    let blocks = |f: &[u32], pick: &dyn Fn(usize) -> ComplexMatrix, side: usize, scale: f64| {
        let mut out = ComplexMatrix::zeros(m * side, m * side);
        for (mu, &x) in f.iter().enumerate() {
            let b = pick(x as usize);
            for r in 0..side {
                for c in 0..side {
                    out[(mu * side + r, mu * side + c)] = b[(r, c)] * scale;
                }
            }
        }
        out
    };
    let mut in_dims = vec![m];
    in_dims.extend_from_slice(base.dims());
    let mut out_dims = vec![m];
    out_dims.extend_from_slice(base.entries()[0].decoder.dims());
    let entries = functions
        .functions
        .par_iter()
        .map(|f| {
            let s = blocks(f, &|x| base.entries()[x].state.matrix().clone(), d_in, 1.0 / m as f64);
            let d = blocks(f, &|x| base.entries()[x].decoder.matrix().clone(), d_out, 1.0);
            IdEntry {
                state: DensityOperator::from_trusted(s, in_dims.clone()),
                decoder: HermitianOperator::from_trusted(d, out_dims.clone()),
            }
        })
        .collect();
    Ok((IdCode::from_trusted(in_dims, entries), functions))
}
