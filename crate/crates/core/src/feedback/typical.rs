use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the target mass `1 - eps`, absorbing summation roundoff.
const MASS_SLACK: f64 = 1e-12;

/// Smallest set of strings with probability at least `1 - eps`, with the cardinality bound
/// `2^{n maxH + alpha sqrt(n)}`, `alpha = |Y| eps^{-1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalSet {
    /// String indices in order of decreasing probability (ties by index).
    pub strings: Vec<usize>,
    pub mass: f64,
    /// `log2` of the cardinality bound; infinite when `eps = 0`.
    pub log2_bound: f64,
}

impl TypicalSet {
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn bound(&self) -> f64 {
        self.log2_bound.exp2()
    }

    /// `|E| <= 2^{log2_bound}`, compared in log space.
    pub fn within_bound(&self) -> bool {
        (self.len() as f64).log2() <= self.log2_bound + 1e-12
    }
}

/// `log2` of the typical-set cardinality bound.
pub fn typical_log2_bound(n: usize, alphabet: usize, eps: f64, max_entropy: f64) -> f64 {
    if eps <= 0.0 {
        return f64::INFINITY;
    }
    let alpha = alphabet as f64 / eps.sqrt();
    n as f64 * max_entropy + alpha * (n as f64).sqrt()
}

/// Greedy smallest-cardinality set of mass `>= 1 - eps` for a distribution on `alphabet^n`
/// strings. `max_entropy` is the single-letter maximum output entropy entering the bound.
pub fn typical_set(q: &[f64], n: usize, alphabet: usize, eps: f64, max_entropy: f64) -> Result<TypicalSet> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps must lie in [0, 1), got {eps}")));
    }
    if alphabet.checked_pow(n as u32) != Some(q.len()) {
        return Err(Error::DimensionMismatch(format!(
            "distribution has {} entries, expected {alphabet}^{n}",
            q.len()
        )));
    }
    if q.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidDistribution("negative or NaN probability".into()));
    }
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    let target = 1.0 - eps - MASS_SLACK;
    let mut mass = 0.0;
    let mut strings = Vec::new();
    for &y in &order {
        if mass >= target || q[y] == 0.0 {
            break;
        }
        mass += q[y];
        strings.push(y);
    }
    Ok(TypicalSet {
        strings,
        mass,
        log2_bound: typical_log2_bound(n, alphabet, eps, max_entropy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli_product(p: f64, n: usize) -> Vec<f64> {
        (0..1usize << n)
            .map(|s| {
                let ones = s.count_ones() as i32;
                p.powi(ones) * (1.0 - p).powi(n as i32 - ones)
            })
            .collect()
    }

    #[test]
    fn deterministic_distribution() {
        let mut q = vec![0.0; 8];
        q[5] = 1.0;
        let t = typical_set(&q, 3, 2, 0.1, 1.0).unwrap();
        assert_eq!(t.strings, vec![5]);
    }

    #[test]
    fn uniform_with_zero_eps_is_everything() {
        let q = vec![1.0 / 16.0; 16];
        let t = typical_set(&q, 4, 2, 0.0, 1.0).unwrap();
        assert_eq!(t.len(), 16);
        assert!(t.log2_bound.is_infinite());
    }

    #[test]
    fn bernoulli_matches_sort_and_accumulate() {
        let (n, eps) = (20, 0.1);
        let q = bernoulli_product(0.9, n);
        // oracle: probabilities depend only on the weight; walk weight classes
        let mut need = 1.0 - eps;
        let mut size = 0usize;
        for w in 0..=n {
            let each = 0.9f64.powi((n - w) as i32) * 0.1f64.powi(w as i32);
            let count = (0..w).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64) as usize;
            if need <= 1e-12 {
                break;
            }
            let take = ((need / each).ceil() as usize).min(count);
            size += take;
            need -= take as f64 * each;
        }
        let h = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
        let t = typical_set(&q, n, 2, eps, h.max(1.0)).unwrap();
        assert_eq!(t.len(), size);
        assert!(t.mass >= 1.0 - eps - 1e-12);
        assert!(t.within_bound());
        let direct: f64 = t.strings.iter().map(|&y| q[y]).sum();
        assert!((direct - t.mass).abs() < 1e-12);
    }

    #[test]
    fn minimal_by_brute_force() {
        let q: Vec<f64> = {
            let w = [5.0, 1.0, 3.0, 3.0, 0.5, 2.0, 4.0, 1.5, 0.25, 0.75, 6.0, 1.0, 2.0, 2.5, 0.5, 1.0];
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        };
        for &eps in &[0.05, 0.2, 0.5, 0.8] {
            let t = typical_set(&q, 4, 2, eps, 1.0).unwrap();
            let best = (0u32..1 << 16)
                .filter(|m| (0..16).filter(|&i| m >> i & 1 == 1).map(|i| q[i]).sum::<f64>() >= 1.0 - eps - 1e-12)
                .map(|m| m.count_ones() as usize)
                .min()
                .unwrap();
            assert_eq!(t.len(), best, "eps={eps}");
            // dropping any member falls below the target
            for &y in &t.strings {
                assert!(t.mass - q[y] < 1.0 - eps - 1e-12);
            }
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(typical_set(&[0.5, 0.5], 1, 2, 1.0, 1.0).is_err());
        assert!(typical_set(&[0.5, 0.5, 0.0], 1, 2, 0.1, 1.0).is_err());
    }
}
