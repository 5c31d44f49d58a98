use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::sampling::{haar_vector, Seed};

const TAG_NET: u64 = 0x4E37;

/// Haar samples used by [`qubit_net`] to check coverage.
pub const NET_SAMPLES: usize = 10_000;

/// Latitude-longitude net of qubit pure states and its empirical coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    pub eps: f64,
    /// Bloch angles `(theta, phi)` of the net points.
    pub net: Vec<(f64, f64)>,
    pub cardinality: usize,
    /// `(5/eps)^{2d}` at `d = 2`.
    pub paper_bound: f64,
    pub samples: usize,
    pub coverage_failures: usize,
    /// Largest distance from a sample to its nearest net point.
    pub worst_distance: f64,
}

impl NetReport {
    pub fn pass(&self) -> bool {
        self.coverage_failures == 0 && self.cardinality as f64 <= self.paper_bound
    }

    pub fn states(&self) -> Vec<[C64; 2]> {
        self.net.iter().map(|&(t, p)| bloch_state(t, p)).collect()
    }
}

/// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
pub fn bloch_state(theta: f64, phi: f64) -> [C64; 2] {
    [
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// `||phi - psi||_1 = 2 sqrt(1 - |<phi|psi>|^2)` for unit vectors.
pub fn pure_trace_distance(a: &[C64], b: &[C64]) -> f64 {
    let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    2.0 * (1.0 - ip.norm_sqr()).max(0.0).sqrt()
}

/// Bloch angles of a grid whose trace-norm covering radius is at most `eps`.
///
/// The trace distance of two pure qubit states equals the chord between their Bloch
/// vectors, which is at most the arc. Rings sit `pi/K` apart with `K = ceil(pi/eps)`, so any
/// point is within `eps/2` of a ring along its meridian; ring `j` carries
/// `ceil(2 pi sin(theta_j) / eps)` points, so the step along the ring is at most `eps/2`.
pub fn qubit_net_points(eps: f64) -> Result<Vec<(f64, f64)>> {
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::InvalidParameter(format!("net radius must lie in (0, 2], got {eps}")));
    }
    if eps >= 2.0 {
        return Ok(vec![(0.0, 0.0)]);
    }
    let k = (PI / eps).ceil() as usize;
    let mut pts = Vec::new();
    for j in 0..=k {
        let theta = PI * j as f64 / k as f64;
        let m = ((2.0 * PI * theta.sin() / eps).ceil() as usize).max(1);
        for i in 0..m {
            pts.push((theta, 2.0 * PI * i as f64 / m as f64));
        }
    }
    Ok(pts)
}

/// Builds the net for `eps` and checks it against `samples` Haar-random pure states.
pub fn qubit_net(eps: f64, samples: usize, seed: Seed) -> Result<NetReport> {
    let net = qubit_net_points(eps)?;
    let states: Vec<[C64; 2]> = net.iter().map(|&(t, p)| bloch_state(t, p)).collect();
    let base = seed.derive(TAG_NET);
    let nearest: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let v = haar_vector(2, base.with_stream(k as u64))?;
            Ok(states
                .iter()
                .map(|s| pure_trace_distance(s, &v))
                .fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<_>>()?;
    let coverage_failures = nearest.iter().filter(|&&x| x > eps + 1e-12).count();
    let worst_distance = nearest.iter().copied().fold(0.0, f64::max);
    Ok(NetReport {
        eps,
        cardinality: net.len(),
        net,
        paper_bound: (5.0 / eps).powi(4),
        samples,
        coverage_failures,
        worst_distance,
    })
}
