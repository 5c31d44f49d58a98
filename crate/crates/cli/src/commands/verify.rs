use anyhow::{bail, Result};
use clap::Args;
use qid_core::io::{to_value, ExperimentReport};
use qid_core::linalg::{ComplexMatrix, HermitianOperator};
use qid_core::sampling::{haar_unitary, sample_random_state};
use qid_core::verify::{
    gentle_measurement_check, ld_tail, non_increasing, qubit_net, uniform_deviation, TailEstimate, TailKind,
};
use qid_core::Seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{config::resolve, CommandOutput, GlobalArgs};

/// Standard errors allowed between consecutive points of the uniform sweep.
const MONOTONE_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_parser = ["all", "ld", "uniform", "net", "gentle"])]
    pub lemma: Option<String>,
    /// Ambient dimension of the rank tails.
    #[arg(long)]
    pub d: Option<usize>,
    /// Projector rank of the rank tails.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// State dimension of the uniform deviation.
    #[arg(long)]
    pub t: Option<usize>,
    /// Environment sizes of the uniform sweep, in increasing order.
    #[arg(long, value_delimiter = ',')]
    pub u: Option<Vec<usize>>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub net_eps: Option<f64>,
    /// Coverage samples for the net.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random (state, projector) pairs for the gentle-measurement check.
    #[arg(long)]
    pub gentle_draws: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    #[default]
    All,
    Ld,
    Uniform,
    Net,
    Gentle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub lemma: Lemma,
    pub seed: u64,
    /// Monte Carlo trials per sweep point.
    pub trials: usize,
    pub d: usize,
    pub r: usize,
    pub eps: Vec<f64>,
    pub t: usize,
    pub u: Vec<usize>,
    pub eta: f64,
    pub net_eps: f64,
    pub samples: usize,
    pub gentle_draws: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            lemma: Lemma::All,
            seed: 1,
            trials: 10_000,
            d: 32,
            r: 4,
            eps: vec![0.25, 0.5, 1.0],
            t: 2,
            u: vec![8, 32, 128, 512, 2000],
            eta: 0.5,
            net_eps: 0.5,
            samples: 10_000,
            gentle_draws: 1000,
        }
    }
}

impl VerifyConfig {
    fn runs(&self, lemma: Lemma) -> bool {
        self.lemma == Lemma::All || self.lemma == lemma
    }
}

fn push_estimate(report: &mut ExperimentReport, e: &TailEstimate) -> Result<()> {
    report.items.push(to_value(e)?);
    report.verdict(
        format!("{:?} d={} eps={} within bound", e.kind, e.dim, e.eps),
        e.pass,
        format!("p = {} +- {}, bound {}", e.empirical_prob, e.std_err, e.bound),
    );
    Ok(())
}

pub fn run(global: &GlobalArgs, args: &VerifyArgs) -> Result<CommandOutput> {
    let cfg: VerifyConfig = resolve(global, args)?;
    if cfg.trials == 0 {
        bail!("trials must be positive");
    }
    let root = Seed::new(cfg.seed, 0);
    let mut report = ExperimentReport::new("verify", to_value(&cfg)?);

    if cfg.runs(Lemma::Ld) {
        let jobs: Vec<(usize, f64, TailKind)> = cfg
            .eps
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| [(i, e, TailKind::LdUpper), (i, e, TailKind::LdLower)])
            .collect();
        let estimates = jobs
            .par_iter()
            .map(|&(i, e, kind)| ld_tail(cfg.d, cfg.r, e, cfg.trials, root.derive(0x1D).with_stream(i as u64), kind))
            .collect::<qid_core::Result<Vec<_>>>()?;
        for e in &estimates {
            push_estimate(&mut report, e)?;
        }
        let means_ok = estimates.iter().all(TailEstimate::mean_consistent);
        report.verdict(
            "mean overlap equals r/d",
            means_ok,
            format!("r/d = {}", cfg.r as f64 / cfg.d as f64),
        );
    }

    if cfg.runs(Lemma::Uniform) {
        let estimates = cfg
            .u
            .par_iter()
            .enumerate()
            .map(|(i, &u)| uniform_deviation(cfg.t, u, cfg.eta, cfg.trials, root.derive(0x0F).with_stream(i as u64)))
            .collect::<qid_core::Result<Vec<_>>>()?;
        for e in &estimates {
            push_estimate(&mut report, e)?;
        }
        report.verdict(
            "deviation probability non-increasing in u",
            non_increasing(&estimates, MONOTONE_SIGMAS),
            format!("within {MONOTONE_SIGMAS} combined standard errors"),
        );
        if let Some(last) = estimates.iter().find(|e| e.env == Some(2000)) {
            report.verdict(
                "no deviation at u = 2000",
                last.hits == 0,
                format!("{} of {} trials deviate", last.hits, last.trials),
            );
        }
    }

    if cfg.runs(Lemma::Net) {
        let net = qubit_net(cfg.net_eps, cfg.samples, root.derive(0x4E))?;
        report.items.push(json!({
            "kind": "net",
            "eps": net.eps,
            "cardinality": net.cardinality,
            "paper_bound": net.paper_bound,
            "samples": net.samples,
            "coverage_failures": net.coverage_failures,
            "worst_distance": net.worst_distance,
        }));
        report.verdict(
            "net covers the sphere within its size bound",
            net.pass(),
            format!(
                "{} points (bound {}), {} uncovered, worst distance {}",
                net.cardinality, net.paper_bound, net.coverage_failures, net.worst_distance
            ),
        );
    }

    if cfg.runs(Lemma::Gentle) {
        let seed = root.derive(0x6E);
        let checks = (0..cfg.gentle_draws as u64)
            .into_par_iter()
            .map(|k| {
                let d = 2 + (k % 3) as usize;
                let rank = 1 + (k / 3) as usize % d;
                let rho = sample_random_state(d, d, seed.with_stream(2 * k))?;
                let u = haar_unitary(d, seed.with_stream(2 * k + 1))?;
                let mut pi = ComplexMatrix::zeros(d, d);
                for c in 0..rank {
                    pi = &pi + &ComplexMatrix::outer(&u.col(c));
                }
                gentle_measurement_check(&rho, &HermitianOperator::new(pi.hermitian_part(), vec![d])?)
            })
            .collect::<qid_core::Result<Vec<_>>>()?;
        let failures = checks.iter().filter(|c| !c.ok).count();
        let worst = checks.iter().map(|c| c.lhs / c.rhs.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        report.items.push(json!({
            "kind": "gentle",
            "draws": checks.len(),
            "failures": failures,
            "worst_ratio": worst,
        }));
        report.verdict(
            "gentle measurement bound holds",
            failures == 0,
            format!("{failures} of {} draws violate it", checks.len()),
        );
    }
    Ok(report.into())
}
