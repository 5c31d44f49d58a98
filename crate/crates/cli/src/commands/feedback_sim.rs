use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use qid_core::channels::max_output_entropy;
use qid_core::feedback::{
    coherent_feedback_output, epr_strategy, feedback_output_dist, general_output_dist, output_projector,
    reduce_general_strategy, typical_set,
};
use qid_core::idcodes::{eval_id_errors, round_decoders, IdEntry};
use qid_core::io::{distribution_csv, to_value, ExperimentReport, QcChannelJson, QuantumChannelJson, StrategyJson};
use qid_core::linalg::{ComplexMatrix, DensityOperator, HermitianOperator};
use qid_core::sampling::{sample_random_channel, GaussianSource, RandomChannelSpec};
use qid_core::{FeedbackStrategy, IdCode, QcChannel, Seed};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::json;

use super::presets::{random_adaptive_strategy, random_general_strategy};
use crate::{config::resolve, CommandOutput, GlobalArgs};

/// Tolerance on distribution sums and on the general-to-passive reduction.
const DIST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeedbackArgs {
    #[arg(long, value_parser = ["passive", "general", "coherent"])]
    pub mode: Option<String>,
    /// Block length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Built-in passive strategy, used when no strategy file is given.
    #[arg(long, value_parser = ["adaptive", "deterministic"])]
    pub strategy: Option<String>,
    /// Passive strategy file.
    #[arg(long)]
    pub strategy_file: Option<PathBuf>,
    /// qc channel (passive, general) or quantum channel (coherent) file.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    /// Input dimension of the built-in channels and strategies.
    #[arg(long)]
    pub d: Option<usize>,
    /// Typical-set slack.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Messages of the rounded feedback code in passive mode (0 skips it).
    #[arg(long)]
    pub messages: Option<usize>,
    /// Ancilla dimension of the random general strategies.
    #[arg(long)]
    pub ancilla: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Passive,
    General,
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyPreset {
    #[default]
    Adaptive,
    Deterministic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Random instances in general mode; unused otherwise.
    pub trials: usize,
    pub n: usize,
    pub strategy: StrategyPreset,
    pub strategy_file: Option<PathBuf>,
    pub channel: Option<PathBuf>,
    pub d: usize,
    pub eps: f64,
    pub messages: usize,
    pub ancilla: usize,
    pub tol: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Passive,
            seed: 1,
            trials: 20,
            n: 3,
            strategy: StrategyPreset::Adaptive,
            strategy_file: None,
            channel: None,
            d: 2,
            eps: 0.3,
            messages: 4,
            ancilla: 2,
            tol: 1e-9,
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a {what} file", path.display()))
}

fn qc_channel(cfg: &FeedbackConfig) -> Result<QcChannel> {
    match &cfg.channel {
        Some(p) => Ok(read_json::<QcChannelJson>(p, "qc channel")?.to_channel()?),
        None => Ok(QcChannel::computational(cfg.d)),
    }
}

fn passive_strategy(cfg: &FeedbackConfig, alphabet: usize, seed: Seed) -> Result<FeedbackStrategy> {
    if let Some(p) = &cfg.strategy_file {
        return Ok(read_json::<StrategyJson>(p, "strategy")?.to_strategy()?);
    }
    Ok(match cfg.strategy {
        StrategyPreset::Adaptive => random_adaptive_strategy(cfg.d, cfg.n, alphabet, seed)?,
        StrategyPreset::Deterministic => {
            FeedbackStrategy::constant(&DensityOperator::basis_state(cfg.d, 0), cfg.n, alphabet)?
        }
    })
}

pub fn run(global: &GlobalArgs, args: &FeedbackArgs) -> Result<CommandOutput> {
    let cfg: FeedbackConfig = resolve(global, args)?;
    if cfg.n == 0 {
        bail!("n must be at least 1");
    }
    if !(0.0..1.0).contains(&cfg.eps) {
        bail!("eps must lie in [0, 1), got {}", cfg.eps);
    }
    let seed = Seed::new(cfg.seed, 0);
    let mut report = ExperimentReport::new("feedback-sim", to_value(&cfg)?);
    let csv = match cfg.mode {
        Mode::Passive => Some(passive(&cfg, seed, &mut report)?),
        Mode::General => {
            general(&cfg, seed, &mut report)?;
            None
        }
        Mode::Coherent => {
            coherent(&cfg, seed, &mut report)?;
            None
        }
    };
    Ok(CommandOutput { report, csv })
}

fn passive(cfg: &FeedbackConfig, seed: Seed, report: &mut ExperimentReport) -> Result<String> {
    let w = qc_channel(cfg)?;
    let y = w.alphabet_size();
    let strategy = passive_strategy(cfg, y, seed.derive(0x57))?;
    let n = strategy.n();
    let q = feedback_output_dist(&strategy, &w)?;
    let max_h = max_output_entropy(&w, cfg.tol)?;
    let set = typical_set(&q, n, y, cfg.eps, max_h.value)?;
    let total: f64 = q.iter().sum();
    let full = (y as f64).powi(n as i32);
    report.items.push(json!({
        "kind": "distribution",
        "n": n,
        "alphabet": y,
        "sum": total,
        "support": q.iter().filter(|&&p| p > 0.0).count(),
        "max_entropy": max_h.value,
    }));
    report.items.push(json!({
        "kind": "typical-set",
        "eps": cfg.eps,
        "size": set.len(),
        "mass": set.mass,
        "log2_bound": set.log2_bound,
        "bound": set.bound(),
        "strings": full,
    }));
    report.verdict("distribution sums to one", (total - 1.0).abs() <= DIST_TOL, format!("sum = {total}"));
    if set.bound() <= full {
        report.verdict(
            "typical set within its cardinality bound",
            set.within_bound(),
            format!("{} <= {}", set.len(), set.bound()),
        );
    }
    if cfg.messages > 0 && cfg.eps > 0.0 {
        rounded_code(cfg, &w, n, seed, report)?;
    }
    Ok(distribution_csv(&q, n, y))
}

/// Feedback ID code whose messages are random adaptive strategies with random diagonal
/// decoders on `Y^n`; decoders are rounded to multiples of `1/c`, `c = ceil(3/eps)`, on
/// typical sets of mass `1 - eps/3`.
fn rounded_code(cfg: &FeedbackConfig, w: &QcChannel, n: usize, seed: Seed, report: &mut ExperimentReport) -> Result<()> {
    let y = w.alphabet_size();
    let max_h = max_output_entropy(w, cfg.tol)?.value;
    let mut uniform = GaussianSource::new(seed.derive(0xDEC));
    let mut entries = Vec::with_capacity(cfg.messages);
    let mut sets = Vec::with_capacity(cfg.messages);
    for i in 0..cfg.messages {
        let s = random_adaptive_strategy(w.d_in(), n, y, seed.derive(0x5A).with_stream(i as u64))?;
        let q = feedback_output_dist(&s, w)?;
        let dec: Vec<f64> = q.iter().map(|_| uniform.uniform()).collect();
        sets.push(typical_set(&q, n, y, cfg.eps / 3.0, max_h)?.strings);
        let dim = q.len();
        entries.push(IdEntry::new(
            DensityOperator::diagonal(&q)?,
            HermitianOperator::new(ComplexMatrix::from_real_diag(&dec), vec![dim])?,
        )?);
    }
    let code = IdCode::new(vec![y.pow(n as u32)], entries)?;
    let c = (3.0 / cfg.eps).ceil() as u64;
    let before = eval_id_errors(&code, None)?;
    let after = eval_id_errors(&round_decoders(&code, &sets, c)?, None)?;
    report.items.push(json!({
        "kind": "rounded-code",
        "messages": cfg.messages,
        "c": c,
        "lambda1_before": before.lambda1,
        "lambda1_after": after.lambda1,
        "lambda2_before": before.lambda2,
        "lambda2_after": after.lambda2,
    }));
    let limit = 2.0 / 3.0 * cfg.eps;
    report.verdict(
        "rounding degrades lambda1 by at most 2 eps / 3",
        after.lambda1 - before.lambda1 <= limit + 1e-12,
        format!("{} -> {} (limit +{limit})", before.lambda1, after.lambda1),
    );
    report.verdict(
        "rounding does not increase lambda2",
        after.lambda2 <= before.lambda2 + 1e-12,
        format!("{} -> {}", before.lambda2, after.lambda2),
    );
    Ok(())
}

fn general(cfg: &FeedbackConfig, seed: Seed, report: &mut ExperimentReport) -> Result<()> {
    let w = qc_channel(cfg)?;
    let y = w.alphabet_size();
    let mut worst = 0.0f64;
    let mut placeholders = 0;
    for k in 0..cfg.trials {
        let g = random_general_strategy(cfg.ancilla, w.d_in(), cfg.n, y, seed.derive(0x6E).with_stream(k as u64))?;
        let direct = general_output_dist(&g, &w)?;
        let reduced = reduce_general_strategy(&g, &w)?;
        let q = feedback_output_dist(&reduced.strategy, &w)?;
        let dev = direct.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        placeholders += reduced.placeholder_histories.len();
        report.items.push(json!({
            "kind": "general",
            "instance": k,
            "max_deviation": dev,
            "placeholders": reduced.placeholder_histories.len(),
        }));
        worst = worst.max(dev);
    }
    report.verdict(
        "reduction preserves the output distribution",
        worst <= DIST_TOL,
        format!("max deviation {worst:e} over {} instances, {placeholders} placeholder branches", cfg.trials),
    );
    Ok(())
}

fn coherent(cfg: &FeedbackConfig, seed: Seed, report: &mut ExperimentReport) -> Result<()> {
    let t = match &cfg.channel {
        Some(p) => read_json::<QuantumChannelJson>(p, "quantum channel")?.to_channel()?,
        None => sample_random_channel(RandomChannelSpec::new(2, 2, 2)?, seed.derive(0xC0))?,
    };
    if t.d_in() != 2 {
        bail!("coherent mode sends EPR halves and needs a qubit-input channel, got d_in = {}", t.d_in());
    }
    let dilation = t.stinespring();
    let strategy = epr_strategy(cfg.n, dilation.d_env)?;
    let omega = coherent_feedback_output(&strategy, &dilation)?;
    let proj = output_projector(&omega, &t, cfg.eps, cfg.tol)?;
    let summary = proj.summary();
    report.items.push(json!({
        "kind": "coherent",
        "n": cfg.n,
        "d_out": t.d_out(),
        "d_env": dilation.d_env,
        "projector": to_value(&summary)?,
        "bound": summary.log2_bound.exp2(),
    }));
    report.verdict(
        "projector captures mass 1 - eps",
        proj.mass >= 1.0 - cfg.eps - DIST_TOL,
        format!("mass {}", proj.mass),
    );
    report.verdict(
        "projector rank within bound",
        proj.within_bound(),
        format!("rank {} vs 2^{}", proj.rank, summary.log2_bound),
    );
    Ok(())
}
