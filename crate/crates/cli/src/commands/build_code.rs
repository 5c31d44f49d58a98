use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use qid_core::channels::BalanceMethod;
use qid_core::idcodes::{
    blowup_code, entangled_hashing_code, eval_classical_id, eval_id_errors, greedy_random_code, hashing_code,
    reduction_deviation, EntangledParams, GreedyParams,
};
use qid_core::io::{to_json_string, to_value, ExperimentReport, IdCodeJson};
use qid_core::linalg::operator_interval_check;
use qid_core::{IdCode, Seed};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{config::resolve, CommandOutput, GlobalArgs};

/// Slack on the per-entry eigenvalue window and on the zero first-kind error.
const ENTRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildArgs {
    #[arg(long, value_parser = ["greedy", "hashing", "blowup", "entangled"])]
    pub construction: Option<String>,
    /// State dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Rank of the greedy code states.
    #[arg(long)]
    pub delta: Option<usize>,
    /// Target error of the second kind.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Width of the greedy eigenvalue window.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Stop after this many consecutive rejections.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Size M of the shared randomness (hashing, blowup).
    #[arg(long)]
    pub m: Option<usize>,
    /// Output alphabet N of the hashing code.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of functions drawn (hashing, blowup).
    #[arg(long)]
    pub count: Option<usize>,
    /// Ancilla dimension of the entangled construction.
    #[arg(long)]
    pub big_delta: Option<usize>,
    #[arg(long, value_parser = ["sandwich", "congruence"])]
    pub balance: Option<String>,
    /// Write the code as JSON here.
    #[arg(long)]
    pub code_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    #[default]
    Greedy,
    Hashing,
    Blowup,
    Entangled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub construction: Construction,
    pub seed: u64,
    pub trials: usize,
    /// Defaults: 16 greedy, 4 blowup base, 2 entangled.
    pub d: Option<usize>,
    pub delta: usize,
    /// Defaults: 0.6 greedy, 1/3 hashing and blowup, 0.5 entangled.
    pub lambda: Option<f64>,
    pub eta: f64,
    pub patience: Option<usize>,
    /// Defaults: 1024 hashing, 8 blowup.
    pub m: Option<usize>,
    pub n: usize,
    /// Defaults: 1024 hashing, 16 blowup.
    pub count: Option<usize>,
    pub big_delta: usize,
    pub balance: BalanceMethod,
    pub code_out: Option<PathBuf>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            construction: Construction::Greedy,
            seed: 1,
            trials: 10_000,
            d: None,
            delta: 2,
            lambda: None,
            eta: 1.0 / 3.0,
            patience: None,
            m: None,
            n: 64,
            count: None,
            big_delta: 16,
            balance: BalanceMethod::Sandwich,
            code_out: None,
        }
    }
}

impl BuildConfig {
    fn with_defaults(mut self) -> Self {
        self.lambda.get_or_insert(match self.construction {
            Construction::Greedy => 0.6,
            Construction::Hashing | Construction::Blowup => 1.0 / 3.0,
            Construction::Entangled => 0.5,
        });
        self.d.get_or_insert(match self.construction {
            Construction::Blowup => 4,
            Construction::Entangled => 2,
            _ => 16,
        });
        let blowup = self.construction == Construction::Blowup;
        self.m.get_or_insert(if blowup { 8 } else { 1024 });
        self.count.get_or_insert(if blowup { 16 } else { 1024 });
        self
    }

    fn lambda(&self) -> f64 {
        self.lambda.expect("filled by with_defaults")
    }

    fn d(&self) -> usize {
        self.d.expect("filled by with_defaults")
    }

    fn m(&self) -> usize {
        self.m.expect("filled by with_defaults")
    }

    fn count(&self) -> usize {
        self.count.expect("filled by with_defaults")
    }

    fn greedy_params(&self) -> Result<GreedyParams> {
        let mut p = GreedyParams::new(self.d(), self.delta, self.lambda(), self.eta, self.trials)?;
        p.patience = self.patience;
        p.validate()?;
        Ok(p)
    }
}

fn write_code(path: &Option<PathBuf>, payload: String) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, payload).with_context(|| format!("writing code to {}", p.display()))?;
    }
    Ok(())
}

/// Number of entries failing the greedy properties: support decoder of rank `delta` and
/// nonzero eigenvalues in `[(1-eta)/delta, (1+eta)/delta]`, both within `ENTRY_TOL`.
fn greedy_entries_failing(code: &IdCode, delta: usize, eta: f64) -> Result<usize> {
    let (lo, hi) = ((1.0 - eta) / delta as f64, (1.0 + eta) / delta as f64);
    let mut bad = 0;
    for e in code.entries() {
        let rank_ok = e.decoder.is_projector(ENTRY_TOL) && e.decoder.rank(0.5) == delta;
        let window_ok = operator_interval_check(&e.state, lo - ENTRY_TOL, hi + ENTRY_TOL, Some(&e.decoder))?;
        if !(rank_ok && window_ok) {
            bad += 1;
        }
    }
    Ok(bad)
}

pub fn run(global: &GlobalArgs, args: &BuildArgs) -> Result<CommandOutput> {
    let cfg: BuildConfig = resolve::<BuildConfig>(global, args)?.with_defaults();
    let seed = Seed::new(cfg.seed, 0);
    let lambda = cfg.lambda();
    let mut report = ExperimentReport::new("build-code", to_value(&cfg)?);
    match cfg.construction {
        Construction::Greedy => {
            let params = cfg.greedy_params()?;
            let (code, stats) = greedy_random_code(&params, seed)?;
            let errors = eval_id_errors(&code, None)?;
            let bad = greedy_entries_failing(&code, cfg.delta, cfg.eta)?;
            write_code(&cfg.code_out, to_json_string(&IdCodeJson::from(&code))?)?;
            report.items.push(json!({
                "construction": "greedy",
                "size": code.len(),
                "errors": to_value(&errors)?,
                "stats": to_value(&stats)?,
                "entries_outside_window": bad,
                "code_path": cfg.code_out,
            }));
            report.verdict(
                "lambda1 is zero",
                errors.lambda1 <= ENTRY_TOL,
                format!("lambda1 = {:e}", errors.lambda1),
            );
            report.verdict(
                "lambda2 within target",
                errors.lambda2 <= lambda,
                format!("lambda2 = {} <= {lambda}", errors.lambda2),
            );
            report.verdict(
                "entries satisfy the eigenvalue window",
                bad == 0,
                format!("{bad} of {} entries outside", code.len()),
            );
            if cfg.delta == cfg.d() {
                report.verdict(
                    "full-rank states give at most one entry",
                    code.len() <= 1,
                    "with delta = d every decoder is the identity, so any two entries collide",
                );
            }
        }
        Construction::Hashing => {
            let code = hashing_code(cfg.m(), cfg.n, cfg.count(), seed)?;
            let errors = eval_classical_id(&code);
            write_code(&cfg.code_out, to_json_string(&code)?)?;
            let (coll, m) = errors.lambda2_count.unwrap_or((0, cfg.m()));
            report.items.push(json!({
                "construction": "hashing",
                "size": code.len(),
                "errors": to_value(&errors)?,
                "code_path": cfg.code_out,
            }));
            report.verdict(
                "lambda1 is zero",
                errors.lambda1 == 0.0,
                format!("lambda1 = {}", errors.lambda1),
            );
            report.verdict(
                "lambda2 within target",
                coll as f64 <= lambda * m as f64,
                format!("max collisions {coll} of {m}"),
            );
        }
        Construction::Blowup => {
            let (base, _) = greedy_random_code(&cfg.greedy_params()?, seed)?;
            let base_errors = eval_id_errors(&base, None)?;
            let (code, functions) = blowup_code(&base, cfg.m(), cfg.count(), seed)?;
            let errors = eval_id_errors(&code, None)?;
            let fn_errors = eval_classical_id(&functions);
            write_code(&cfg.code_out, to_json_string(&IdCodeJson::from(&code))?)?;
            let c = fn_errors.lambda2;
            let limit = c + (1.0 - c) * base_errors.lambda2;
            report.items.push(json!({
                "construction": "blowup",
                "base_size": base.len(),
                "size": code.len(),
                "base_errors": to_value(&base_errors)?,
                "function_errors": to_value(&fn_errors)?,
                "errors": to_value(&errors)?,
                "code_path": cfg.code_out,
            }));
            report.verdict(
                "lambda1 no worse than the base code",
                errors.lambda1 <= base_errors.lambda1 + 1e-12,
                format!("{} vs base {}", errors.lambda1, base_errors.lambda1),
            );
            report.verdict(
                "lambda2 within collision mixture",
                errors.lambda2 <= limit + 1e-12,
                format!("{} <= c + (1 - c) base = {limit}", errors.lambda2),
            );
        }
        Construction::Entangled => {
            let mut params = EntangledParams::new(cfg.d(), cfg.big_delta, lambda, cfg.trials)?;
            params.patience = cfg.patience;
            params.balance = cfg.balance;
            params.validate()?;
            let (code, channels, stats) = entangled_hashing_code(&params, seed)?;
            let errors = eval_id_errors(&code, None)?;
            let mut worst_reduction = 0.0f64;
            for e in code.entries() {
                worst_reduction = worst_reduction.max(reduction_deviation(&e.state)?);
            }
            let worst_residual = channels.iter().map(|c| c.kraus_residual()).fold(0.0, f64::max);
            write_code(&cfg.code_out, to_json_string(&IdCodeJson::from(&code))?)?;
            report.items.push(json!({
                "construction": "entangled",
                "size": code.len(),
                "errors": to_value(&errors)?,
                "stats": to_value(&stats)?,
                "max_reduction_deviation": worst_reduction,
                "max_kraus_residual": worst_residual,
                "code_path": cfg.code_out,
            }));
            report.verdict(
                "reductions are maximally mixed",
                worst_reduction <= 1e-9,
                format!("max deviation {worst_reduction:e}"),
            );
            report.verdict(
                "extracted channels are trace preserving",
                worst_residual <= 1e-8,
                format!("max Kraus residual {worst_residual:e}"),
            );
        }
    }
    Ok(report.into())
}
