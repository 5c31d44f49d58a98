use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use qid_core::idcodes::{eval_classical_id, eval_id_errors};
use qid_core::io::{to_value, ChannelJson, ExperimentReport, IdCodeJson, QuantumChannelJson, StrategyJson};
use qid_core::ClassicalIdCode;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{CommandOutput, GlobalArgs};

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShowArgs {
    /// Channel, code, strategy or report file.
    pub path: PathBuf,
    /// Evaluate a quantum code through this channel instead of the identity.
    #[arg(long)]
    pub channel: Option<PathBuf>,
}

fn has(v: &Value, keys: &[&str]) -> bool {
    keys.iter().all(|k| v.get(k).is_some())
}

/// Summarizes a file; the kind is read off its keys. Codes are re-evaluated.
pub fn run(_global: &GlobalArgs, args: &ShowArgs) -> Result<CommandOutput> {
    let text = fs::read_to_string(&args.path).with_context(|| format!("reading {}", args.path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.path.display()))?;
    let mut report = ExperimentReport::new("show", json!({ "path": args.path, "channel": args.channel }));
    if has(&v, &["command", "verdicts"]) {
        let verdicts = v["verdicts"].as_array().cloned().unwrap_or_default();
        let failed = verdicts.iter().filter(|x| x["pass"] == false).count();
        report.items.push(json!({
            "kind": "report",
            "command": v["command"],
            "version": v["version"],
            "items": v["items"].as_array().map_or(0, Vec::len),
            "verdicts": verdicts.len(),
            "failed": failed,
        }));
        report.verdict("stored verdicts pass", failed == 0, format!("{failed} of {} failed", verdicts.len()));
    } else if has(&v, &["dims", "entries"]) {
        let code = serde_json::from_value::<IdCodeJson>(v)?.to_code()?;
        let channel = match &args.channel {
            Some(p) => {
                let t: QuantumChannelJson = serde_json::from_str(&fs::read_to_string(p)?)
                    .with_context(|| format!("{} is not a quantum channel file", p.display()))?;
                Some(t.to_channel()?)
            }
            None => None,
        };
        let errors = eval_id_errors(&code, channel.as_ref())?;
        report.items.push(json!({
            "kind": "code",
            "dims": code.dims(),
            "size": code.len(),
            "errors": to_value(&errors)?,
        }));
    } else if has(&v, &["M", "N", "functions"]) {
        let code: ClassicalIdCode = serde_json::from_value(v)?;
        let code = ClassicalIdCode::new(code.m, code.n, code.functions)?;
        let errors = eval_classical_id(&code);
        report.items.push(json!({
            "kind": "classical-code",
            "M": code.m,
            "N": code.n,
            "size": code.len(),
            "errors": to_value(&errors)?,
        }));
    } else if has(&v, &["nodes"]) {
        let s = serde_json::from_value::<StrategyJson>(v)?.to_strategy()?;
        report.items.push(json!({
            "kind": "strategy",
            "n": s.n(),
            "alphabet": s.alphabet(),
            "input_dim": s.input_dim(),
            "nodes": s.levels().iter().map(Vec::len).sum::<usize>(),
        }));
    } else {
        let item = match serde_json::from_value::<ChannelJson>(v) {
            Ok(ChannelJson::Quantum(c)) => {
                let t = c.to_channel()?;
                json!({
                    "kind": "quantum-channel",
                    "d_in": t.d_in(),
                    "d_out": t.d_out(),
                    "kraus": t.kraus().len(),
                    "kraus_residual": t.kraus_residual(),
                    "constant": t.is_constant(1e-9),
                })
            }
            Ok(ChannelJson::Qc(c)) => {
                let w = c.to_channel()?;
                json!({
                    "kind": "qc-channel",
                    "d_in": w.d_in(),
                    "outcomes": w.alphabet_size(),
                    "constant": w.is_constant(1e-9),
                })
            }
            Ok(ChannelJson::Cq(c)) => {
                let w = c.to_channel()?;
                json!({
                    "kind": "cq-channel",
                    "d_out": w.d_out(),
                    "letters": w.alphabet_size(),
                    "letter_entropies": w.letter_entropies(),
                })
            }
            Err(_) => bail!("{} is not a channel, code, strategy or report file", args.path.display()),
        };
        report.items.push(item);
    }
    Ok(report.into())
}
