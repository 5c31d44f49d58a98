use std::fs;

use anyhow::{bail, Context, Result};
use serde::{de::DeserializeOwned, Serialize};
use serde_json::{Map, Value};

use crate::GlobalArgs;

/// Merges the `--config` file with the command's flags (flags win) and the global `--seed`
/// and `--trials`, then deserializes into the command config. Unset flags are ignored.
pub fn resolve<T: DeserializeOwned>(global: &GlobalArgs, flags: &impl Serialize) -> Result<T> {
    let mut merged = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            match serde_json::from_str::<Value>(&text).with_context(|| format!("parsing config {}", path.display()))? {
                Value::Object(m) => m,
                _ => bail!("config {} must hold a JSON object", path.display()),
            }
        }
        None => Map::new(),
    };
    if let Value::Object(m) = serde_json::to_value(flags)? {
        for (k, v) in m {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    if let Some(seed) = global.seed {
        merged.insert("seed".into(), seed.into());
    }
    if let Some(trials) = global.trials {
        merged.insert("trials".into(), trials.into());
    }
    serde_json::from_value(Value::Object(merged)).context("invalid config")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize)]
    struct Flags {
        d: Option<usize>,
    }

    #[derive(Debug, Deserialize, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Conf {
        d: usize,
        lambda: f64,
        seed: u64,
        trials: usize,
    }

    impl Default for Conf {
        fn default() -> Self {
            Self {
                d: 2,
                lambda: 0.5,
                seed: 1,
                trials: 10,
            }
        }
    }

    fn global(config: Option<std::path::PathBuf>) -> GlobalArgs {
        GlobalArgs {
            seed: Some(9),
            trials: None,
            out: None,
            format: None,
            config,
            threads: None,
        }
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"d": 4, "lambda": 0.25, "seed": 3}"#).unwrap();
        let c: Conf = resolve(&global(Some(path.clone())), &Flags { d: Some(8) }).unwrap();
        assert_eq!(
            c,
            Conf {
                d: 8,
                lambda: 0.25,
                seed: 9,
                trials: 10
            }
        );
        let c: Conf = resolve(&global(Some(path)), &Flags { d: None }).unwrap();
        assert_eq!(c.d, 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"dd": 4}"#).unwrap();
        let err = resolve::<Conf>(&global(Some(path)), &Flags { d: None }).unwrap_err();
        assert!(format!("{err:#}").contains("unknown field"));
    }
}
