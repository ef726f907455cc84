//! Experiment configuration: an optional `key = value` file overlaid by
//! command-line flags.

use std::path::Path;
use std::str::FromStr;

use lsit::io::KeyValues;

use crate::error::{config, CliResult};

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "window",
    "base_per_class",
    "split",
    "classes",
    "pgm_per_class",
    "variances",
    "variance",
    "eval_split",
    "limit",
    "method",
    "kernel",
    "model",
    "arch",
    "epochs",
    "batch",
    "lr",
    "patience",
    "max_train",
    "max_val",
    "input_size",
    "elm_hidden",
    "elm_c",
    "elm_samples",
    "elm_chunk",
    "exclude",
    "new_class",
    "count",
    "denoiser",
    "methods",
    "cnn",
    "elm",
    "panels",
];

/// Resolved settings. Flags win over the file; both are checked against
/// [`KNOWN_KEYS`].
#[derive(Clone, Debug, Default)]
pub struct Settings {
    kv: KeyValues,
}

impl Settings {
    pub fn resolve(file: Option<&Path>, flags: &[(&str, Option<String>)]) -> CliResult<Self> {
        let mut kv = match file {
            Some(p) => KeyValues::load(p).map_err(|e| config(format!("{}: {e}", p.display())))?,
            None => KeyValues::new(),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !KNOWN_KEYS.contains(k)) {
            return Err(config(format!("unknown key `{k}`")));
        }
        for (k, v) in flags {
            debug_assert!(KNOWN_KEYS.contains(k), "flag `{k}` missing from KNOWN_KEYS");
            if let Some(v) = v {
                kv.set(k, v);
            }
        }
        Ok(Self { kv })
    }

    pub fn key_values(&self) -> &KeyValues {
        &self.kv
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.kv
            .get(key)
            .map(|v| v.parse().map_err(|_| config(format!("cannot parse `{key} = {v}`"))))
            .transpose()
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> CliResult<T> {
        self.get(key)?.ok_or_else(|| config(format!("`{key}` is required")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        self.kv.list(key).map_err(|e| config(e.to_string()))
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.require("seed")
    }

    /// Records a derived value so the run manifest shows what was used.
    pub fn fill(&mut self, key: &str, value: impl ToString) {
        if self.kv.get(key).is_none() {
            self.kv.set(key, value);
        }
    }
}
