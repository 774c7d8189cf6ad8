//! Run manifests: what a command was asked to do, written before it starts
//! and completed when it ends.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::io::IoError;

pub const RUN_MANIFEST_FILE: &str = "run.json";
/// The resolved options as a config file, for re-running.
pub const RUN_CONFIG_FILE: &str = "run.conf";

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Every option of the command, defaults included, keyed by flag name.
    pub config: Map<String, Value>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started: String,
    pub finished: Option<String>,
    pub status: String,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Flatten serialized options into `flag-name -> value`. `config` itself is
/// left out and unset options are skipped.
pub fn resolved_config<T: Serialize>(args: &T) -> Map<String, Value> {
    let mut out = Map::new();
    if let Ok(Value::Object(map)) = serde_json::to_value(args) {
        for (k, v) in map {
            if k == "config" || v.is_null() {
                continue;
            }
            out.insert(k.replace('_', "-"), v);
        }
    }
    out
}

fn conf_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(conf_value).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

impl RunManifest {
    pub fn new<T: Serialize>(
        command: &str,
        args: &T,
        seed: Option<u64>,
        inputs: Vec<PathBuf>,
    ) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config: resolved_config(args),
            inputs,
            outputs: Vec::new(),
            started: now(),
            finished: None,
            status: "running".into(),
        }
    }

    /// Write `run.json` and `run.conf` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), IoError> {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        let path = dir.join(RUN_MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| IoError::io(&path, e))?;
        let conf: String = self
            .config
            .iter()
            .filter(|(k, _)| k.as_str() != "out")
            .map(|(k, v)| format!("{k} = {}\n", conf_value(v)))
            .collect();
        let path = dir.join(RUN_CONFIG_FILE);
        std::fs::write(&path, conf).map_err(|e| IoError::io(&path, e))
    }

    pub fn finish(
        &mut self,
        dir: &Path,
        status: &str,
        outputs: Vec<PathBuf>,
    ) -> Result<(), IoError> {
        self.finished = Some(now());
        self.status = status.into();
        self.outputs = outputs;
        self.write(dir)
    }
}
