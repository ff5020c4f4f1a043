//! Experiment configuration files: a JSON object with the experiment fields
//! and `"schema_version": 1`.

use std::path::Path;

use serde_json::{Map, Value};
use tvtrend_core::experiments::ExperimentConfig;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u64 = 1;

pub fn parse_config(text: &str, source: &str) -> Result<ExperimentConfig> {
    let input = |line: usize, message: String| CliError::Input {
        source_name: source.to_string(),
        line,
        message,
    };
    let value: Value = serde_json::from_str(text).map_err(|e| input(e.line(), e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(input(1, "expected a JSON object".into()));
    };
    match map.remove("schema_version") {
        Some(Value::Number(v)) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(other) => {
            return Err(CliError::Usage(format!(
                "{source}: unsupported schema_version {other}; expected {SCHEMA_VERSION}"
            )))
        }
        None => {
            return Err(CliError::Usage(format!(
                "{source}: missing schema_version (expected {SCHEMA_VERSION})"
            )))
        }
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(Value::Object(map)).map_err(|e| input(1, e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(&name, e))?;
    parse_config(&text, &name)
}

pub fn config_to_json(cfg: &ExperimentConfig) -> String {
    let mut map = Map::new();
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    if let Value::Object(fields) = serde_json::to_value(cfg).expect("config serializes") {
        map.extend(fields);
    }
    serde_json::to_string_pretty(&Value::Object(map)).expect("json")
}
