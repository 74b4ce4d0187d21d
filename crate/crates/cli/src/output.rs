use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{io_error, CliError, CliResult};

pub const SCHEMA: u32 = 1;

/// The versioned JSON document written by every command.
pub fn envelope(command: &str, config: &impl Serialize, seed: u64, result: Value) -> CliResult<Value> {
    let config = serde_json::to_value(config).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(json!({
        "schema": SCHEMA,
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": config,
        "result": result,
    }))
}

pub fn to_value(v: &impl Serialize) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Data(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn write_json(path: &Path, doc: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// Six significant digits, switching to exponent form outside `[1e-3, 1e6)`.
pub fn num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e6).contains(&a) {
        format!("{v:.5e}")
    } else {
        let decimals = (5 - a.log10().floor() as i32).max(0) as usize;
        format!("{v:.decimals$}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_display() {
        assert_eq!(num(13611.69), "13611.7");
        assert_eq!(num(0.0288), "0.0288000");
        assert_eq!(num(1.5e-7), "1.50000e-7");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-2.5), "-2.50000");
    }

    #[test]
    fn envelope_fields() {
        let v = envelope("wvar", &json!({"alpha": 0.05}), 7, json!([1])).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["command"], "wvar");
        assert_eq!(v["seed"], 7);
        assert_eq!(v["config"]["alpha"], 0.05);
    }
}
