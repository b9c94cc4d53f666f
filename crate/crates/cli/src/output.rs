//! Deterministic table writing: CSV at 17 significant digits (lossless
//! f64 round trip), JSON rows, and the sidecar carrying the config hash
//! and unit-restoration factors.

use crate::config::{FormatConfig, RunConfig};
use serde_json::{json, Value};
use slabrad::model::SlabParams;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

pub fn num(x: f64) -> Value {
    // Serialized through format! for CSV; kept as f64 in JSON.
    json!(x)
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn value_to_csv(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) => fmt_f64(x),
            None => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

pub fn render_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(value_to_csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(table: &Table, meta: &Value) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            for (c, v) in table.columns.iter().zip(row) {
                obj.insert(c.clone(), v.clone());
            }
            Value::Object(obj)
        })
        .collect();
    let doc = json!({ "meta": meta, "rows": rows });
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Unit-restoration factors: numeric when physical scales were supplied,
/// otherwise the defining expressions.
pub fn units_block(params: &SlabParams) -> Value {
    json!({
        "time": "1/Omega",
        "length": "c/Omega",
        "frequency": "Omega",
        "field_unit_definition": "E0 = sqrt(2 pi eta hbar Omega / (c A))",
        "flux_unit_definition": "S0 = eta hbar Omega / A",
        "E0": params.field_unit(),
        "S0": params.flux_unit(),
        "omega_rad_per_s": params.physical.as_ref().map(|s| s.omega),
    })
}

pub fn meta_block(ctx_hash: &str, command: &str, config: &RunConfig, extra: Value) -> Value {
    let params = config.slab_params().ok();
    json!({
        "command": command,
        "config_hash": ctx_hash,
        "n_layers": config.params.n_layers,
        "delta0": params.as_ref().map(|p| p.delta0),
        "g": params.as_ref().map(|p| p.g),
        "units": params.as_ref().map(units_block),
        "extra": extra,
    })
}

/// Write the table (and sidecar when a path is given). With no path the
/// primary payload goes to stdout and the sidecar is skipped.
pub fn emit(
    table: &Table,
    meta: &Value,
    format: FormatConfig,
    path: Option<&Path>,
) -> Result<(), String> {
    let payload = match format {
        FormatConfig::Csv => render_csv(table),
        FormatConfig::Json => render_json(table, meta),
    };
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes()).map_err(|e| e.to_string())?;
            Ok(())
        }
        Some(p) => {
            std::fs::write(p, payload).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
            if format == FormatConfig::Csv {
                let side = p.with_extension(format!(
                    "{}.meta.json",
                    p.extension().and_then(|e| e.to_str()).unwrap_or("out")
                ));
                std::fs::write(&side, serde_json::to_string_pretty(meta).expect("meta"))
                    .map_err(|e| format!("cannot write {}: {e}", side.display()))?;
            }
            Ok(())
        }
    }
}
