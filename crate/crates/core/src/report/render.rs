use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::format::sig12;

use super::ConsistencyReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Csv,
    #[default]
    Structured,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "structured" | "json" => Ok(Self::Structured),
            other => Err(Error::Parse(format!("unknown output format `{other}`"))),
        }
    }
}

/// Rounds every floating-point number in place to 12 significant digits.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| sig12(x).parse::<f64>().ok()).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Number(n) => out.push((prefix.to_string(), n.as_f64().map(sig12).unwrap_or_else(|| n.to_string()))),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => out.push((prefix.to_string(), String::new())),
    }
}

/// `field,value` lines with dotted paths for nested fields.
pub fn to_csv_rows(value: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    let mut s = String::from("field,value\n");
    for (k, v) in rows {
        s.push_str(&k);
        s.push(',');
        s.push_str(&v);
        s.push('\n');
    }
    s
}

pub fn write_report<T: Serialize, W: Write>(report: &T, format: OutputFormat, mut out: W) -> Result<()> {
    let mut value = serde_json::to_value(report)?;
    match format {
        OutputFormat::Structured => {
            round_json(&mut value);
            writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
        }
        OutputFormat::Csv => write!(out, "{}", to_csv_rows(&value))?,
    }
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

impl ConsistencyReport {
    /// One line per strike.
    pub fn csv_table(&self) -> String {
        let mut s = String::from("strike,inverse_strike,original_vol,duality_vol,mapped_vol,mc_vol,mc_std_error,mc_z_score\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                sig12(r.strike),
                sig12(r.inverse_strike),
                sig12(r.original_vol),
                sig12(r.duality_vol),
                sig12(r.mapped_vol),
                opt(r.mc_vol),
                opt(r.mc_std_error),
                opt(r.mc_z_score),
            ));
        }
        s
    }
}
