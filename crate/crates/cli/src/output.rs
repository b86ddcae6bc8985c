use serde_json::{Map, Value};

use crate::{CliError, Format};

/// Significant digits kept for derived floating-point values in JSON.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Keys whose values are user inputs and are written at full precision.
const INPUT_KEYS: [&str; 4] = ["lambda0", "lambda1", "variance_components", "columns"];

/// A command result in both output shapes.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    pub csv: Vec<Vec<String>>,
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let y: f64 = s.parse().expect("formatted float parses");
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

/// Rounds every float outside the input keys to [`SIGNIFICANT_DIGITS`].
pub fn round_derived(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_derived).collect()),
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| {
                    let v = if INPUT_KEYS.contains(&k.as_str()) {
                        v
                    } else {
                        round_derived(v)
                    };
                    (k, v)
                })
                .collect::<Map<String, Value>>(),
        ),
        other => other,
    }
}

/// Formats a float for CSV cells with the same precision as JSON.
pub fn fmt_f64(x: f64) -> String {
    format!("{}", round_sig(x))
}

pub fn render(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let v = round_derived(report.json.clone());
            let mut s = serde_json::to_string_pretty(&v)
                .map_err(|e| CliError::Io(format!("cannot encode JSON: {e}")))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .flexible(true)
                .from_writer(Vec::new());
            for rec in &report.csv {
                w.write_record(rec)
                    .map_err(|e| CliError::Io(format!("cannot encode CSV: {e}")))?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Io(format!("cannot encode CSV: {e}")))?;
            String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// `key,value` records for flat reports.
pub fn key_values<I, K, V>(pairs: I) -> Vec<Vec<String>>
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<String>,
{
    let mut out = vec![vec!["key".to_string(), "value".to_string()]];
    out.extend(pairs.into_iter().map(|(k, v)| vec![k.into(), v.into()]));
    out
}

pub fn join_labels(labels: &[usize]) -> String {
    labels
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
