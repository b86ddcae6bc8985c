//! The on-disk design format.

use std::path::Path;

use serde::{Deserialize, Serialize};
use trendopt_core::{DesignArray, VarianceComponents};

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

/// A design with the parameters it was built for.
///
/// `cells` holds `k` rows of `b` labels in `1..=v`; column `j` is block `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDocument {
    pub schema_version: String,
    pub v: usize,
    pub b: usize,
    pub k: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_components: Option<VarianceComponents>,
    pub order: Vec<usize>,
    pub cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<serde_json::Value>,
}

impl DesignDocument {
    /// Checks the schema version and that the arrays match `(v, b, k)`.
    pub fn validate(&self) -> Result<DesignArray, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version '{}', expected '{SCHEMA_VERSION}'",
                self.schema_version
            )));
        }
        if self.cells.len() != self.k {
            return Err(CliError::Input(format!(
                "cells has {} rows, k={}",
                self.cells.len(),
                self.k
            )));
        }
        if let Some(row) = self.cells.iter().find(|r| r.len() != self.b) {
            return Err(CliError::Input(format!(
                "cells row has {} entries, b={}",
                row.len(),
                self.b
            )));
        }
        if self.order.len() != self.k {
            return Err(CliError::Input(format!(
                "order has {} entries, k={}",
                self.order.len(),
                self.k
            )));
        }
        if let Some(&bad) = self.order.iter().find(|&&x| x == 0 || x > self.v) {
            return Err(CliError::Input(format!(
                "order label {bad} outside 1..={}",
                self.v
            )));
        }
        Ok(DesignArray::from_rows(self.v, self.cells.clone())?)
    }
}

/// A design read from disk, with lambdas when the file carries them.
#[derive(Debug, Clone)]
pub struct LoadedDesign {
    pub design: DesignArray,
    pub lambdas: Option<(f64, f64)>,
}

/// Reads a design document (JSON) or bare cells (`.csv`, `k` rows of `b`).
pub fn load_design(path: &Path, v: Option<usize>) -> Result<LoadedDesign, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let rows = parse_cells_csv(&text)?;
        let max_label = rows.iter().flatten().copied().max().unwrap_or(0);
        let v = v.unwrap_or(max_label);
        return Ok(LoadedDesign {
            design: DesignArray::from_rows(v, rows)?,
            lambdas: None,
        });
    }
    let doc: DesignDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Some(v) = v {
        if v != doc.v {
            return Err(CliError::Input(format!(
                "--v {v} disagrees with the document's v={}",
                doc.v
            )));
        }
    }
    Ok(LoadedDesign {
        design: doc.validate()?,
        lambdas: Some((doc.lambda0, doc.lambda1)),
    })
}

fn parse_cells_csv(text: &str) -> Result<Vec<Vec<usize>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Input(format!("bad CSV: {e}")))?;
        let row = rec
            .iter()
            .map(|c| {
                c.parse::<usize>()
                    .map_err(|_| CliError::Input(format!("bad label '{c}' in CSV")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}
