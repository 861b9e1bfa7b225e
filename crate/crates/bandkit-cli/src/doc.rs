//! Band documents: the plain-text and JSON forms a band travels in on stdin,
//! stdout, and disk.
//!
//! Text form: first non-comment line is the order `n`, followed by `n` lines
//! of `n` space-separated element indices. Lines starting with `#` and blank
//! lines are ignored. JSON form: `{"n": 3, "table": [[...], ...]}` with an
//! optional `"labels"` array.

use bandkit::band::FiniteBand;
use serde::Deserialize;
use serde_json::{json, Value};

/// A band in JSON-recipe position (also used nested inside other recipes).
#[derive(Debug, Clone, Deserialize)]
pub struct JsonBand {
    pub n: usize,
    pub table: Vec<Vec<usize>>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

impl JsonBand {
    pub fn build(&self) -> Result<FiniteBand, String> {
        if self.table.len() != self.n {
            return Err(format!(
                "band document declares n = {} but has {} table rows",
                self.n,
                self.table.len()
            ));
        }
        let band = FiniteBand::validate_table(&self.table).map_err(|e| e.to_string())?;
        match &self.labels {
            Some(ls) => band.with_labels(ls.clone()).map_err(|e| e.to_string()),
            None => Ok(band),
        }
    }
}

/// Parse either document form, deciding by the first non-whitespace byte.
pub fn parse_band(input: &str) -> Result<FiniteBand, String> {
    if input.trim_start().starts_with('{') {
        let doc: JsonBand =
            serde_json::from_str(input).map_err(|e| format!("json band document: {e}"))?;
        doc.build()
    } else {
        parse_text(input)
    }
}

fn parse_text(input: &str) -> Result<FiniteBand, String> {
    let mut order: Option<usize> = None;
    let mut rows: Vec<Vec<usize>> = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match order {
            None => {
                order = Some(line.parse().map_err(|_| {
                    format!("line {lineno}: expected the band order, found {line:?}")
                })?);
            }
            Some(n) => {
                if rows.len() == n {
                    return Err(format!("line {lineno}: trailing content after {n} rows"));
                }
                let mut row = Vec::with_capacity(n);
                for (col, token) in line.split_whitespace().enumerate() {
                    row.push(token.parse().map_err(|_| {
                        format!(
                            "line {lineno}, column {}: expected an element index, found {token:?}",
                            col + 1
                        )
                    })?);
                }
                if row.len() != n {
                    return Err(format!(
                        "line {lineno}: expected {n} entries, found {}",
                        row.len()
                    ));
                }
                rows.push(row);
            }
        }
    }
    let n = order.ok_or("empty input: expected a band document")?;
    if rows.len() != n {
        return Err(format!("expected {n} table rows, found {}", rows.len()));
    }
    FiniteBand::validate_table(&rows).map_err(|e| e.to_string())
}

pub fn render_text(band: &FiniteBand) -> String {
    let n = band.order();
    let mut out = format!("{n}\n");
    for a in 0..n {
        let row: Vec<String> = (0..n).map(|b| band.mul(a, b).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn band_value(band: &FiniteBand) -> Value {
    let n = band.order();
    let table: Vec<Vec<usize>> =
        (0..n).map(|a| (0..n).map(|b| band.mul(a, b)).collect()).collect();
    match band.labels() {
        Some(labels) => json!({ "n": n, "table": table, "labels": labels }),
        None => json!({ "n": n, "table": table }),
    }
}
