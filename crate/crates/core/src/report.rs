//! Run reports: a structured JSON document or a flat `key,value` table.
//!
//! Reports contain only simulated quantities, so the same config, seed and
//! overrides always produce byte-identical output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::bus::QosRecord;
use crate::checker::Violation;
use crate::config::{ReportFormat, SimConfig};
use crate::kernel::SimSummary;
use crate::profiling::MetricsReport;
use crate::sim::RunOutcome;

pub const REPORT_SCHEMA: &str = "ahbplus-report/1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report format `{0}` (expected struct or table)")]
    UnknownFormat(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("table row {row}: {reason}")]
    Table { row: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: SimConfig,
    pub overrides: Vec<String>,
    pub summary: SimSummary,
    pub metrics: MetricsReport,
    pub qos: Vec<QosRecord>,
    pub violations: Vec<Violation>,
    pub read_mismatches: u64,
}

impl Report {
    pub fn new(config: &SimConfig, overrides: &[String], outcome: &RunOutcome) -> Self {
        Report {
            schema: REPORT_SCHEMA.to_string(),
            config: config.clone(),
            overrides: overrides.to_vec(),
            summary: outcome.summary,
            metrics: outcome.metrics.clone(),
            qos: outcome.qos.clone(),
            violations: outcome.violations.clone(),
            read_mismatches: outcome.read_mismatches,
        }
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Every leaf of the JSON form as a dotted key, in document order.
    pub fn rows(&self) -> Result<Vec<(String, String)>, ReportError> {
        let mut rows = Vec::new();
        flatten("", &serde_json::to_value(self)?, &mut rows);
        Ok(rows)
    }

    pub fn to_table(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["key", "value"])?;
        for (k, v) in self.rows()? {
            w.write_record([k, v])?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, ReportError> {
        match format {
            ReportFormat::Struct => self.to_json(),
            ReportFormat::Table => self.to_table(),
        }
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Reads a table report back into a key/value map.
pub fn parse_table(text: &str) -> Result<BTreeMap<String, String>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut map = BTreeMap::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(ReportError::Table {
                row: row + 1,
                reason: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        map.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(map)
}
