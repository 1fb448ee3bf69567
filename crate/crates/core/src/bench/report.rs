//! Report assembly and emission: CSV rows, a JSON summary, and SVG plots.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::svg;

/// One metric observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub axis: String,
    pub setting: String,
    pub metric: String,
    pub dimension: String,
    pub seed: u64,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV serialization with a fixed header; floats use the shortest
    /// round-trip representation so identical reports are byte-identical.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "axis", "setting", "metric", "dimension", "seed", "value", "ci_low", "ci_high",
        ])
        .map_err(|e| Error::Format(format!("csv: {e}")))?;
        for r in &self.rows {
            w.write_record([
                r.axis.as_str(),
                r.setting.as_str(),
                r.metric.as_str(),
                r.dimension.as_str(),
                &r.seed.to_string(),
                &format!("{}", r.value),
                &r.ci_low.map(|v| format!("{v}")).unwrap_or_default(),
                &r.ci_high.map(|v| format!("{v}")).unwrap_or_default(),
            ])
            .map_err(|e| Error::Format(format!("csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Format(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(format!("csv utf8: {e}")))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for record in reader.records() {
            let record = record.map_err(|e| Error::Format(format!("csv: {e}")))?;
            let get = |i: usize| record.get(i).unwrap_or("").to_string();
            let opt = |i: usize| -> Result<Option<f64>> {
                let s = record.get(i).unwrap_or("");
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse()
                        .map(Some)
                        .map_err(|e| Error::Format(format!("csv float: {e}")))
                }
            };
            rows.push(ReportRow {
                axis: get(0),
                setting: get(1),
                metric: get(2),
                dimension: get(3),
                seed: record
                    .get(4)
                    .unwrap_or("0")
                    .parse()
                    .map_err(|e| Error::Format(format!("csv seed: {e}")))?,
                value: record
                    .get(5)
                    .unwrap_or("")
                    .parse()
                    .map_err(|e| Error::Format(format!("csv value: {e}")))?,
                ci_low: opt(6)?,
                ci_high: opt(7)?,
            });
        }
        Ok(Report { rows })
    }

    /// Mean value per (setting, metric, dimension) across seeds, settings in
    /// first-appearance order.
    pub fn seed_means(&self) -> Vec<(String, String, f64)> {
        let mut order: Vec<(String, String)> = Vec::new();
        let mut sums: std::collections::BTreeMap<(String, String), (f64, usize)> =
            Default::default();
        for r in &self.rows {
            let series = r.setting.clone();
            let category = if r.dimension.is_empty() {
                r.metric.clone()
            } else {
                format!("{}:{}", r.metric, r.dimension)
            };
            let key = (series.clone(), category.clone());
            if !sums.contains_key(&key) {
                order.push(key.clone());
            }
            let e = sums.entry(key).or_insert((0.0, 0));
            e.0 += r.value;
            e.1 += 1;
        }
        order
            .into_iter()
            .map(|key| {
                let (sum, n) = sums[&key];
                (key.0, key.1, sum / n as f64)
            })
            .collect()
    }
}

/// JSON summary written alongside the CSV.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportSummary {
    pub config_hash: String,
    pub n_rows: usize,
    pub metrics: Vec<String>,
    pub settings: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// Emits CSV + JSON summary + an SVG plot (one series per grid setting).
/// All three outputs are deterministic functions of the report and hash.
pub fn emit_report(
    report: &Report,
    csv_path: &Path,
    json_path: &Path,
    svg_path: &Path,
    config_hash: &str,
) -> Result<()> {
    if report.is_empty() {
        return Err(Error::Input("refusing to emit an empty report".into()));
    }
    let csv_text = report.to_csv_string()?;
    fs::write(csv_path, &csv_text).map_err(|e| Error::io(csv_path.display().to_string(), e))?;

    let metrics: BTreeSet<String> = report.rows.iter().map(|r| r.metric.clone()).collect();
    let settings: BTreeSet<String> = report.rows.iter().map(|r| r.setting.clone()).collect();
    let summary = ReportSummary {
        config_hash: config_hash.to_string(),
        n_rows: report.rows.len(),
        metrics: metrics.into_iter().collect(),
        settings: settings.into_iter().collect(),
        rows: report.rows.clone(),
    };
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(json_path, json).map_err(|e| Error::io(json_path.display().to_string(), e))?;

    let svg_text = svg::profile_plot(report, config_hash)?;
    fs::write(svg_path, svg_text).map_err(|e| Error::io(svg_path.display().to_string(), e))?;
    Ok(())
}
