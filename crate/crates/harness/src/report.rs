//! Report emission as an aligned text table, CSV or JSON.
//!
//! Column order is fixed per row type. Floats are written in their shortest
//! round-trip form in CSV and JSON so files read back bit-exactly.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::eval::{CurvePoint, ReportRow, ScalingRow, SwitchRow, TopKRow, WinLoss};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(HarnessError::Encode(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Table => "table",
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// A row type with a fixed column layout.
pub trait Tabular: Serialize {
    const COLUMNS: &'static [&'static str];

    /// Cell values in `COLUMNS` order; missing values are empty strings.
    fn cells(&self) -> Vec<String>;
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Tabular for ReportRow {
    const COLUMNS: &'static [&'static str] = &[
        "method",
        "grouping",
        "horizon_class",
        "panels",
        "configs",
        "crps",
        "mase",
        "mase_panels",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.grouping.clone(),
            self.horizon_class.clone(),
            self.panels.to_string(),
            self.configs.to_string(),
            self.crps.to_string(),
            opt(self.mase),
            self.mase_panels.to_string(),
        ]
    }
}

impl Tabular for ScalingRow {
    const COLUMNS: &'static [&'static str] = &[
        "pool_size",
        "models",
        "synapse_crps",
        "synapse_mase",
        "best_model",
        "best_crps",
        "best_mase",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.pool_size.to_string(),
            self.models.join(";"),
            self.synapse_crps.to_string(),
            opt(self.synapse_mase),
            self.best_model.clone(),
            self.best_crps.to_string(),
            opt(self.best_mase),
        ]
    }
}

impl Tabular for WinLoss {
    const COLUMNS: &'static [&'static str] =
        &["metric", "method_a", "method_b", "wins", "losses", "ties"];

    fn cells(&self) -> Vec<String> {
        vec![
            self.metric.clone(),
            self.method_a.clone(),
            self.method_b.clone(),
            self.wins.to_string(),
            self.losses.to_string(),
            self.ties.to_string(),
        ]
    }
}

impl Tabular for CurvePoint {
    const COLUMNS: &'static [&'static str] = &["method", "horizon_class", "step", "panels", "crps"];

    fn cells(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.horizon_class.clone(),
            self.step.to_string(),
            self.panels.to_string(),
            self.crps.to_string(),
        ]
    }
}

impl Tabular for TopKRow {
    const COLUMNS: &'static [&'static str] = &[
        "k",
        "synapse",
        "median",
        "synapse_by_domain",
        "median_by_domain",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.synapse.to_string(),
            self.median.to_string(),
            self.synapse_by_domain.to_string(),
            self.median_by_domain.to_string(),
        ]
    }
}

impl Tabular for SwitchRow {
    const COLUMNS: &'static [&'static str] =
        &["domain", "horizon_class", "panels", "switch_percent"];

    fn cells(&self) -> Vec<String> {
        vec![
            self.domain.clone(),
            self.horizon_class.clone(),
            self.panels.to_string(),
            self.switch_percent.to_string(),
        ]
    }
}

fn encode_err(e: impl fmt::Display) -> HarnessError {
    HarnessError::Encode(e.to_string())
}

/// Render rows in the requested format.
pub fn render<T: Tabular>(rows: &[T], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(T::COLUMNS).map_err(encode_err)?;
            for r in rows {
                w.write_record(r.cells()).map_err(encode_err)?;
            }
            let bytes = w.into_inner().map_err(encode_err)?;
            String::from_utf8(bytes).map_err(encode_err)
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(encode_err)?;
            s.push('\n');
            Ok(s)
        }
        Format::Table => Ok(render_table(rows)),
    }
}

fn table_cell(s: String) -> String {
    match s.parse::<f64>() {
        Ok(v) if s.contains('.') || s.contains('e') => format!("{v:.6}"),
        _ if s.is_empty() => "-".to_string(),
        _ => s,
    }
}

fn render_table<T: Tabular>(rows: &[T]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.cells().into_iter().map(table_cell).collect())
        .collect();
    let mut widths: Vec<usize> = T::COLUMNS.iter().map(|c| c.len()).collect();
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(T::COLUMNS.to_vec());
    for row in &body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

/// Write rows to `out`, or to stdout when `out` is `None`.
pub fn emit_report<T: Tabular>(rows: &[T], format: Format, out: Option<&Path>) -> Result<()> {
    let text = render(rows, format)?;
    match out {
        Some(path) => fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}

/// Read report rows back from CSV text produced by [`render`].
pub fn read_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(encode_err)?.clone();
    if header.iter().ne(ReportRow::COLUMNS.iter().copied()) {
        return Err(HarnessError::Encode(format!(
            "unexpected header {header:?}"
        )));
    }
    let num = |s: &str| s.parse::<f64>().map_err(encode_err);
    let int = |s: &str| s.parse::<usize>().map_err(encode_err);
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(encode_err)?;
            Ok(ReportRow {
                method: rec[0].to_string(),
                grouping: rec[1].to_string(),
                horizon_class: rec[2].to_string(),
                panels: int(&rec[3])?,
                configs: int(&rec[4])?,
                crps: num(&rec[5])?,
                mase: if rec[6].is_empty() {
                    None
                } else {
                    Some(num(&rec[6])?)
                },
                mase_panels: int(&rec[7])?,
            })
        })
        .collect()
}
