//! Report tables, metadata and their CSV/JSON files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentKind, SweepAxis};
use crate::units::{linear_to_db, watts_to_dbm};
use crate::{Error, Result};

/// Outcome of one sweep point or trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Infeasible,
    SolverFail,
}

impl Status {
    pub fn of(err: &Error) -> Status {
        match err {
            Error::Infeasible { .. } => Status::Infeasible,
            _ => Status::SolverFail,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Infeasible => "infeasible",
            Status::SolverFail => "solver-fail",
        }
    }
}

/// How a metric is averaged and printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Printed as is with a standard deviation column.
    Plain,
    /// Power in watts averaged linearly, printed in dBm with a relative spread.
    Dbm,
    /// Linear ratio averaged linearly, printed in dB with a relative spread.
    Db,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metric {
    pub name: &'static str,
    pub unit: Unit,
}

impl Metric {
    pub const fn new(name: &'static str, unit: Unit) -> Self {
        Metric { name, unit }
    }

    /// Value in report units.
    pub fn display(&self, v: f64) -> f64 {
        match self.unit {
            Unit::Plain => v,
            Unit::Dbm => watts_to_dbm(v),
            Unit::Db => linear_to_db(v),
        }
    }

    fn columns(&self) -> [String; 2] {
        match self.unit {
            Unit::Plain => [self.name.to_string(), format!("{}_std", self.name)],
            Unit::Dbm | Unit::Db => [self.name.to_string(), format!("{}_rel_std", self.name)],
        }
    }
}

/// Mean and standard deviation over the successful trials, in raw units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        if values.is_empty() {
            return Stats { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stats { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub sweep_value: f64,
    pub stats: Vec<Stats>,
    pub trials_ok: usize,
    /// `ok` only when every trial succeeded; otherwise the most frequent failure.
    pub status: Status,
}

/// A named CSV table of preformatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub kind: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub trials: usize,
    pub sweep_axis: &'static str,
    pub rows: usize,
    pub crate_version: &'static str,
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub axis: SweepAxis,
    pub metrics: Vec<Metric>,
    pub rows: Vec<ReportRow>,
    /// Per-trial values, pattern grids or markers, depending on the kind.
    pub plot: Table,
    pub metadata: Metadata,
}

impl ExperimentReport {
    fn metric_index(&self, name: &str) -> Option<usize> {
        self.metrics.iter().position(|m| m.name == name)
    }

    /// Row means of a metric in report units (dBm, dB or plain).
    pub fn means(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.metric_index(name)?;
        let m = self.metrics[i];
        Some(self.rows.iter().map(|r| m.display(r.stats[i].mean)).collect())
    }

    /// Row means of a metric in raw units (watts, linear or plain).
    pub fn raw_means(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.metric_index(name)?;
        Some(self.rows.iter().map(|r| r.stats[i].mean).collect())
    }

    pub fn sweep(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sweep_value).collect()
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.status == Status::Ok)
    }

    pub fn table(&self) -> Table {
        let mut columns = vec![self.axis.column().to_string()];
        for m in &self.metrics {
            columns.extend(m.columns());
        }
        columns.push("trials_ok".into());
        columns.push("status".into());
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![fmt_num(r.sweep_value)];
                for (m, s) in self.metrics.iter().zip(&r.stats) {
                    cells.push(fmt_num(m.display(s.mean)));
                    cells.push(fmt_num(match m.unit {
                        Unit::Plain => s.std,
                        Unit::Dbm | Unit::Db => s.std / s.mean,
                    }));
                }
                cells.push(r.trials_ok.to_string());
                cells.push(r.status.name().into());
                cells
            })
            .collect();
        Table { name: self.kind.name().to_string(), columns, rows }
    }

    pub fn report_csv(&self) -> Result<String> {
        self.table().to_csv()
    }

    pub fn metadata_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.metadata)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<kind>.csv`, the plot table and `<kind>.meta.json` into `dir`,
    /// returning the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let name = self.kind.name();
        let files = [
            (dir.join(format!("{name}.csv")), self.report_csv()?),
            (dir.join(format!("{}.csv", self.plot.name)), self.plot.to_csv()?),
            (dir.join(format!("{name}.meta.json")), self.metadata_json()?),
        ];
        let mut out = Vec::with_capacity(files.len());
        for (path, text) in files {
            fs::write(&path, text)?;
            out.push(path);
        }
        Ok(out)
    }
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV cells are UTF-8"))
    }
}

/// Fixed-point for moderate magnitudes, scientific otherwise, with trailing
/// zeros removed so that sweep values print as typed.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-4..1e9).contains(&a) {
        let s = format!("{v:.10}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    } else {
        format!("{v:.10e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(12.3), "12.3");
        assert_eq!(fmt_num(5.0), "5");
        assert_eq!(fmt_num(-0.25), "-0.25");
        assert_eq!(fmt_num(1.5e-12), "1.5000000000e-12");
        assert_eq!(fmt_num(f64::NAN), "NaN");
        assert_eq!(fmt_num(-1e-20 * 0.0), "0");
    }

    #[test]
    fn stats() {
        let s = Stats::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
        assert!(Stats::of(&[]).mean.is_nan());
    }

    #[test]
    fn csv_uses_lf() {
        let t = Table { name: "t".into(), columns: vec!["a".into(), "b".into()], rows: vec![vec!["1".into(), "x,y".into()]] };
        assert_eq!(t.to_csv().unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
