//! Report records, CSV metric series and output files.
//!
//! Nothing time-dependent is written, so identical config and seed give
//! byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Schedule, ScenarioConfig};
use crate::Result;

/// A named table with one row per time sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Series {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Header row, then shortest round-trip decimal for every value.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{v:?}").expect("writing to a string");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub eps: Option<f64>,
    pub schedule: Option<Schedule>,
    /// The quantity the verdict is about, next to the bound it is held to.
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, pass: bool, value: f64, bound: f64) -> Self {
        Verdict {
            name: name.to_string(),
            pass,
            eps: None,
            schedule: None,
            value,
            bound,
            detail: String::new(),
        }
    }

    pub fn eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn schedule(mut self, s: Schedule) -> Self {
        self.schedule = Some(s);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    /// `value ≤ bound`.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Verdict::new(name, value <= bound, value, bound)
    }

    /// `value > bound`.
    pub fn above(name: &str, value: f64, bound: f64) -> Self {
        Verdict::new(name, value > bound, value, bound)
    }

    /// One line: `PASS name value <= bound (eps, schedule)`.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {} value={:?} bound={:?}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.bound
        );
        if let Some(e) = self.eps {
            write!(s, " eps={e:?}").expect("writing to a string");
        }
        if let Some(sc) = self.schedule {
            write!(s, " schedule={}x[0,{:?}]", sc.samples, sc.horizon).expect("writing to a string");
        }
        if !self.detail.is_empty() {
            write!(s, " ({})", self.detail).expect("writing to a string");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub run_id: String,
    pub scenario: String,
    pub experiment: String,
    /// SHA-256 of the compact effective-config JSON.
    pub config_hash: String,
    pub seed: u64,
    /// CSV files written next to the report.
    pub series: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    /// Structured results that are not time series.
    pub tables: BTreeMap<String, serde_json::Value>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub config: ScenarioConfig,
    pub report: ScenarioReport,
    pub series: Vec<Series>,
}

pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let compact = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(compact.as_bytes()))
}

impl ScenarioOutput {
    pub fn new(
        config: ScenarioConfig,
        series: Vec<Series>,
        metrics: BTreeMap<String, f64>,
        tables: BTreeMap<String, serde_json::Value>,
        verdicts: Vec<Verdict>,
    ) -> Self {
        let hash = config_hash(&config);
        let report = ScenarioReport {
            run_id: format!("{}-{}-{}", config.name, &hash[..12], config.seed),
            scenario: config.name.clone(),
            experiment: config.experiment.kind().to_string(),
            config_hash: hash,
            seed: config.seed,
            series: series.iter().map(|s| format!("{}.csv", s.name)).collect(),
            metrics,
            tables,
            pass: verdicts.iter().all(|v| v.pass),
            verdicts,
        };
        ScenarioOutput { config, report, series }
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.report.verdicts.iter().find(|v| v.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("report serializes") + "\n"
    }

    /// Writes `effective_config.json`, `report.json` and one CSV per series
    /// into `dir`, returning the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = vec![
            (dir.join("effective_config.json"), self.config.to_json()),
            (dir.join("report.json"), self.report_json()),
        ];
        for s in &self.series {
            files.push((dir.join(format!("{}.csv", s.name)), s.to_csv()));
        }
        for (path, body) in &files {
            fs::write(path, body)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}
