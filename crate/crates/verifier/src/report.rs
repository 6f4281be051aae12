//! Report rows, CSV and JSON emission.
//!
//! CSV columns: `index, family, member, seed, spec_hash, shape, transition, status,
//! assertion, passed, note`, then the command's metric columns in a fixed
//! order. The JSON report carries the same rows plus the full coefficient
//! specs, a summary, and a header; the header's timestamp is the only field
//! that differs between identical runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ratiolab_core::classify::Shape;
use ratiolab_core::CoefficientSet;
use serde::{Deserialize, Serialize};

use crate::config::{FamilyName, SuiteConfig};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// A solver failed or the two solvers disagreed; no assertion was evaluated.
    Quarantined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Position in the report.
    pub index: usize,
    pub family: FamilyName,
    /// Position within the generated family.
    pub member: usize,
    pub seed: u64,
    pub spec_hash: String,
    pub shape: Option<Shape>,
    pub transition: Option<f64>,
    pub status: Status,
    /// Name of the bound asserted on this row, if any.
    pub assertion: Option<String>,
    pub passed: Option<bool>,
    pub note: Option<String>,
    /// Values for the report's metric columns; `None` when not computed.
    pub metrics: Vec<Option<f64>>,
    pub spec: CoefficientSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub n_max: usize,
    pub mesh: usize,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremal {
    pub index: usize,
    pub family: FamilyName,
    pub column: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub instances: usize,
    pub asserted: usize,
    pub passed: usize,
    pub failed: usize,
    pub quarantined: usize,
    /// Largest and smallest value of the report's key metric.
    pub largest: Option<Extremal>,
    pub smallest: Option<Extremal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub header: Header,
    pub config: SuiteConfig,
    pub columns: Vec<String>,
    /// Column summarized by `largest` and `smallest`.
    pub key_metric: Option<String>,
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, config: &SuiteConfig, columns: Vec<String>, key_metric: Option<&str>, rows: Vec<Row>) -> Self {
        let header = Header {
            tool: "ratiolab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            n_max: config.n_max,
            mesh: config.mesh,
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        let mut r = Report {
            header,
            config: config.clone(),
            columns,
            key_metric: key_metric.map(str::to_owned),
            rows,
            summary: Summary::default(),
        };
        r.summary = r.summarize();
        r
    }

    fn summarize(&self) -> Summary {
        let mut s = Summary { instances: self.rows.len(), ..Summary::default() };
        for r in &self.rows {
            if r.status == Status::Quarantined {
                s.quarantined += 1;
            }
            match r.passed {
                Some(true) => {
                    s.asserted += 1;
                    s.passed += 1;
                }
                Some(false) => {
                    s.asserted += 1;
                    s.failed += 1;
                }
                None => {}
            }
        }
        if let Some(col) = self.key_metric.as_ref().and_then(|k| self.columns.iter().position(|c| c == k)) {
            let values: Vec<(&Row, f64)> =
                self.rows.iter().filter_map(|r| r.metrics.get(col).copied().flatten().map(|v| (r, v))).collect();
            let pick = |r: &Row, v: f64| Extremal { index: r.index, family: r.family, column: self.columns[col].clone(), value: v };
            s.largest = values.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|(r, v)| pick(r, *v));
            s.smallest = values.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|(r, v)| pick(r, *v));
        }
        s
    }

    /// Exit status: success iff no asserted bound failed and nothing was quarantined.
    pub fn success(&self) -> bool {
        self.summary.failed == 0 && self.summary.quarantined == 0
    }

    pub fn metric(&self, row: &Row, column: &str) -> Option<f64> {
        self.columns.iter().position(|c| c == column).and_then(|i| row.metrics.get(i).copied().flatten())
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut head: Vec<String> =
            ["index", "family", "member", "seed", "spec_hash", "shape", "transition", "status", "assertion", "passed", "note"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        head.extend(self.columns.iter().cloned());
        out.write_record(&head)?;
        for r in &self.rows {
            let mut rec = vec![
                r.index.to_string(),
                r.family.to_string(),
                r.member.to_string(),
                r.seed.to_string(),
                r.spec_hash.clone(),
                r.shape.map(|s| format!("{s:?}")).unwrap_or_default(),
                opt(r.transition),
                format!("{:?}", r.status).to_lowercase(),
                r.assertion.clone().unwrap_or_default(),
                r.passed.map(|p| p.to_string()).unwrap_or_default(),
                r.note.clone().unwrap_or_default(),
            ];
            rec.extend((0..self.columns.len()).map(|i| opt(r.metrics.get(i).copied().flatten())));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// Writes `<command>.csv` and `<command>.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.header.command));
        let json_path = dir.join(format!("{}.json", self.header.command));
        self.write_csv(BufWriter::new(File::create(&csv_path)?))?;
        let mut j = BufWriter::new(File::create(&json_path)?);
        self.write_json(&mut j)?;
        writeln!(j)?;
        Ok(vec![csv_path, json_path])
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Long-format rows `(index, family, key, value)` for plotting tools.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LongTable {
    pub name: String,
    pub key_columns: Vec<String>,
    pub rows: Vec<(usize, FamilyName, Vec<f64>)>,
}

impl LongTable {
    pub fn new(name: &str, key_columns: &[&str]) -> Self {
        LongTable { name: name.into(), key_columns: key_columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut head = vec!["index".to_string(), "family".to_string()];
        head.extend(self.key_columns.iter().cloned());
        out.write_record(&head)?;
        for (i, f, vals) in &self.rows {
            let mut rec = vec![i.to_string(), f.to_string()];
            rec.extend(vals.iter().map(|v| format!("{v:e}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        self.write_csv(BufWriter::new(File::create(&path)?))?;
        Ok(path)
    }
}
