//! Report types shared by every experiment: named pass/fail checks carrying the
//! threshold they were judged against, estimates carrying their sample sizes, and
//! plain-text writers for JSON, JSONL, and CSV artifacts.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// A point estimate with a 95% half-width and the sample count behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub half_width: f64,
    pub n: usize,
}

/// One named acceptance check. `observed` is the quantity that was compared
/// against `threshold`; the comparison's direction is explained by `detail`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub threshold: f64,
    pub detail: String,
}

/// Outcome of one experiment run, reproducible from its config and seed base.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatReport {
    pub experiment: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub estimates: Vec<Estimate>,
    pub ks: BTreeMap<String, f64>,
    pub contaminated: usize,
    pub total_samples: usize,
    pub runtime_seconds: f64,
}

impl StatReport {
    pub fn new(experiment: &str) -> StatReport {
        StatReport {
            experiment: experiment.to_string(),
            passed: true,
            checks: Vec::new(),
            estimates: Vec::new(),
            ks: BTreeMap::new(),
            contaminated: 0,
            total_samples: 0,
            runtime_seconds: 0.0,
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, observed: f64, threshold: f64, detail: &str) {
        self.passed &= passed;
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            observed,
            threshold,
            detail: detail.to_string(),
        });
    }

    pub fn estimate(&mut self, name: &str, value: f64, half_width: f64, n: usize) {
        self.estimates.push(Estimate {
            name: name.to_string(),
            value,
            half_width,
            n,
        });
    }

    pub fn find_estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn find_check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<(), HarnessError> {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)
            .map_err(|e| HarnessError::Report(e.to_string()))?;
        Ok(())
    }

    /// One line per check, preceded by a headline, for terminal display.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{}: {} ({} checks, {} samples, {} contaminated, {:.1}s)\n",
            self.experiment,
            if self.passed { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.total_samples,
            self.contaminated,
            self.runtime_seconds,
        );
        for c in &self.checks {
            out.push_str(&format!(
                "  [{}] {}: observed {:.6} vs threshold {:.6} ({})\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.observed,
                c.threshold,
                c.detail,
            ));
        }
        out
    }
}

pub fn load_report<P: AsRef<Path>>(path: P) -> Result<StatReport, HarnessError> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| HarnessError::Report(e.to_string()))
}

/// Writes one JSON document per line.
pub fn write_jsonl<T: Serialize, P: AsRef<Path>>(path: P, items: &[T]) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(File::create(path)?);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| HarnessError::Report(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>, P: AsRef<Path>>(
    path: P,
) -> Result<Vec<T>, HarnessError> {
    let file = File::open(path)?;
    let mut items = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| HarnessError::Report(e.to_string()))?);
    }
    Ok(items)
}

/// Writes a CSV file from a header line and preformatted rows.
pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &str,
    rows: &[String],
) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

pub fn ensure_dir<P: AsRef<Path>>(path: P) -> Result<(), HarnessError> {
    fs::create_dir_all(path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passed_tracks_every_check() {
        let mut r = StatReport::new("demo");
        r.check("a", true, 0.1, 0.2, "below");
        assert!(r.passed);
        r.check("b", false, 0.3, 0.2, "below");
        assert!(!r.passed);
        assert!(r.find_check("b").is_some());
        assert!(r.summary().contains("FAIL"));
    }

    #[test]
    fn report_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let mut r = StatReport::new("demo");
        r.estimate("m", 1.5, 0.2, 40);
        r.ks.insert("law".into(), 0.03);
        r.write_json(&path).unwrap();
        let back = load_report(&path).unwrap();
        assert_eq!(back.experiment, "demo");
        assert_eq!(back.estimates[0].n, 40);
        assert_eq!(back.ks["law"], 0.03);
    }

    #[test]
    fn jsonl_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        let items: Vec<Estimate> = (0..3)
            .map(|i| Estimate {
                name: format!("e{i}"),
                value: i as f64,
                half_width: 0.0,
                n: i,
            })
            .collect();
        write_jsonl(&path, &items).unwrap();
        let back: Vec<Estimate> = read_jsonl(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[2].name, "e2");
    }

    #[test]
    fn csv_writer_emits_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, "a,b", &["1,2".into(), "3,4".into()]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n1,2\n3,4\n");
    }
}
