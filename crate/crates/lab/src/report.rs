//! Command output: human summary lines, a machine key=value summary and an
//! optional CSV table.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{LabError, LabResult};

pub const CSV_BANNER: &str = "# nls-inflation-lab v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; non-numeric cells become NaN.
    pub fn values(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(i) => self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect(),
            None => Vec::new(),
        }
    }

    /// CSV text: banner, optional timestamp comment, header, rows.
    pub fn to_csv(&self, timestamp: Option<u64>) -> LabResult<String> {
        let mut out = String::new();
        writeln!(out, "{CSV_BANNER}").expect("writing to a String");
        if let Some(ts) = timestamp {
            writeln!(out, "# generated unix={ts}").expect("writing to a String");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(|e| LabError::Config(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| LabError::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Config(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(out)
    }

    /// Parses CSV produced by [`to_csv`](Self::to_csv); `#` lines are skipped.
    pub fn from_csv(text: &str) -> LabResult<Self> {
        let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let columns = r.headers().map_err(|e| LabError::Config(e.to_string()))?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(String::from).collect()).map_err(|e| LabError::Config(e.to_string())))
            .collect::<LabResult<_>>()?;
        Ok(Self { columns, rows })
    }
}

/// Shortest round-trip formatting, so identical runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub lines: Vec<String>,
    pub summary: Vec<(String, String)>,
    pub table: Option<Table>,
    pub verdict: Verdict,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self { command, lines: Vec::new(), summary: Vec::new(), table: None, verdict: Verdict::Pass }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn kv(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Records a failed check; the first failure is kept as the verdict.
    pub fn fail(&mut self, why: impl Into<String>) {
        let why = why.into();
        self.lines.push(format!("FAIL: {why}"));
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Fail(why);
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Single-line `key=value` summary.
    pub fn summary_line(&self) -> String {
        let mut parts = vec![format!("command={}", self.command)];
        parts.push(format!("status={}", if self.passed() { "pass" } else { "fail" }));
        parts.extend(self.summary.iter().map(|(k, v)| format!("{k}={v}")));
        parts.join(" ")
    }

    pub fn write_csv(&self, path: &Path, timestamp: bool) -> LabResult<()> {
        let table = self
            .table
            .as_ref()
            .ok_or_else(|| LabError::Config(format!("command '{}' produces no table", self.command)))?;
        let ts = timestamp.then(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
        });
        let text = table.to_csv(ts)?;
        let mut file = std::fs::File::create(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        file.write_all(text.as_bytes()).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    /// Converts a failed verdict into the check-failure error.
    pub fn into_result(self) -> LabResult<Self> {
        match &self.verdict {
            Verdict::Pass => Ok(self),
            Verdict::Fail(why) => Err(LabError::Check(why.clone())),
        }
    }
}
