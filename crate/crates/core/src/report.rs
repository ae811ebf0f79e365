//! Report primitives shared by the command-line front end: summary lines
//! judged against configured intervals, and plain CSV tables.
//!
//! All numbers are rendered with Rust's shortest-round-trip float
//! formatting, so equal values produce identical bytes — the whole report
//! layer is deterministic given deterministic inputs.

use std::fmt;

/// One `NAME value threshold PASS|FAIL` line of `summary.txt`.
///
/// A line without a threshold is recorded only: it prints `-` in the
/// threshold column and always passes.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub name: String,
    pub value: f64,
    pub threshold: Option<(f64, f64)>,
}

impl SummaryLine {
    pub fn new(name: impl Into<String>, value: f64, threshold: Option<(f64, f64)>) -> Self {
        SummaryLine {
            name: name.into(),
            value,
            threshold,
        }
    }

    /// Inside the closed interval. A NaN value fails any threshold.
    pub fn pass(&self) -> bool {
        match self.threshold {
            Some((lo, hi)) => self.value >= lo && self.value <= hi,
            None => true,
        }
    }
}

impl fmt::Display for SummaryLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        match self.threshold {
            Some((lo, hi)) => write!(f, "{} {} [{},{}] {}", self.name, self.value, lo, hi, verdict),
            None => write!(f, "{} {} - {}", self.name, self.value, verdict),
        }
    }
}

/// Render the whole summary; an empty check list is an empty file.
pub fn render_summary(lines: &[SummaryLine]) -> String {
    let mut s = String::new();
    for line in lines {
        s.push_str(&line.to_string());
        s.push('\n');
    }
    s
}

/// A CSV table with a fixed header row.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match header width"
        );
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Shortest-round-trip rendering of a float for CSV cells.
pub fn num(x: f64) -> String {
    x.to_string()
}
