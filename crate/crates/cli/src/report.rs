//! Structured reports and their text, CSV and JSON renderings.

use std::fmt::Write as _;

use cyclohom::complex::{Certificate, StabilizationPolicy, Stabilized};
use cyclohom::cyclic::RelationReport;
use serde::Serialize;

/// Version of the JSON layout.
pub const SCHEMA: u32 = 1;

/// One dimension entry with its evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "evidence", rename_all = "snake_case")]
pub enum Entry {
    /// Homology of a single finite complex.
    Exact { dim: usize },
    /// Stabilized tower; `certificate` indexes [`Report::certificates`].
    Certified { dim: usize, certificate: usize },
    /// No certificate within the window.
    Bounds { lower: usize, upper: usize },
}

impl Entry {
    pub fn dim(&self) -> Option<usize> {
        match *self {
            Entry::Exact { dim } | Entry::Certified { dim, .. } => Some(dim),
            Entry::Bounds { .. } => None,
        }
    }

    fn text(&self) -> String {
        match *self {
            Entry::Exact { dim } => dim.to_string(),
            Entry::Certified { dim, certificate } => format!("{dim}#{certificate}"),
            Entry::Bounds { lower, upper } => format!("[{lower},{upper}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Row {
    pub label: String,
    pub entries: Vec<Entry>,
}

/// A table of dimensions: one row per theory or object, one column per
/// degree (or per column label).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Table { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn degrees(name: impl Into<String>, lo: i64, hi: i64) -> Self {
        Table::new(name, (lo..=hi).map(|n| n.to_string()).collect())
    }

    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// A needed quantity did not stabilize in the window.
    Undetermined,
}

/// A named invariant check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    /// Number of elementary identities or comparisons tested.
    pub checked: usize,
    pub detail: Vec<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NotStabilized,
    ValidationFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotStabilized => 2,
            Status::ValidationFailure => 3,
        }
    }
}

/// Resolved settings echoed into the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Config {
    pub algebra: Option<String>,
    pub p: Option<u32>,
    pub degrees: Option<(i64, i64)>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub policy: StabilizationPolicy,
    pub seed: u64,
}

/// Tables, certificates and checks collected by a command or suite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Body {
    pub tables: Vec<Table>,
    pub certificates: Vec<Certificate>,
    pub checks: Vec<Check>,
}

impl Body {
    /// Converts a tower outcome into an entry, storing its certificate.
    pub fn entry(&mut self, s: &Stabilized) -> Entry {
        match s {
            Stabilized::Stable { dim, certificate } => {
                self.certificates.push(certificate.clone());
                Entry::Certified { dim: *dim, certificate: self.certificates.len() - 1 }
            }
            Stabilized::NotStabilized { lower, upper, .. } => Entry::Bounds { lower: *lower, upper: *upper },
        }
    }

    pub fn stabilized_row(&mut self, label: impl Into<String>, dims: &[Stabilized]) -> Row {
        let entries = dims.iter().map(|s| self.entry(s)).collect();
        Row { label: label.into(), entries }
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, checked: usize, detail: Vec<String>) -> bool {
        let outcome = if ok { Outcome::Pass } else { Outcome::Fail };
        self.checks.push(Check { name: name.into(), outcome, checked, detail });
        ok
    }

    pub fn undetermined(&mut self, name: impl Into<String>, checked: usize, detail: Vec<String>) {
        self.checks.push(Check { name: name.into(), outcome: Outcome::Undetermined, checked, detail });
    }

    pub fn relations(&mut self, name: impl Into<String>, r: &RelationReport) -> bool {
        self.check(name, r.passed(), r.checked, r.failures.clone())
    }

    pub fn status(&self) -> Status {
        if self.checks.iter().any(|c| c.outcome == Outcome::Fail) {
            Status::ValidationFailure
        } else if self.checks.iter().any(|c| c.outcome == Outcome::Undetermined)
            || self.tables.iter().flat_map(|t| &t.rows).flat_map(|r| &r.entries).any(|e| e.dim().is_none())
        {
            Status::NotStabilized
        } else {
            Status::Ok
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: Vec<String>,
    pub config: Config,
    pub tables: Vec<Table>,
    pub certificates: Vec<Certificate>,
    pub checks: Vec<Check>,
    pub status: Status,
    pub wall_clock_ms: u64,
}

impl Report {
    pub fn new(command: Vec<String>, config: Config, body: Body, wall_clock_ms: u64) -> Self {
        let status = body.status();
        Report {
            schema: SCHEMA,
            command,
            config,
            tables: body.tables,
            certificates: body.certificates,
            checks: body.checks,
            status,
            wall_clock_ms,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,table,row,column,evidence,dim,lower,upper,certificate\n");
        for t in &self.tables {
            for r in &t.rows {
                for (c, e) in t.columns.iter().zip(&r.entries) {
                    let (ev, dim, lo, up, cert) = match *e {
                        Entry::Exact { dim } => ("exact", dim.to_string(), dim, dim, String::new()),
                        Entry::Certified { dim, certificate } => {
                            ("certified", dim.to_string(), dim, dim, certificate.to_string())
                        }
                        Entry::Bounds { lower, upper } => ("bounds", String::new(), lower, upper, String::new()),
                    };
                    let _ = writeln!(s, "dim,{},{},{c},{ev},{dim},{lo},{up},{cert}", csv(&t.name), csv(&r.label));
                }
            }
        }
        for c in &self.checks {
            let _ = writeln!(s, "check,,{},,{},,,,", csv(&c.name), outcome_word(c.outcome));
        }
        let _ = writeln!(s, "status,,,,{},,,,", status_word(self.status));
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cyclohom {}", self.command.join(" "));
        let c = &self.config;
        let mut cfg = Vec::new();
        if let Some(a) = &c.algebra {
            cfg.push(format!("algebra={a}"));
        }
        if let Some(p) = c.p {
            cfg.push(format!("p={p}"));
        }
        if let Some((lo, hi)) = c.degrees {
            cfg.push(format!("degrees={lo}..{hi}"));
        }
        if let Some(r) = c.rows {
            cfg.push(format!("rows={r}"));
        }
        if let Some(k) = c.cols {
            cfg.push(format!("cols={k}"));
        }
        cfg.push(format!(
            "policy=steps {}, max_stages {}, lookahead {}",
            c.policy.steps, c.policy.max_stages, c.policy.lookahead
        ));
        cfg.push(format!("seed={}", c.seed));
        let _ = writeln!(s, "{}", cfg.join("  "));
        for t in &self.tables {
            let _ = writeln!(s, "\n{}", t.name);
            let cells: Vec<Vec<String>> = std::iter::once(
                std::iter::once(String::new()).chain(t.columns.iter().cloned()).collect(),
            )
            .chain(t.rows.iter().map(|r| std::iter::once(r.label.clone()).chain(r.entries.iter().map(Entry::text)).collect()))
            .collect();
            let ncol = cells.iter().map(Vec::len).max().unwrap_or(0);
            let widths: Vec<usize> = (0..ncol)
                .map(|j| cells.iter().filter_map(|r| r.get(j)).map(|x| x.chars().count()).max().unwrap_or(0))
                .collect();
            for r in &cells {
                let line: Vec<String> = r
                    .iter()
                    .enumerate()
                    .map(|(j, x)| if j == 0 { format!("{x:<w$}", w = widths[0]) } else { format!("{x:>w$}", w = widths[j]) })
                    .collect();
                let _ = writeln!(s, "{}", line.join("  ").trim_end());
            }
        }
        if !self.certificates.is_empty() {
            let _ = writeln!(s, "\ncertificates");
            for (i, cert) in self.certificates.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "#{i}  degree {}  {:?} tower  stage {}  steps {}  lookahead {}  dims {:?}  ranks {:?}",
                    cert.degree, cert.kind, cert.stage, cert.steps, cert.lookahead, cert.dims, cert.map_ranks
                );
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(s, "\nchecks");
            for c in &self.checks {
                let _ = writeln!(s, "{:<12} {} ({} checked)", outcome_word(c.outcome), c.name, c.checked);
                for d in &c.detail {
                    let _ = writeln!(s, "             {d}");
                }
            }
        }
        let _ = writeln!(s, "\nstatus: {} (exit {})", status_word(self.status), self.status.exit_code());
        let _ = writeln!(s, "wall-clock: {} ms", self.wall_clock_ms);
        s
    }
}

fn outcome_word(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "PASS",
        Outcome::Fail => "FAIL",
        Outcome::Undetermined => "UNDETERMINED",
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::NotStabilized => "not stabilized",
        Status::ValidationFailure => "validation failure",
    }
}

fn csv(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_checks_and_entries() {
        let mut b = Body::default();
        assert_eq!(b.status(), Status::Ok);
        let mut t = Table::degrees("x", 0, 0);
        t.rows.push(Row { label: "a".into(), entries: vec![Entry::Bounds { lower: 0, upper: 1 }] });
        b.tables.push(t);
        assert_eq!(b.status(), Status::NotStabilized);
        b.check("c", false, 1, vec![]);
        assert_eq!(b.status(), Status::ValidationFailure);
    }

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(csv("a,b"), "\"a,b\"");
        assert_eq!(csv("ab"), "ab");
    }
}
