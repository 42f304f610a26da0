//! Check reports: a versioned JSON document and a human-readable table.
//!
//! JSON schema (`report_version = 1`), keys in this order:
//!
//! ```text
//! report_version  integer, always 1
//! tool            "gkverify"
//! tool_version    crate version
//! command         subcommand name
//! input           input path as given
//! input_sha256    hex digest of the input file bytes
//! seed, points    sampling parameters
//! sample_box      { lo: [..], hi: [..], exclude: ["<expr>", ..] }
//! checks          [ { name, equation, kind, sample_box, point_count, seed,
//!                     max_residual, tolerance, verdict, notes } ]
//! verdict         "pass" | "fail"
//! ```
//!
//! A check verdict is `pass`, `fail`, `info` (reported value, never fails) or
//! `skipped` (premises did not hold). `kind` and `tolerance` are `null` where
//! they do not apply; `max_residual` is `null` for skipped checks.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
    Skipped,
}

impl Verdict {
    fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Info => "info",
            Verdict::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// The condition checked, written out as a formula.
    pub equation: String,
    pub kind: Option<u8>,
    pub sample_box: SampleBox,
    pub point_count: usize,
    pub seed: u64,
    pub max_residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub report_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub input: String,
    pub input_sha256: String,
    pub seed: u64,
    pub points: usize,
    pub sample_box: SampleBox,
    pub checks: Vec<CheckRecord>,
    pub verdict: Verdict,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// One check to be added to a report.
pub struct Check<'a> {
    pub name: &'a str,
    pub equation: &'a str,
    pub kind: Option<u8>,
}

impl CheckReport {
    pub fn new(
        command: &str,
        input: &str,
        input_bytes: &[u8],
        seed: u64,
        points: usize,
        sample_box: SampleBox,
    ) -> Self {
        CheckReport {
            report_version: REPORT_VERSION,
            tool: "gkverify".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input: input.into(),
            input_sha256: sha256_hex(input_bytes),
            seed,
            points,
            sample_box,
            checks: Vec::new(),
            verdict: Verdict::Pass,
        }
    }

    fn push(&mut self, c: Check<'_>, residual: Option<f64>, tolerance: Option<f64>, verdict: Verdict, notes: Vec<String>) {
        self.checks.push(CheckRecord {
            name: c.name.into(),
            equation: c.equation.into(),
            kind: c.kind,
            sample_box: self.sample_box.clone(),
            point_count: self.points,
            seed: self.seed,
            max_residual: residual,
            tolerance,
            verdict,
            notes,
        });
        self.verdict = overall(&self.checks);
    }

    /// A pass/fail check; NaN residuals fail.
    pub fn check(&mut self, c: Check<'_>, residual: f64, tolerance: f64, notes: Vec<String>) -> bool {
        let pass = residual <= tolerance;
        let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        self.push(c, Some(residual), Some(tolerance), verdict, notes);
        pass
    }

    /// Passes when `value >= threshold`; the threshold is reported as the
    /// tolerance.
    pub fn check_min(&mut self, c: Check<'_>, value: f64, threshold: f64, notes: Vec<String>) -> bool {
        let pass = value >= threshold;
        let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        self.push(c, Some(value), Some(threshold), verdict, notes);
        pass
    }

    pub fn info(&mut self, c: Check<'_>, value: f64, notes: Vec<String>) {
        self.push(c, Some(value), None, Verdict::Info, notes);
    }

    pub fn skipped(&mut self, c: Check<'_>, notes: Vec<String>) {
        self.push(c, None, None, Verdict::Skipped, notes);
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}  sha256 {}", self.command, self.input, self.input_sha256);
        let _ = writeln!(
            out,
            "{} points, seed {}, box lo {:?} hi {:?}{}",
            self.points,
            self.seed,
            self.sample_box.lo,
            self.sample_box.hi,
            if self.sample_box.exclude.is_empty() {
                String::new()
            } else {
                format!(", exclude {}", self.sample_box.exclude.join("; "))
            }
        );
        let rows: Vec<[String; 6]> = self
            .checks
            .iter()
            .map(|c| {
                [
                    c.name.clone(),
                    c.kind.map(|k| k.to_string()).unwrap_or_default(),
                    c.equation.clone(),
                    c.max_residual.map(|r| format!("{r:.3e}")).unwrap_or_else(|| "-".into()),
                    c.tolerance.map(|t| format!("{t:.0e}")).unwrap_or_else(|| "-".into()),
                    c.verdict.as_str().into(),
                ]
            })
            .collect();
        let header = ["check", "kind", "condition", "residual", "tol", "verdict"];
        let mut widths = header.map(|h| h.chars().count());
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: [&str; 6]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                let pad = w - cell.chars().count();
                if i == 3 {
                    s.push_str(&" ".repeat(pad));
                    s.push_str(cell);
                } else {
                    s.push_str(cell);
                    s.push_str(&" ".repeat(pad));
                }
            }
            s.trim_end().to_owned()
        };
        let _ = writeln!(out, "{}", line(header));
        for (r, c) in rows.iter().zip(&self.checks) {
            let _ = writeln!(out, "{}", line([&r[0], &r[1], &r[2], &r[3], &r[4], &r[5]]));
            for n in &c.notes {
                let _ = writeln!(out, "    note: {n}");
            }
        }
        let _ = writeln!(out, "verdict: {}", if self.passed() { "pass" } else { "FAIL" });
        out
    }
}

fn overall(checks: &[CheckRecord]) -> Verdict {
    if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else {
        Verdict::Pass
    }
}
