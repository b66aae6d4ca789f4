//! Pass/fail records for inequality and structure checks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Relative slack for inequality checks: `1e-8 * (1 + |lhs| + |rhs|)`.
pub const INEQUALITY_SLACK: f64 = 1e-8;
/// Absolute slack for sign and monotonicity checks.
pub const SIGN_SLACK: f64 = 1e-10;

/// One named check. `pass` holds exactly when `margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub measured: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Wall-clock time; kept out of JSON so reports stay reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

impl CheckEntry {
    /// Check `lhs <= rhs` with the given absolute tolerance.
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        let pass = margin.is_finite() && margin >= -tolerance;
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            tolerance,
            pass,
            measured: BTreeMap::new(),
            note: None,
            runtime: Duration::ZERO,
        }
    }

    /// `lhs <= rhs` with the relative inequality slack.
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let tol = INEQUALITY_SLACK * (1.0 + lhs.abs() + rhs.abs());
        Self::at_most(name, lhs, rhs, tol)
    }

    /// A boolean property: `lhs` is 0 when it holds and 1 otherwise, `rhs` is 0.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0, 0.0)
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn timed(mut self, runtime: Duration) -> Self {
        self.runtime = runtime;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<CheckEntry>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.checks.push(entry);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_count(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Aligned-column listing for humans.
    pub fn to_text(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>14}  {:>14}  {:>14}  {:>10}",
            "check", "status", "lhs", "rhs", "margin", "ms"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>14.6e}  {:>14.6e}  {:>14.6e}  {:>10.2}",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.lhs,
                c.rhs,
                c.margin,
                c.runtime.as_secs_f64() * 1e3
            );
            if let Some(note) = &c.note {
                let _ = writeln!(out, "{:<width$}  note: {}", "", note);
            }
        }
        let _ = writeln!(
            out,
            "{} checks, {} failed",
            self.checks.len(),
            self.failed_count()
        );
        out
    }
}
