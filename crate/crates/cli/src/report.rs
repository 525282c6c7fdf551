//! Run reports: deterministic JSON and per-cell CSV.

use std::io::Write;

use qdini_core::diagnostics::{Signal, Status, Verdict};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const TOOL: &str = "qdini";

/// What a check is expected to report. `NonConvergent` matches on the
/// convergence signal of criteria such as the truncation criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Consistent,
    Violated,
    Inconclusive,
    NonConvergent,
}

impl Expectation {
    pub fn observed(v: &Verdict) -> Self {
        match (v.status, v.signal) {
            (Status::Violated, _) => Expectation::Violated,
            (_, Some(Signal::NonConvergent)) => Expectation::NonConvergent,
            (Status::Inconclusive, _) => Expectation::Inconclusive,
            (Status::Consistent, _) => Expectation::Consistent,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Expectation::Consistent => "consistent",
            Expectation::Violated => "violated",
            Expectation::Inconclusive => "inconclusive",
            Expectation::NonConvergent => "non-convergent",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub label: String,
    pub procedure: String,
    pub n_max: usize,
    pub m_max: usize,
    pub expected: Expectation,
    pub observed: Expectation,
    pub matched: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub matched: usize,
    pub mismatched: usize,
    pub violated: usize,
}

/// Outcome of one scenario run. Contains no timing so that reruns are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
    pub summary: Summary,
}

impl Report {
    pub fn new(scenario: impl Into<String>, seed: u64, checks: Vec<CheckReport>) -> Self {
        let matched = checks.iter().filter(|c| c.matched).count();
        let violated = checks.iter().filter(|c| c.observed == Expectation::Violated).count();
        Report {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: scenario.into(),
            seed,
            summary: Summary { checks: checks.len(), matched, mismatched: checks.len() - matched, violated },
            checks,
        }
    }

    pub fn all_matched(&self) -> bool {
        self.summary.mismatched == 0
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per grid cell of every check.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["check", "sequence", "n", "m", "mu", "gap", "tail", "flags"])?;
        for c in &self.checks {
            for g in &c.verdict.grids {
                for cell in &g.cells {
                    w.write_record([
                        c.label.clone(),
                        g.sequence.clone(),
                        cell.n.to_string(),
                        cell.m.to_string(),
                        number(cell.mu),
                        number(cell.gap),
                        number(cell.tail),
                        cell.flags.join(";"),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip form; `+inf`, `-inf` and `nan` for non-finite values.
pub(crate) fn number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}
