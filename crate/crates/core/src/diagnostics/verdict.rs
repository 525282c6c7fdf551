use serde::{Deserialize, Serialize};

use super::grid::DiagnosticsGrid;
use super::real::serde_real;
use super::trend::ResidualSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Consistent,
    Violated,
    Inconclusive,
}

/// What a check says about convergence, when it is a convergence criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signal {
    Convergent,
    NonConvergent,
}

/// Whether a failed check means an unmet hypothesis or a broken inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Failure leaves the claim untested: status becomes inconclusive.
    Hypothesis,
    /// Failure contradicts a proven inequality: status becomes violated.
    Inequality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
    /// Smallest margin observed (negative when failing).
    #[serde(with = "serde_real")]
    pub slack: f64,
    pub detail: String,
}

/// Outcome of one diagnostic procedure on a finite window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub status: Status,
    /// Set when a consistent status rests on finite-window trends only.
    pub trend_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<Signal>,
    pub hypothesis_checks: Vec<HypothesisCheck>,
    pub hypothesis_trend: Vec<ResidualSeries>,
    pub conclusion_trend: Vec<ResidualSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grids: Vec<DiagnosticsGrid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn builder(check: impl Into<String>) -> VerdictBuilder {
        VerdictBuilder {
            verdict: Verdict {
                check: check.into(),
                status: Status::Consistent,
                trend_only: false,
                signal: None,
                hypothesis_checks: Vec::new(),
                hypothesis_trend: Vec::new(),
                conclusion_trend: Vec::new(),
                grids: Vec::new(),
                notes: Vec::new(),
            },
            forced: None,
        }
    }

    /// A verdict for a check that could not run because its inputs broke a
    /// stated inequality (for example a failed operator domination).
    pub fn failed(check: impl Into<String>, reason: impl Into<String>) -> Verdict {
        let reason = reason.into();
        let mut b = Verdict::builder(check);
        b.inequality("inputs satisfy the stated domination", false, f64::NEG_INFINITY, reason.clone());
        b.note(reason);
        b.finish()
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.hypothesis_checks.iter().filter(|c| !c.passed)
    }
}

pub struct VerdictBuilder {
    verdict: Verdict,
    forced: Option<Status>,
}

impl VerdictBuilder {
    pub fn check(
        &mut self,
        kind: CheckKind,
        name: impl Into<String>,
        passed: bool,
        slack: f64,
        detail: impl Into<String>,
    ) -> &mut Self {
        self.verdict.hypothesis_checks.push(HypothesisCheck {
            name: name.into(),
            kind,
            passed,
            slack,
            detail: detail.into(),
        });
        self
    }

    pub fn hypothesis(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        slack: f64,
        detail: impl Into<String>,
    ) -> &mut Self {
        self.check(CheckKind::Hypothesis, name, passed, slack, detail)
    }

    pub fn inequality(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        slack: f64,
        detail: impl Into<String>,
    ) -> &mut Self {
        self.check(CheckKind::Inequality, name, passed, slack, detail)
    }

    /// Records a residual series that the hypotheses require to shrink.
    pub fn hypothesis_series(&mut self, series: ResidualSeries) -> &mut Self {
        self.verdict.hypothesis_trend.push(series);
        self
    }

    /// Records a residual series that the conclusion predicts will shrink.
    pub fn conclusion_series(&mut self, series: ResidualSeries) -> &mut Self {
        self.verdict.conclusion_trend.push(series);
        self
    }

    pub fn grid(&mut self, grid: DiagnosticsGrid) -> &mut Self {
        self.verdict.grids.push(grid);
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.verdict.notes.push(note.into());
        self
    }

    pub fn signal(&mut self, signal: Signal) -> &mut Self {
        self.verdict.signal = Some(signal);
        self
    }

    /// Forces a status that is no stronger than the computed one.
    pub fn cap_status(&mut self, status: Status) -> &mut Self {
        self.forced = Some(status);
        self
    }

    /// Status rule: any failed inequality → violated; otherwise any failed
    /// hypothesis or non-shrinking series → inconclusive; otherwise consistent,
    /// flagged `trend_only` when it rests on conclusion trends.
    pub fn finish(&mut self) -> Verdict {
        let mut v = self.verdict.clone();
        let broken = v.hypothesis_checks.iter().any(|c| c.kind == CheckKind::Inequality && !c.passed);
        let unmet = v.hypothesis_checks.iter().any(|c| c.kind == CheckKind::Hypothesis && !c.passed)
            || v.hypothesis_trend.iter().any(|s| !s.shrinks());
        let stalled = v.conclusion_trend.iter().any(|s| !s.shrinks());
        v.status = if broken {
            Status::Violated
        } else if unmet || stalled {
            Status::Inconclusive
        } else {
            Status::Consistent
        };
        if let Some(cap) = self.forced {
            if v.status == Status::Consistent {
                v.status = cap;
            }
        }
        v.trend_only = v.status == Status::Consistent && !v.conclusion_trend.is_empty();
        v
    }
}
