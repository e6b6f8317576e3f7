//! Named residual statistics over a sample grid.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

/// How a report turns its statistics into a verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// pass iff `max_abs ≤ tolerance`
    AtMost,
    /// pass iff `min_abs > tolerance` (used for "bounded away from zero" claims)
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub name: String,
    pub samples: usize,
    pub max_abs: f64,
    pub min_abs: f64,
    pub mean_abs: f64,
    pub tolerance: f64,
    pub criterion: Criterion,
    pub verdict: Verdict,
    /// Domain point of `max_abs` (of `min_abs` for `AtLeast`).
    pub worst_point: Vec<f64>,
    pub note: String,
}

impl ResidualReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            max_abs: 0.0,
            min_abs: f64::INFINITY,
            mean_abs: 0.0,
            tolerance,
            criterion: Criterion::AtMost,
            verdict: Verdict::Pass,
            worst_point: Vec::new(),
            note: String::new(),
        }
    }

    pub fn at_least(name: impl Into<String>, floor: f64) -> Self {
        let mut r = Self::new(name, floor);
        r.criterion = Criterion::AtLeast;
        r.verdict = Verdict::Fail;
        r
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Record one residual. NaN counts as an infinite residual.
    pub fn push(&mut self, value: f64, point: &[f64]) {
        let a = if value.is_nan() { f64::INFINITY } else { libm::fabs(value) };
        let worst = match self.criterion {
            Criterion::AtMost => self.samples == 0 || a > self.max_abs,
            Criterion::AtLeast => self.samples == 0 || a < self.min_abs,
        };
        if worst {
            self.worst_point = point.to_vec();
        }
        self.mean_abs = (self.mean_abs * self.samples as f64 + a) / (self.samples + 1) as f64;
        self.samples += 1;
        self.max_abs = self.max_abs.max(a);
        self.min_abs = self.min_abs.min(a);
        self.update_verdict();
    }

    /// Combine two reports of the same quantity (order independent).
    pub fn merge(mut self, other: &ResidualReport) -> Self {
        if other.samples == 0 {
            return self;
        }
        let total = self.samples + other.samples;
        let take_other = match self.criterion {
            Criterion::AtMost => self.samples == 0 || other.max_abs > self.max_abs,
            Criterion::AtLeast => self.samples == 0 || other.min_abs < self.min_abs,
        };
        if take_other {
            self.worst_point = other.worst_point.clone();
        }
        self.mean_abs = (self.mean_abs * self.samples as f64 + other.mean_abs * other.samples as f64) / total as f64;
        self.samples = total;
        self.max_abs = self.max_abs.max(other.max_abs);
        self.min_abs = self.min_abs.min(other.min_abs);
        self.update_verdict();
        self
    }

    fn update_verdict(&mut self) {
        let ok = match self.criterion {
            Criterion::AtMost => self.max_abs <= self.tolerance,
            Criterion::AtLeast => self.samples > 0 && self.min_abs > self.tolerance,
        };
        self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    /// Mark the report failed regardless of its statistics (e.g. a sample errored).
    pub fn fail(&mut self, why: impl Into<String>) {
        self.verdict = Verdict::Fail;
        self.note = why.into();
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.criterion {
            Criterion::AtMost => "<=",
            Criterion::AtLeast => ">",
        };
        write!(
            f,
            "{}: {} (samples={}, max={:.3e}, min={:.3e}, mean={:.3e}, need {} {:.1e})",
            self.name, self.verdict, self.samples, self.max_abs, self.min_abs, self.mean_abs, op, self.tolerance
        )?;
        if !self.note.is_empty() {
            write!(f, " [{}]", self.note)?;
        }
        Ok(())
    }
}
