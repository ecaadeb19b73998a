use std::collections::BTreeMap;

use serde::Serialize;

use crate::exact::{ObservationContext, Rational};
use crate::gridfn::Coverage;

/// Version of the report layout.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// Structured outcome of one check. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub schema: u32,
    pub check: String,
    pub function: String,
    /// `τ` of every grid involved.
    pub grids: Vec<u64>,
    pub context: ObservationContext,
    pub coverage: Coverage,
    pub samples: u64,
    pub max_gap: Rational,
    pub tolerance: Rational,
    pub verdict: Verdict,
    pub violations: u64,
    /// First point where the check failed.
    pub witness: Option<Rational>,
    pub notes: BTreeMap<String, String>,
}

impl CheckReport {
    pub fn new(check: &str, function: &str, grids: Vec<u64>, context: ObservationContext) -> Self {
        CheckReport {
            schema: REPORT_SCHEMA,
            check: check.to_string(),
            function: function.to_string(),
            grids,
            context,
            coverage: Coverage::Exhaustive,
            samples: 0,
            max_gap: Rational::zero(),
            tolerance: context.infinitesimal(),
            verdict: Verdict::Pass,
            violations: 0,
            witness: None,
            notes: BTreeMap::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.insert(key.to_string(), value.to_string());
    }

    /// Records one comparison of `gap` against `tolerance` at `at`.
    pub(crate) fn observe(&mut self, at: &Rational, gap: Rational, tolerance: &Rational) {
        self.samples += 1;
        if &gap > tolerance {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(at.clone());
            }
        }
        if gap > self.max_gap {
            self.max_gap = gap;
        }
    }

    /// Sets the verdict from the violation count.
    pub(crate) fn conclude(mut self) -> Self {
        self.verdict = if self.violations == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}
