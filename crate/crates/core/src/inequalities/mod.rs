//! Executable correlation inequalities for ferromagnetic Ising chains.
//!
//! Each check returns an [`InequalityReport`] holding both sides, the slack
//! `rhs - lhs` and the tolerance it was judged against. Checks whose
//! hypotheses fail are reported as [`CheckStatus::HypothesisViolated`],
//! never as failures.

mod chain;
mod gks;
mod suite;

pub use chain::{corbound_check, corbound_grid, lemma36_check, lemma36_check_with, CorBoundConfig, Engine};
pub use gks::{check_gks, check_uncoupled_zero, GksVariant};
pub use suite::{run_suite, summary_csv, SuiteConfig, SuiteReport, SummaryRow};

use serde::{Deserialize, Serialize};

use crate::ising::InteractionMap;

/// Default slack tolerance for enumeration-based checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    HypothesisViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub instance: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InequalityReport {
    /// A judged report: passes iff `rhs - lhs >= -tolerance`.
    pub fn judged(name: &str, instance: serde_json::Value, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        let passed = slack >= -tolerance;
        InequalityReport {
            name: name.to_string(),
            instance,
            lhs,
            rhs,
            slack,
            tolerance,
            passed,
            status: if passed { CheckStatus::Passed } else { CheckStatus::Failed },
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// `[[sites...], strength]` pairs of an interaction, for report instances.
pub(crate) fn interaction_json(j: &InteractionMap) -> serde_json::Value {
    serde_json::Value::Array(
        j.iter()
            .map(|(sites, strength)| serde_json::json!([sites, strength]))
            .collect(),
    )
}
