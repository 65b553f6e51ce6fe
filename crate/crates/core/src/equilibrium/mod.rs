//! Pure Nash equilibria of the two-agent intersection game.
//!
//! Two independent routes are provided: [`nash_oracle`] enumerates every
//! report pair and keeps the mutual best responses, while
//! [`closed_form_equilibria`] materializes the case-by-case interval sets.
//! [`verify_soundness`] diffs them.

mod classify;
mod closed_form;
mod oracle;

use std::collections::BTreeSet;
use std::fmt;

pub use classify::{classify, CaseLabel, Classification, RoleView};
pub use closed_form::{closed_form_equilibria, ClosedForm};
pub use oracle::{admissible, best_responses, is_nash, nash_oracle};

use crate::fcfs::{ReportPair, Scenario};
use crate::payoff::CostModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Oracle,
    ClosedForm,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Oracle => "oracle",
            Provenance::ClosedForm => "closed_form",
        })
    }
}

/// A set of report pairs claimed (or verified) to be pure equilibria.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumSet {
    pub provenance: Provenance,
    pairs: BTreeSet<ReportPair>,
}

impl EquilibriumSet {
    pub fn new(provenance: Provenance, pairs: BTreeSet<ReportPair>) -> Self {
        EquilibriumSet { provenance, pairs }
    }

    pub fn pairs(&self) -> &BTreeSet<ReportPair> {
        &self.pairs
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReportPair> {
        self.pairs.iter()
    }

    pub fn contains(&self, pair: &ReportPair) -> bool {
        self.pairs.contains(pair)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Closed-form prediction diffed against the oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessReport {
    pub label: CaseLabel,
    /// Closed-form pairs the oracle rejects.
    pub violations: Vec<ReportPair>,
    /// Oracle pairs the closed form does not list (informational).
    pub completeness_gaps: Vec<ReportPair>,
    /// Claimed pairs that cannot be reported on this grid.
    pub off_grid_claims: Vec<ReportPair>,
    pub oracle_empty: bool,
    pub oracle: EquilibriumSet,
    pub closed_form: EquilibriumSet,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.violations.is_empty() && !self.oracle_empty
    }
}

pub fn verify_soundness(scenario: &Scenario, model: CostModel) -> SoundnessReport {
    let oracle = nash_oracle(scenario, model);
    let cf = closed_form_equilibria(scenario);
    let violations = cf
        .set
        .iter()
        .filter(|p| !oracle.contains(p))
        .copied()
        .collect();
    let completeness_gaps = oracle
        .iter()
        .filter(|p| !cf.set.contains(p))
        .copied()
        .collect();
    SoundnessReport {
        label: cf.classification.label,
        violations,
        completeness_gaps,
        off_grid_claims: cf.off_grid,
        oracle_empty: oracle.is_empty(),
        oracle,
        closed_form: cf.set,
    }
}
