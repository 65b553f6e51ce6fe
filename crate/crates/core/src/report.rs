//! Structured diffs between closed-form answers and brute-force answers.

use std::fmt;

use crate::equilibrium::CaseLabel;
use crate::fcfs::Scenario;
use crate::mechanism::Rung;
use crate::payoff::{CostModel, CostValue};
use crate::social::{SeparationMode, SocialCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiscrepancyKind {
    /// A closed-form equilibrium pair the oracle rejects.
    LemmaSoundness,
    /// The oracle found no pure equilibrium at all.
    NoEquilibrium,
    /// A socially-optimal case formula outside the brute-force argmin.
    SocialCase {
        case: SocialCase,
        separation: SeparationMode,
    },
    /// The socially-optimal-equilibrium row formula differs from the oracle
    /// selection. `in_premise` is false when the equilibrium is unique, where
    /// the rows make no claim.
    Theorem1 { row: u8, in_premise: bool },
    /// The table assignment differs from the oracle selection.
    Table1 { label: CaseLabel, rung: Rung },
}

impl DiscrepancyKind {
    /// Known inconsistencies of the closed forms; archived, never fatal.
    pub fn is_known(&self) -> bool {
        match self {
            DiscrepancyKind::Theorem1 { row, in_premise } => *row == 1 || !in_premise,
            // the coin rows carry the odd-gap rounding, the equal-desired
            // rows the equal-desired row formula
            DiscrepancyKind::Table1 { label, rung } => {
                *rung == Rung::Coin || *label == CaseLabel::Lemma1
            }
            DiscrepancyKind::SocialCase { case, separation } => {
                *case == SocialCase::III || *separation == SeparationMode::PaperEq4
            }
            _ => false,
        }
    }

    pub fn name(&self) -> String {
        match self {
            DiscrepancyKind::LemmaSoundness => "lemma-soundness".into(),
            DiscrepancyKind::NoEquilibrium => "no-equilibrium".into(),
            DiscrepancyKind::SocialCase { case, separation } => {
                format!("social-case-{}/{}", case.name(), separation)
            }
            DiscrepancyKind::Theorem1 {
                row,
                in_premise: true,
            } => format!("theorem1-row{row}"),
            DiscrepancyKind::Theorem1 {
                row,
                in_premise: false,
            } => {
                format!("theorem1-row{row}/unique")
            }
            DiscrepancyKind::Table1 { label, rung } => format!("table1/{label}/{rung}"),
        }
    }
}

impl fmt::Display for DiscrepancyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscrepancyRow {
    pub scenario: Scenario,
    pub model: CostModel,
    pub label: CaseLabel,
    pub kind: DiscrepancyKind,
    pub closed_form: String,
    pub oracle: String,
    pub closed_form_cost: Option<CostValue>,
    pub oracle_cost: Option<CostValue>,
}

impl DiscrepancyRow {
    pub const TSV_HEADER: &'static str =
        "tick\tlower\tupper\tdt\te1\td1\te2\td2\tcost\tlabel\tkind\tknown\tclosed_form\toracle\tclosed_form_cost\toracle_cost";

    pub fn tsv(&self) -> String {
        let s = &self.scenario;
        let [p1, p2] = s.profiles();
        let opt = |c: &Option<CostValue>| c.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.grid().tick(),
            s.grid().lower(),
            s.grid().upper(),
            s.crossing(),
            p1.earliest,
            p1.desired,
            p2.earliest,
            p2.desired,
            self.model,
            self.label,
            self.kind,
            self.kind.is_known(),
            self.closed_form,
            self.oracle,
            opt(&self.closed_form_cost),
            opt(&self.oracle_cost),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiscrepancyReport {
    pub rows: Vec<DiscrepancyRow>,
}

impl DiscrepancyReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: DiscrepancyRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: DiscrepancyReport) {
        self.rows.extend(other.rows);
    }

    pub fn unexpected(&self) -> impl Iterator<Item = &DiscrepancyRow> {
        self.rows.iter().filter(|r| !r.kind.is_known())
    }

    pub fn of_kind(&self, kind: DiscrepancyKind) -> impl Iterator<Item = &DiscrepancyRow> {
        self.rows.iter().filter(move |r| r.kind == kind)
    }
}
