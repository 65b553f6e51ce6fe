//! Closed-form equilibrium sets, one family per case label.
//!
//! Every family is either a run of staggered pairs (the earlier passer
//! reports `x`, the other reports `x + tick`, for each grid `x` in a
//! half-open window) or, when that window holds no grid point, a single
//! tied report.

use std::collections::BTreeSet;

use crate::fcfs::{Agent, ReportPair, Scenario};
use crate::time::GridTime;

use super::classify::{classify, CaseLabel, Classification, RoleView};
use super::{EquilibriumSet, Provenance};

/// Closed-form prediction together with any claimed pairs that fall off the
/// reporting grid (those cannot be played and are kept out of the set).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedForm {
    pub classification: Classification,
    pub set: EquilibriumSet,
    pub off_grid: Vec<ReportPair>,
    /// The agent scheduled first at the staggered pairs, when that is fixed.
    pub first_passer: Option<Agent>,
}

struct Builder<'a> {
    scenario: &'a Scenario,
    roles: RoleView,
    on_grid: BTreeSet<ReportPair>,
    off_grid: Vec<ReportPair>,
}

impl<'a> Builder<'a> {
    fn push(&mut self, lead_report: GridTime, trail_report: GridTime) {
        let pair = match self.roles.lead {
            Agent::One => ReportPair::new(lead_report, trail_report),
            Agent::Two => ReportPair::new(trail_report, lead_report),
        };
        let grid = self.scenario.grid();
        if grid.contains(pair.report1) && grid.contains(pair.report2) {
            self.on_grid.insert(pair);
        } else {
            self.off_grid.push(pair);
        }
    }

    /// Lead reports `x`, trail reports `x + tick`, for grid `x` in `[from, to)`.
    /// Falls back to the tie at `tie` when the window is empty.
    fn lead_first_or_tie(&mut self, from: GridTime, to: GridTime, tie: GridTime) {
        let xs = self.scenario.grid().members_in(from, to);
        if xs.is_empty() {
            self.push(tie, tie);
        }
        for x in xs {
            self.push(x, x + self.roles.tick);
        }
    }
}

/// Materializes the closed-form equilibrium set for the scenario's case.
pub fn closed_form_equilibria(scenario: &Scenario) -> ClosedForm {
    let classification = classify(scenario);
    let v = classification.roles;
    let mut b = Builder {
        scenario,
        roles: v,
        on_grid: BTreeSet::new(),
        off_grid: Vec::new(),
    };
    let half = v.half_crossing;
    let mut first_passer = Some(v.lead);
    match classification.label {
        CaseLabel::NoConflict => b.push(v.lead_desired, v.trail_desired),
        CaseLabel::Lemma1 => {
            let d = v.lead_desired;
            let from = v.lead_earliest.max(d - half);
            let to = v.trail_earliest.max(d - half);
            b.lead_first_or_tie(from, to, to);
        }
        CaseLabel::Lemma2 => {
            let from = (v.trail_desired - v.crossing).max(v.lead_earliest);
            for x in scenario.grid().members_in(from, v.lead_desired) {
                b.push(x, x + v.tick);
            }
            let last = v.lead_desired + v.spacing();
            let trail_reports: Vec<GridTime> = scenario
                .grid()
                .iter()
                .filter(|&r| v.lead_desired < r && r <= last)
                .collect();
            for r in trail_reports {
                b.push(v.lead_desired, r);
            }
        }
        CaseLabel::Lemma3 => {
            let from = v.lead_earliest.max(v.lead_desired - half);
            let to = (v.trail_desired - half).max(v.trail_earliest);
            b.lead_first_or_tie(from, to, to);
        }
        CaseLabel::Lemma4Former => {
            let from = v.lead_earliest.max(v.lead_desired - half);
            let to = v.trail_desired - half;
            b.lead_first_or_tie(from, to, to);
        }
        CaseLabel::Lemma4Latter => {
            // trail passes first: trail reports x, lead reports x + tick
            first_passer = Some(v.trail);
            let from = (v.trail_desired - half).max(v.trail_earliest);
            let xs = scenario.grid().members_in(from, v.lead_earliest);
            if xs.is_empty() {
                b.push(v.lead_earliest, v.lead_earliest);
            }
            for x in xs {
                b.push(x + v.tick, x);
            }
        }
        CaseLabel::Lemma5 => {
            let from = (v.trail_desired - v.crossing)
                .max(v.lead_desired - half)
                .max(v.lead_earliest);
            let to = (v.trail_desired - half).min(v.lead_desired);
            b.lead_first_or_tie(from, to, to);
        }
    }
    if b.on_grid.iter().all(|p| p.report1 == p.report2) && !b.on_grid.is_empty() {
        first_passer = None;
    }
    ClosedForm {
        classification,
        set: EquilibriumSet::new(Provenance::ClosedForm, b.on_grid),
        off_grid: b.off_grid,
        first_passer,
    }
}
