//! Admissible actions, best responses and the brute-force pure-Nash oracle.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::fcfs::{
    allocate_unchecked, fcfs_allocate, is_feasible_for, Agent, ReportPair, Scenario,
};
use crate::payoff::{expected_agent_cost, CostModel, CostValue};
use crate::time::GridTime;

use super::{EquilibriumSet, Provenance};

/// True iff every FCFS branch for these reports lets `agent` pass no earlier
/// than its earliest possible time.
///
/// Reporting below one's earliest time is fine as long as the resulting
/// allocation is still reachable.
pub fn admissible(scenario: &Scenario, agent: Agent, own: GridTime, opponent: GridTime) -> bool {
    let reports = ReportPair::with_own(agent, own, opponent);
    match fcfs_allocate(scenario, reports) {
        Ok(lottery) => is_feasible_for(scenario, agent, &lottery),
        Err(_) => false,
    }
}

/// Expected cost to `agent` of a report pair, or `None` when inadmissible.
fn admissible_cost(
    scenario: &Scenario,
    model: CostModel,
    agent: Agent,
    reports: ReportPair,
) -> Option<CostValue> {
    let lottery = allocate_unchecked(scenario, reports);
    is_feasible_for(scenario, agent, &lottery)
        .then(|| expected_agent_cost(model, &lottery, scenario, agent))
}

/// Indices (into the grid) of the cost-minimizing admissible own reports.
fn best_response_mask(
    scenario: &Scenario,
    model: CostModel,
    agent: Agent,
    opponent: GridTime,
) -> Option<Vec<bool>> {
    let grid = scenario.grid();
    let costs: Vec<Option<CostValue>> = grid
        .iter()
        .map(|own| {
            admissible_cost(
                scenario,
                model,
                agent,
                ReportPair::with_own(agent, own, opponent),
            )
        })
        .collect();
    let best = costs.iter().flatten().min()?;
    Some(costs.iter().map(|c| c.as_ref() == Some(best)).collect())
}

/// Admissible own reports minimizing `agent`'s expected cost against a fixed
/// opponent report.
pub fn best_responses(
    scenario: &Scenario,
    model: CostModel,
    agent: Agent,
    opponent_report: GridTime,
) -> Result<BTreeSet<GridTime>> {
    if !scenario.grid().contains(opponent_report) {
        return Err(Error::OffGridReport {
            report: opponent_report,
        });
    }
    let mask = best_response_mask(scenario, model, agent, opponent_report).ok_or(
        Error::NoAdmissibleReport {
            agent: agent.number(),
            opponent_report,
        },
    )?;
    Ok(scenario
        .grid()
        .iter()
        .zip(mask)
        .filter_map(|(t, best)| best.then_some(t))
        .collect())
}

/// Every report pair where each report is a best response to the other.
///
/// `O(|grid|^3)`: one best-response scan per (agent, opponent report).
pub fn nash_oracle(scenario: &Scenario, model: CostModel) -> EquilibriumSet {
    let grid = scenario.grid();
    let masks = |agent: Agent| -> Vec<Vec<bool>> {
        grid.iter()
            .map(|opp| {
                best_response_mask(scenario, model, agent, opp)
                    .expect("reporting the upper bound is always admissible")
            })
            .collect()
    };
    let (br1, br2) = (masks(Agent::One), masks(Agent::Two));
    let mut pairs = BTreeSet::new();
    for (x, r1) in grid.iter().enumerate() {
        for (y, r2) in grid.iter().enumerate() {
            if br1[y][x] && br2[x][y] {
                pairs.insert(ReportPair::new(r1, r2));
            }
        }
    }
    EquilibriumSet::new(Provenance::Oracle, pairs)
}

/// Direct unilateral-deviation check of a single report pair.
///
/// Both reports must be admissible for their owners, and no admissible
/// deviation may strictly lower the deviator's expected cost.
pub fn is_nash(scenario: &Scenario, model: CostModel, reports: ReportPair) -> bool {
    let grid = scenario.grid();
    if !grid.contains(reports.report1) || !grid.contains(reports.report2) {
        return false;
    }
    Agent::BOTH.iter().all(|&agent| {
        let opponent = reports.get(agent.other());
        let Some(current) = admissible_cost(scenario, model, agent, reports) else {
            return false;
        };
        grid.iter().all(|alt| {
            match admissible_cost(
                scenario,
                model,
                agent,
                ReportPair::with_own(agent, alt, opponent),
            ) {
                Some(c) => c >= current,
                None => true,
            }
        })
    })
}
