//! The direct mechanism: agents report `(earliest, desired)`, the mechanism
//! reports passing times to the manager on their behalf.
//!
//! Two implementations are kept side by side and diffed, never merged: the
//! row-by-row assignment table ([`table1_assign`]) and selection of the
//! socially optimal equilibrium from the brute-force oracle set.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use crate::equilibrium::{classify, nash_oracle, CaseLabel, EquilibriumSet};
use crate::error::{Error, Result};
use crate::fcfs::{
    allocate_unchecked, fcfs_allocate, is_feasible_for, Agent, AgentProfile, AllocationLottery,
    Lottery, ReportPair, Scenario,
};
use crate::payoff::{expected_agent_cost, social_cost, CostModel, CostValue};
use crate::report::{DiscrepancyKind, DiscrepancyRow};
use crate::social::select_social_equilibrium;
use crate::time::GridTime;

pub type ReportLottery = Lottery<ReportPair>;

/// Which rung of the assignment ladder fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rung {
    /// The case's tie/closed condition (`if` row).
    Tie,
    /// The optimal first-passer time is a whole tick.
    OnTick,
    /// The relevant earliest time binds.
    EarliestBinds,
    /// Fair coin between the two neighbouring whole ticks.
    Coin,
    /// Single-row cases (no conflict, trail-first otherwise row).
    Only,
}

impl fmt::Display for Rung {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rung::Tie => "if",
            Rung::OnTick => "else-if-on-tick",
            Rung::EarliestBinds => "else-if-earliest",
            Rung::Coin => "else-coin",
            Rung::Only => "only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table1Assignment {
    pub label: CaseLabel,
    pub rung: Rung,
    pub assigned: ReportLottery,
}

impl Table1Assignment {
    pub fn on_grid(&self, scenario: &Scenario) -> bool {
        let grid = scenario.grid();
        self.assigned
            .outcomes()
            .all(|r| grid.contains(r.report1) && grid.contains(r.report2))
    }
}

/// Row-by-row transcription of the socially optimal equilibrium table.
///
/// Roles follow [`RoleView`]. The ideal first-passer time is
/// `lead_desired - (crossing - gap) / 2`, evaluated in half-units; it is
/// "on the grid" when it falls on a whole tick.
pub fn table1_assign(scenario: &Scenario) -> Table1Assignment {
    let class = classify(scenario);
    let v = class.roles;
    let tick = v.tick;
    let half = v.half_crossing;
    let half_tick = scenario.grid().half_tick();
    let ideal = v.lead_desired - GridTime::midpoint(v.crossing - v.gap(), GridTime::ZERO);
    let ideal_on_tick = scenario.grid().is_whole_tick(ideal);

    let pair = |lead: GridTime, trail: GridTime| match v.lead {
        Agent::One => ReportPair::new(lead, trail),
        Agent::Two => ReportPair::new(trail, lead),
    };
    let staggered = |lead: GridTime| Lottery::certain(pair(lead, lead + tick));
    let tie = |t: GridTime| Lottery::certain(pair(t, t));
    let coin = || {
        let (lo, hi) = (ideal - half_tick, ideal + half_tick);
        Lottery::coin(pair(lo, lo + tick), pair(hi, hi + tick))
    };
    // the shared else-if / else-if / else tail of every ladder
    let ladder = || -> (Rung, ReportLottery) {
        if ideal_on_tick {
            (Rung::OnTick, staggered(ideal.max(v.lead_earliest)))
        } else if ideal + half_tick <= v.lead_earliest {
            (Rung::EarliestBinds, staggered(v.lead_earliest))
        } else {
            (Rung::Coin, coin())
        }
    };

    let (rung, assigned) = match class.label {
        CaseLabel::NoConflict => (
            Rung::Only,
            Lottery::certain(pair(v.lead_desired, v.trail_desired)),
        ),
        CaseLabel::Lemma1 => {
            let d = v.lead_desired;
            if v.lead_earliest.max(d - half) == v.trail_earliest.max(d - half) {
                (Rung::Tie, tie(v.trail_earliest.max(d - half)))
            } else if ideal_on_tick {
                (Rung::OnTick, staggered(ideal.min(v.trail_earliest)))
            } else if v.trail_earliest <= ideal - half_tick {
                (Rung::EarliestBinds, staggered(v.trail_earliest))
            } else {
                (Rung::Coin, coin())
            }
        }
        CaseLabel::Lemma2 => {
            if (v.trail_desired - v.crossing).max(v.lead_earliest) == v.lead_desired {
                (
                    Rung::Tie,
                    Lottery::certain(pair(v.lead_desired, v.trail_desired)),
                )
            } else {
                ladder()
            }
        }
        CaseLabel::Lemma3 => {
            let hi = (v.trail_desired - half).max(v.trail_earliest);
            if v.lead_earliest.max(v.lead_desired - half) == hi {
                (Rung::Tie, tie(hi))
            } else {
                ladder()
            }
        }
        CaseLabel::Lemma4Former => {
            let hi = v.trail_desired - half;
            if v.lead_earliest.max(v.lead_desired - half) == hi {
                (Rung::Tie, tie(hi))
            } else {
                ladder()
            }
        }
        CaseLabel::Lemma4Latter => {
            let trail = (v.trail_desired - half).max(v.trail_earliest);
            if trail == v.lead_earliest {
                (Rung::Tie, tie(v.lead_earliest))
            } else {
                (Rung::Only, Lottery::certain(pair(trail + tick, trail)))
            }
        }
        CaseLabel::Lemma5 => {
            let lo = (v.trail_desired - v.crossing)
                .max(v.lead_desired - half)
                .max(v.lead_earliest);
            let hi = (v.trail_desired - half).min(v.lead_desired);
            if lo == hi {
                (Rung::Tie, tie(hi))
            } else {
                ladder()
            }
        }
    };
    Table1Assignment {
        label: class.label,
        rung,
        assigned,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MechanismSource {
    /// Row-by-row assignment table.
    #[default]
    Table1,
    /// Socially optimal equilibrium selected from the brute-force oracle set.
    OracleSelection,
    /// Baseline without a mechanism: each agent's report is its desired time.
    TruthfulFcfs,
}

impl fmt::Display for MechanismSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MechanismSource::Table1 => "table1",
            MechanismSource::OracleSelection => "oracle",
            MechanismSource::TruthfulFcfs => "baseline",
        })
    }
}

impl FromStr for MechanismSource {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "table1" => Ok(MechanismSource::Table1),
            "oracle" => Ok(MechanismSource::OracleSelection),
            "baseline" => Ok(MechanismSource::TruthfulFcfs),
            other => Err(format!(
                "unknown source `{other}` (expected table1, oracle or baseline)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismOutcome {
    pub assigned: ReportLottery,
    pub allocation: AllocationLottery,
    pub case: CaseLabel,
    pub source: MechanismSource,
    /// Table rung that fired (table source only).
    pub rung: Option<Rung>,
}

/// Runs the mechanism on reported types: picks the reports, then applies FCFS
/// to every branch and flattens the coins.
pub fn run_direct_mechanism(
    reported: &Scenario,
    model: CostModel,
    source: MechanismSource,
) -> Result<MechanismOutcome> {
    let case = classify(reported).label;
    let (assigned, rung) = match source {
        MechanismSource::Table1 => {
            let t = table1_assign(reported);
            (t.assigned, Some(t.rung))
        }
        MechanismSource::OracleSelection => {
            let eq = nash_oracle(reported, model);
            let sel = select_social_equilibrium(reported, model, &eq)?;
            (Lottery::certain(sel.reports), None)
        }
        MechanismSource::TruthfulFcfs => {
            let [p1, p2] = reported.profiles();
            (
                Lottery::certain(ReportPair::new(p1.desired, p2.desired)),
                None,
            )
        }
    };
    let mut failure = None;
    let allocation = assigned.flat_map(|r| match fcfs_allocate(reported, *r) {
        Ok(l) => l,
        Err(e) => {
            failure.get_or_insert(e);
            allocate_unchecked(reported, *r)
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(MechanismOutcome {
        assigned,
        allocation,
        case,
        source,
        rung,
    })
}

/// A misreport that strictly lowers the deviator's true expected cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfitableMisreport {
    pub agent: Agent,
    pub true_profile: AgentProfile,
    pub misreport: AgentProfile,
    pub truthful_cost: CostValue,
    pub deviating_cost: CostValue,
    pub truthful_allocation: AllocationLottery,
    pub deviating_allocation: AllocationLottery,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SPReport {
    pub scenario: Scenario,
    pub model: CostModel,
    pub source: MechanismSource,
    pub violations: Vec<ProfitableMisreport>,
    /// Agents whose own truthful outcome schedules them before their earliest time.
    pub truthful_infeasible: Vec<Agent>,
    /// Misreports the mechanism could not process (off-grid assignments).
    pub failed_runs: usize,
}

impl SPReport {
    pub fn violation_count(&self) -> usize {
        self.violations.len()
    }
}

/// Misreports considered for `agent`: every `(earliest, desired)` on the
/// grid with `earliest <= desired`, other than the truth. The baseline only
/// reads the desired time, so there only desired times vary.
fn misreports(scenario: &Scenario, agent: Agent, source: MechanismSource) -> Vec<AgentProfile> {
    let truth = *scenario.profile(agent);
    let grid = scenario.grid();
    let mut out = Vec::new();
    if source == MechanismSource::TruthfulFcfs {
        for d in grid.iter() {
            if d != truth.desired {
                out.push(AgentProfile::new(truth.earliest.min(d), d));
            }
        }
        return out;
    }
    for e in grid.iter() {
        for d in grid.iter().filter(|&d| d >= e) {
            let p = AgentProfile::new(e, d);
            if p != truth {
                out.push(p);
            }
        }
    }
    out
}

/// Exhaustive check over every unilateral misreport, using `run` to evaluate
/// the mechanism on reported scenarios.
pub fn verify_strategy_proofness_with(
    scenario: &Scenario,
    model: CostModel,
    source: MechanismSource,
    run: impl Fn(&Scenario) -> Result<AllocationLottery>,
) -> Result<SPReport> {
    let truthful = run(scenario)?;
    let mut violations = Vec::new();
    let mut truthful_infeasible = Vec::new();
    let mut failed_runs = 0;
    for agent in Agent::BOTH {
        let true_profile = *scenario.profile(agent);
        if !is_feasible_for(scenario, agent, &truthful) {
            truthful_infeasible.push(agent);
        }
        let truthful_cost = expected_agent_cost(model, &truthful, scenario, agent);
        for misreport in misreports(scenario, agent, source) {
            let reported = scenario.with_profile(agent, misreport)?;
            let outcome = match run(&reported) {
                Ok(l) => l,
                Err(_) => {
                    failed_runs += 1;
                    continue;
                }
            };
            // judged against the true earliest time: a slot the agent cannot
            // make is not a usable manipulation
            if !is_feasible_for(scenario, agent, &outcome) {
                continue;
            }
            let deviating_cost = expected_agent_cost(model, &outcome, scenario, agent);
            if deviating_cost < truthful_cost {
                violations.push(ProfitableMisreport {
                    agent,
                    true_profile,
                    misreport,
                    truthful_cost,
                    deviating_cost,
                    truthful_allocation: truthful.clone(),
                    deviating_allocation: outcome,
                });
            }
        }
    }
    Ok(SPReport {
        scenario: *scenario,
        model,
        source,
        violations,
        truthful_infeasible,
        failed_runs,
    })
}

pub fn verify_strategy_proofness(
    scenario: &Scenario,
    model: CostModel,
    source: MechanismSource,
) -> Result<SPReport> {
    verify_strategy_proofness_with(scenario, model, source, |s| {
        run_direct_mechanism(s, model, source).map(|o| o.allocation)
    })
}

/// Memoizes mechanism allocations across many strategy-proofness checks on
/// the same grid (misreported scenarios repeat across a sweep).
#[derive(Debug, Default)]
pub struct MechanismCache {
    model: CostModel,
    source: MechanismSource,
    memo: Mutex<HashMap<Scenario, std::result::Result<AllocationLottery, Error>>>,
}

impl MechanismCache {
    pub fn new(model: CostModel, source: MechanismSource) -> Self {
        MechanismCache {
            model,
            source,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn run(&self, scenario: &Scenario) -> Result<AllocationLottery> {
        if let Some(hit) = self.memo.lock().expect("cache lock").get(scenario) {
            return hit.clone();
        }
        let value = run_direct_mechanism(scenario, self.model, self.source).map(|o| o.allocation);
        self.memo
            .lock()
            .expect("cache lock")
            .insert(*scenario, value.clone());
        value
    }

    pub fn verify(&self, scenario: &Scenario) -> Result<SPReport> {
        verify_strategy_proofness_with(scenario, self.model, self.source, |s| self.run(s))
    }
}

/// Diffs the table assignment against the oracle's socially optimal
/// equilibrium: off-grid reports, non-equilibrium branches, or a different
/// expected social cost all count.
pub fn compare_table1(
    scenario: &Scenario,
    model: CostModel,
    oracle_set: &EquilibriumSet,
) -> Result<Option<DiscrepancyRow>> {
    let table = table1_assign(scenario);
    let selected = select_social_equilibrium(scenario, model, oracle_set)?;
    let selected_cost = selected.diagnostics.selected_cost;
    let on_grid = table.on_grid(scenario);
    let table_alloc = table
        .assigned
        .flat_map(|r| allocate_unchecked(scenario, *r));
    let table_cost = social_cost(model, &table_alloc, scenario);
    let all_equilibria = table.assigned.outcomes().all(|r| oracle_set.contains(r));
    if on_grid && all_equilibria && table_cost == selected_cost {
        return Ok(None);
    }
    Ok(Some(DiscrepancyRow {
        scenario: *scenario,
        model,
        label: table.label,
        kind: DiscrepancyKind::Table1 {
            label: table.label,
            rung: table.rung,
        },
        closed_form: format!("{} [{}] -> {}", table.assigned, table.rung, table_alloc),
        oracle: format!("{} -> {}", selected.reports, selected.lottery),
        closed_form_cost: Some(table_cost),
        oracle_cost: Some(selected_cost),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcfs::Allocation;

    fn scenario(e: (i64, i64), d: (i64, i64)) -> Scenario {
        Scenario::from_units(1, (0, 20), 4, (e.0, d.0), (e.1, d.1)).unwrap()
    }

    fn certain(r1: i64, r2: i64) -> ReportLottery {
        Lottery::certain(ReportPair::from_units(r1, r2))
    }

    #[test]
    fn table_rows() {
        let t = table1_assign(&scenario((0, 0), (8, 10)));
        assert_eq!((t.label, t.rung), (CaseLabel::Lemma3, Rung::OnTick));
        assert_eq!(t.assigned, certain(7, 8));
        assert_eq!(
            table1_assign(&scenario((0, 0), (4, 10))).assigned,
            certain(4, 10)
        );
        let t = table1_assign(&scenario((9, 5), (9, 10)));
        assert_eq!(t.assigned, certain(9, 8));
    }

    #[test]
    fn odd_gap_uses_coin() {
        // ideal = 8 - (4 - 1)/2 = 6.5, so the coin picks 6 or 7
        let t = table1_assign(&scenario((0, 0), (8, 9)));
        assert_eq!(t.rung, Rung::Coin);
        assert_eq!(
            t.assigned,
            Lottery::coin(ReportPair::from_units(6, 7), ReportPair::from_units(7, 8))
        );
    }

    #[test]
    fn mechanism_runs() {
        let q = CostModel::Quadratic;
        let s1 = scenario((0, 0), (8, 10));
        let out = run_direct_mechanism(&s1, q, MechanismSource::Table1).unwrap();
        assert_eq!(
            out.allocation,
            Lottery::certain(Allocation::from_units(7, 12))
        );
        let s2 = scenario((9, 10), (10, 10));
        let out = run_direct_mechanism(&s2, q, MechanismSource::OracleSelection).unwrap();
        assert_eq!(
            out.allocation,
            Lottery::certain(Allocation::from_units(9, 14))
        );
        let nc = scenario((0, 0), (4, 10));
        for src in [MechanismSource::Table1, MechanismSource::OracleSelection] {
            let out = run_direct_mechanism(&nc, q, src).unwrap();
            assert_eq!(
                out.allocation,
                Lottery::certain(Allocation::from_units(4, 10))
            );
        }
    }

    #[test]
    fn baseline_tie_manipulation() {
        let s1 = scenario((0, 0), (8, 10));
        let rep =
            verify_strategy_proofness(&s1, CostModel::Quadratic, MechanismSource::TruthfulFcfs)
                .unwrap();
        let hit = rep
            .violations
            .iter()
            .find(|v| v.agent == Agent::Two && v.misreport.desired == GridTime::from_units(8))
            .expect("tie manipulation");
        assert_eq!(hit.truthful_cost, 9.into());
        assert_eq!(hit.deviating_cost.to_string(), "6.5");
    }

    #[test]
    fn no_conflict_has_no_profitable_misreport() {
        let nc = scenario((0, 0), (4, 10));
        let rep =
            verify_strategy_proofness(&nc, CostModel::Quadratic, MechanismSource::Table1).unwrap();
        assert_eq!(rep.violation_count(), 0);
    }

    #[test]
    fn cached_runner_matches_direct() {
        let s1 = Scenario::from_units(1, (0, 8), 2, (0, 4), (1, 5)).unwrap();
        let q = CostModel::Quadratic;
        let cache = MechanismCache::new(q, MechanismSource::Table1);
        assert_eq!(
            cache.verify(&s1).unwrap(),
            verify_strategy_proofness(&s1, q, MechanismSource::Table1).unwrap()
        );
    }
}
