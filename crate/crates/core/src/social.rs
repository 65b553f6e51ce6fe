//! Socially optimal allocations and the socially optimal equilibrium.
//!
//! Brute force is the reference here. The case formulas
//! ([`closed_form_social_cases`]) and the equilibrium row formulas
//! ([`closed_form_theorem1`]) are transcriptions under test, and
//! [`crosscheck`] reports every place they disagree with direct search.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::equilibrium::{classify, CaseLabel, EquilibriumSet, RoleView};
use crate::error::{Error, Result};
use crate::fcfs::{
    allocate_unchecked, Agent, Allocation, AllocationLottery, Lottery, ReportPair, Scenario,
};
use crate::payoff::{allocation_social_cost, social_cost, CostModel, CostValue};
use crate::rational::Rational;
use crate::report::{DiscrepancyKind, DiscrepancyReport, DiscrepancyRow};
use crate::time::GridTime;

/// Minimum gap between the two allocated times in the social optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum SeparationMode {
    /// `|t1 - t2| >= crossing`, as the optimization is literally stated.
    PaperEq4,
    /// `|t1 - t2| >= crossing + tick`, the spacing every FCFS outcome has.
    #[default]
    FcfsCompatible,
}

impl SeparationMode {
    pub fn min_gap(&self, scenario: &Scenario) -> GridTime {
        match self {
            SeparationMode::PaperEq4 => scenario.crossing(),
            SeparationMode::FcfsCompatible => scenario.spacing(),
        }
    }
}

impl fmt::Display for SeparationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeparationMode::PaperEq4 => "eq4",
            SeparationMode::FcfsCompatible => "fcfs",
        })
    }
}

impl FromStr for SeparationMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "eq4" => Ok(SeparationMode::PaperEq4),
            "fcfs" => Ok(SeparationMode::FcfsCompatible),
            other => Err(format!(
                "unknown separation mode `{other}` (expected fcfs or eq4)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SociallyOptimalAllocation {
    pub separation: SeparationMode,
    /// Canonical pick: a fair coin over mirrored minimizers for equal desired
    /// times, otherwise one deterministic minimizer.
    pub lottery: AllocationLottery,
    /// Every cost-minimizing pair in the search window.
    pub argmin_set: BTreeSet<Allocation>,
    pub cost: CostValue,
}

impl SociallyOptimalAllocation {
    /// Every branch of `lottery` is an exact minimizer.
    pub fn attained_by(&self, lottery: &AllocationLottery) -> bool {
        lottery.outcomes().all(|a| self.argmin_set.contains(a))
    }
}

/// The search window for allocated times: whole ticks within one spacing
/// of the reporting bounds on either side.
fn allocation_window(scenario: &Scenario) -> Vec<GridTime> {
    let grid = scenario.grid();
    let pad = scenario.spacing();
    grid.ticks_between(grid.lower() - pad, grid.upper() + pad)
}

fn deviation(scenario: &Scenario, a: &Allocation, agent: Agent) -> GridTime {
    (a.time(agent) - scenario.profile(agent).desired).abs()
}

/// Exhaustive minimization of the summed deviation cost subject to the
/// separation constraint. Earliest times are not imposed.
pub fn socially_optimal_allocation(
    scenario: &Scenario,
    model: CostModel,
    separation: SeparationMode,
) -> Result<SociallyOptimalAllocation> {
    let gap = separation.min_gap(scenario);
    let window = allocation_window(scenario);
    let mut best: Option<CostValue> = None;
    let mut argmin_set = BTreeSet::new();
    for &t1 in &window {
        for &t2 in &window {
            let a = Allocation::new(t1, t2);
            if a.separation() < gap {
                continue;
            }
            let c = allocation_social_cost(model, &a, scenario);
            match best {
                Some(b) if c > b => {}
                Some(b) if c == b => {
                    argmin_set.insert(a);
                }
                _ => {
                    best = Some(c);
                    argmin_set.clear();
                    argmin_set.insert(a);
                }
            }
        }
    }
    let cost = best.ok_or(Error::NoFeasibleAllocation)?;

    let [p1, p2] = scenario.profiles();
    let lottery = if p1.desired == p2.desired {
        // the second passer absorbs the longer deviation
        let key = |a: &Allocation| {
            let first = a.first_passer().unwrap_or(Agent::One);
            let lead = deviation(scenario, a, first);
            let trail = deviation(scenario, a, first.other());
            (lead - trail, *a)
        };
        let pick = *argmin_set
            .iter()
            .min_by_key(|a| key(a))
            .expect("non-empty argmin");
        if argmin_set.contains(&pick.swapped()) && pick.swapped() != pick {
            Lottery::coin(pick, pick.swapped())
        } else {
            Lottery::certain(pick)
        }
    } else {
        let roles = RoleView::of(scenario);
        let key = |a: &Allocation| {
            let lead = deviation(scenario, a, roles.lead);
            let trail = deviation(scenario, a, roles.trail);
            (lead - trail, *a)
        };
        Lottery::certain(
            *argmin_set
                .iter()
                .min_by_key(|a| key(a))
                .expect("non-empty argmin"),
        )
    };
    Ok(SociallyOptimalAllocation {
        separation,
        lottery,
        argmin_set,
        cost,
    })
}

/// Which socially optimal case formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SocialCase {
    /// Equal desired times.
    I,
    /// Different desired times, gap an even number of ticks.
    II,
    /// Different desired times, gap an odd number of ticks.
    III,
}

impl SocialCase {
    pub fn name(&self) -> &'static str {
        match self {
            SocialCase::I => "i",
            SocialCase::II => "ii",
            SocialCase::III => "iii",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedFormOptimum {
    pub case: SocialCase,
    pub lottery: AllocationLottery,
}

/// Literal case formulas for the socially optimal allocation; no search.
pub fn closed_form_social_cases(scenario: &Scenario) -> Result<ClosedFormOptimum> {
    let v = RoleView::of(scenario);
    if !v.has_conflict() {
        return Err(Error::NoConflict);
    }
    let half = v.half_crossing;
    if v.lead_desired == v.trail_desired {
        let d = v.lead_desired;
        let early = d - half;
        let late = d + half + v.tick;
        return Ok(ClosedFormOptimum {
            case: SocialCase::I,
            lottery: Lottery::coin(Allocation::new(early, late), Allocation::new(late, early)),
        });
    }
    let gap = v.gap();
    let place = |shift: GridTime| {
        Allocation::ordered(
            v.lead,
            v.lead_desired - shift,
            v.trail_desired + shift + v.tick,
        )
    };
    let half_gap_is_tick = gap
        .checked_half()
        .is_some_and(|h| h.half_units() % v.tick.half_units() == 0);
    if half_gap_is_tick {
        let shift = GridTime::midpoint(v.crossing - gap, GridTime::ZERO);
        Ok(ClosedFormOptimum {
            case: SocialCase::II,
            lottery: Lottery::certain(place(shift)),
        })
    } else {
        // coin b' picks the rounding direction of the half-tick shift
        let up = GridTime::midpoint(v.crossing - gap + v.tick, GridTime::ZERO);
        let down = GridTime::midpoint(v.crossing - gap - v.tick, GridTime::ZERO);
        Ok(ClosedFormOptimum {
            case: SocialCase::III,
            lottery: Lottery::coin(place(up), place(down)),
        })
    }
}

/// One equilibrium report pair and the FCFS lottery it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationSet {
    pub entries: Vec<(ReportPair, AllocationLottery)>,
}

impl AllocationSet {
    pub fn allocations(&self) -> impl Iterator<Item = &Allocation> {
        self.entries.iter().flat_map(|(_, l)| l.outcomes())
    }
}

pub fn equilibrium_allocations(scenario: &Scenario, eqset: &EquilibriumSet) -> AllocationSet {
    AllocationSet {
        entries: eqset
            .iter()
            .map(|r| (*r, allocate_unchecked(scenario, *r)))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionDiagnostics {
    /// Uniform shift of the selected allocation from the nearest minimizer
    /// with the same passing order, when such a shift exists.
    pub epsilon: Option<GridTime>,
    /// First passer's deviation at the matching optimal branch.
    pub sigma: Option<GridTime>,
    pub achieved_optimal: bool,
    pub selected_cost: CostValue,
    pub optimal_cost: CostValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialSelection {
    pub reports: ReportPair,
    pub lottery: AllocationLottery,
    pub diagnostics: SelectionDiagnostics,
    pub optimum: SociallyOptimalAllocation,
}

fn l1(a: &Allocation, b: &Allocation) -> i128 {
    ((a.t1 - b.t1).abs() + (a.t2 - b.t2).abs()).half_units() as i128
}

/// Expected L1 distance (half-units) from a lottery to the nearest branch of
/// the canonical optimum.
fn distance_to(lottery: &AllocationLottery, target: &AllocationLottery) -> Rational {
    lottery
        .branches()
        .iter()
        .map(|(p, a)| {
            let d = target.outcomes().map(|b| l1(a, b)).min().unwrap_or(0);
            *p * Rational::from_integer(d)
        })
        .sum()
}

fn shift_from_optimum(optimum: &SociallyOptimalAllocation, a: &Allocation) -> Option<GridTime> {
    optimum
        .argmin_set
        .iter()
        .filter(|m| m.first_passer() == a.first_passer())
        .filter(|m| a.t1 - m.t1 == a.t2 - m.t2)
        .map(|m| a.t1 - m.t1)
        .min_by_key(|s| (s.abs(), *s))
}

fn diagnose(
    scenario: &Scenario,
    model: CostModel,
    optimum: &SociallyOptimalAllocation,
    lottery: &AllocationLottery,
) -> SelectionDiagnostics {
    let shifts: Option<Vec<GridTime>> = lottery
        .outcomes()
        .map(|a| shift_from_optimum(optimum, a))
        .collect();
    let epsilon = shifts.and_then(|s| s.iter().all(|x| *x == s[0]).then(|| s[0]));
    let sigma = lottery.outcomes().next().and_then(|a| {
        let first = a.first_passer()?;
        let star = optimum
            .lottery
            .outcomes()
            .find(|m| m.first_passer() == Some(first))
            .or_else(|| {
                optimum
                    .argmin_set
                    .iter()
                    .find(|m| m.first_passer() == Some(first))
            })?;
        Some(scenario.profile(first).desired - star.time(first))
    });
    let selected_cost = social_cost(model, lottery, scenario);
    SelectionDiagnostics {
        epsilon,
        sigma,
        achieved_optimal: optimum.attained_by(lottery),
        selected_cost,
        optimal_cost: optimum.cost,
    }
}

/// Picks the equilibrium with the lowest expected social cost.
///
/// Ties go to the allocation closest (expected L1) to the canonical optimum,
/// then to the lexicographically smallest branch list.
pub fn select_social_equilibrium(
    scenario: &Scenario,
    model: CostModel,
    eqset: &EquilibriumSet,
) -> Result<SocialSelection> {
    if eqset.is_empty() {
        return Err(Error::EmptyEquilibriumSet);
    }
    let optimum = socially_optimal_allocation(scenario, model, SeparationMode::FcfsCompatible)?;
    let set = equilibrium_allocations(scenario, eqset);
    let (reports, lottery) = set
        .entries
        .into_iter()
        .min_by(|(ra, la), (rb, lb)| {
            social_cost(model, la, scenario)
                .cmp(&social_cost(model, lb, scenario))
                .then_with(|| {
                    distance_to(la, &optimum.lottery).cmp(&distance_to(lb, &optimum.lottery))
                })
                .then_with(|| {
                    la.branches()
                        .iter()
                        .map(|b| b.1)
                        .cmp(lb.branches().iter().map(|b| b.1))
                })
                .then_with(|| ra.cmp(rb))
        })
        .expect("non-empty equilibrium set");
    let diagnostics = diagnose(scenario, model, &optimum, &lottery);
    Ok(SocialSelection {
        reports,
        lottery,
        diagnostics,
        optimum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Theorem1Answer {
    pub row: u8,
    pub allocation: Allocation,
}

/// The two halves of the premise behind the row formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Theorem1Premise {
    /// More than one equilibrium report pair.
    pub multiple: bool,
    /// No equilibrium allocation attains the social optimum.
    pub unattained: bool,
}

impl Theorem1Premise {
    pub fn holds(&self) -> bool {
        self.multiple && self.unattained
    }
}

pub fn theorem1_premise(
    scenario: &Scenario,
    model: CostModel,
    eqset: &EquilibriumSet,
) -> Result<Theorem1Premise> {
    if eqset.is_empty() {
        return Err(Error::EmptyEquilibriumSet);
    }
    let optimum = socially_optimal_allocation(scenario, model, SeparationMode::FcfsCompatible)?;
    let set = equilibrium_allocations(scenario, eqset);
    Ok(Theorem1Premise {
        multiple: eqset.len() > 1,
        unattained: !set.entries.iter().any(|(_, l)| optimum.attained_by(l)),
    })
}

/// The three-row closed form for the socially optimal equilibrium allocation.
pub fn theorem1_formula(scenario: &Scenario) -> Theorem1Answer {
    let v = RoleView::of(scenario);
    let place = |lead_time: GridTime, trail_time: GridTime| match v.lead {
        Agent::One => Allocation::new(lead_time, trail_time),
        Agent::Two => Allocation::new(trail_time, lead_time),
    };
    let spacing = v.spacing();
    if v.lead_desired == v.trail_desired {
        let t = v.trail_earliest;
        return Theorem1Answer {
            row: 1,
            allocation: place(t, t + spacing),
        };
    }
    let trail_goes_first = v.trail_earliest < v.lead_earliest
        && v.lead_earliest <= v.lead_desired
        && v.lead_desired < v.trail_desired
        && v.trail_desired - v.half_crossing < v.lead_earliest;
    if trail_goes_first {
        let bar = (v.trail_desired - v.half_crossing).max(v.trail_earliest);
        return Theorem1Answer {
            row: 2,
            allocation: place(bar + spacing, bar),
        };
    }
    let t = v.lead_earliest;
    Theorem1Answer {
        row: 3,
        allocation: place(t, t + spacing),
    }
}

/// Row formula, refused when some equilibrium already attains the optimum.
///
/// Single-equilibrium scenarios are accepted: the worked row examples are
/// all of that kind.
pub fn closed_form_theorem1(
    scenario: &Scenario,
    model: CostModel,
    eqset: &EquilibriumSet,
) -> Result<Theorem1Answer> {
    if !theorem1_premise(scenario, model, eqset)?.unattained {
        return Err(Error::PremiseViolated(
            "an equilibrium already attains the social optimum".into(),
        ));
    }
    Ok(theorem1_formula(scenario))
}

fn row(
    scenario: &Scenario,
    model: CostModel,
    label: CaseLabel,
    kind: DiscrepancyKind,
    closed: (String, Option<CostValue>),
    oracle: (String, Option<CostValue>),
) -> DiscrepancyRow {
    DiscrepancyRow {
        scenario: *scenario,
        model,
        label,
        kind,
        closed_form: closed.0,
        oracle: oracle.0,
        closed_form_cost: closed.1,
        oracle_cost: oracle.1,
    }
}

/// Case formulas against brute force (both separation modes), and the row
/// formula against selection over the given (oracle) equilibrium set.
pub fn crosscheck_with(
    scenario: &Scenario,
    model: CostModel,
    oracle_set: &EquilibriumSet,
) -> Result<DiscrepancyReport> {
    let label = classify(scenario).label;
    let mut report = DiscrepancyReport::default();
    if let Ok(formula) = closed_form_social_cases(scenario) {
        for mode in [SeparationMode::FcfsCompatible, SeparationMode::PaperEq4] {
            let brute = socially_optimal_allocation(scenario, model, mode)?;
            if !brute.attained_by(&formula.lottery) {
                report.push(row(
                    scenario,
                    model,
                    label,
                    DiscrepancyKind::SocialCase {
                        case: formula.case,
                        separation: mode,
                    },
                    (
                        formula.lottery.to_string(),
                        Some(social_cost(model, &formula.lottery, scenario)),
                    ),
                    (
                        brute
                            .argmin_set
                            .iter()
                            .map(|a| a.to_string())
                            .collect::<Vec<_>>()
                            .join(" "),
                        Some(brute.cost),
                    ),
                ));
            }
        }
    }
    let premise = theorem1_premise(scenario, model, oracle_set)?;
    if premise.unattained && label != CaseLabel::NoConflict {
        let answer = theorem1_formula(scenario);
        let selected = select_social_equilibrium(scenario, model, oracle_set)?;
        let formula = Lottery::certain(answer.allocation);
        if formula != selected.lottery {
            report.push(row(
                scenario,
                model,
                label,
                DiscrepancyKind::Theorem1 {
                    row: answer.row,
                    in_premise: premise.holds(),
                },
                (
                    answer.allocation.to_string(),
                    Some(social_cost(model, &formula, scenario)),
                ),
                (
                    selected.lottery.to_string(),
                    Some(selected.diagnostics.selected_cost),
                ),
            ));
        }
    }
    Ok(report)
}

pub fn crosscheck(scenario: &Scenario, model: CostModel) -> Result<DiscrepancyReport> {
    let oracle = crate::equilibrium::nash_oracle(scenario, model);
    crosscheck_with(scenario, model, &oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{closed_form_equilibria, nash_oracle};

    fn a(t1: i64, t2: i64) -> Allocation {
        Allocation::from_units(t1, t2)
    }

    fn scenario(e: (i64, i64), d: (i64, i64)) -> Scenario {
        Scenario::from_units(1, (0, 20), 4, (e.0, d.0), (e.1, d.1)).unwrap()
    }

    #[test]
    fn equal_desired_gives_fair_coin() {
        let s = scenario((0, 0), (10, 10));
        let opt =
            socially_optimal_allocation(&s, CostModel::Quadratic, SeparationMode::FcfsCompatible)
                .unwrap();
        assert_eq!(opt.lottery, Lottery::coin(a(8, 13), a(13, 8)));
        assert_eq!(
            closed_form_social_cases(&s).unwrap().lottery,
            Lottery::coin(a(8, 13), a(13, 8))
        );
    }

    #[test]
    fn s1_optimum() {
        let s = scenario((0, 0), (8, 10));
        let opt =
            socially_optimal_allocation(&s, CostModel::Quadratic, SeparationMode::FcfsCompatible)
                .unwrap();
        assert_eq!(opt.argmin_set, BTreeSet::from([a(7, 12), a(6, 11)]));
        assert_eq!(opt.lottery, Lottery::certain(a(7, 12)));
        assert_eq!(opt.cost, 5.into());
        let cf = closed_form_social_cases(&s).unwrap();
        assert_eq!(cf.case, SocialCase::II);
        assert_eq!(cf.lottery, Lottery::certain(a(7, 12)));
    }

    #[test]
    fn no_conflict_optimum_is_truthful() {
        let s = scenario((0, 0), (4, 10));
        let opt =
            socially_optimal_allocation(&s, CostModel::Quadratic, SeparationMode::FcfsCompatible)
                .unwrap();
        assert_eq!(opt.lottery, Lottery::certain(a(4, 10)));
        assert!(opt.cost.is_zero());
        assert_eq!(closed_form_social_cases(&s), Err(Error::NoConflict));
    }

    #[test]
    fn odd_gap_case_formula() {
        let s = scenario((0, 0), (8, 9));
        let cf = closed_form_social_cases(&s).unwrap();
        assert_eq!(cf.case, SocialCase::III);
        assert_eq!(cf.lottery, Lottery::coin(a(7, 11), a(6, 12)));
    }

    #[test]
    fn equilibrium_allocation_images() {
        let s = scenario((0, 0), (8, 10));
        let set = equilibrium_allocations(&s, &closed_form_equilibria(&s).set);
        let allocs: Vec<_> = set.allocations().copied().collect();
        assert_eq!(allocs, vec![a(6, 11), a(7, 12)]);
        let s3 = scenario((9, 5), (9, 10));
        let set = equilibrium_allocations(&s3, &closed_form_equilibria(&s3).set);
        assert_eq!(
            set.allocations().copied().collect::<Vec<_>>(),
            vec![a(13, 8)]
        );
    }

    #[test]
    fn selection_examples() {
        let q = CostModel::Quadratic;
        let s1 = scenario((0, 0), (8, 10));
        let sel = select_social_equilibrium(&s1, q, &closed_form_equilibria(&s1).set).unwrap();
        assert_eq!(sel.reports, ReportPair::from_units(7, 8));
        assert_eq!(sel.lottery, Lottery::certain(a(7, 12)));
        assert!(sel.diagnostics.achieved_optimal);
        assert_eq!(sel.diagnostics.epsilon, Some(GridTime::ZERO));

        let s2 = scenario((9, 10), (10, 10));
        let sel = select_social_equilibrium(&s2, q, &nash_oracle(&s2, q)).unwrap();
        assert_eq!(sel.lottery, Lottery::certain(a(9, 14)));
        assert_eq!(sel.diagnostics.epsilon, Some(GridTime::from_units(1)));
        assert!(!sel.diagnostics.achieved_optimal);
        assert_eq!(sel.diagnostics.selected_cost, 17.into());
    }

    #[test]
    fn empty_set_is_an_error() {
        let s = scenario((0, 0), (8, 10));
        let empty = EquilibriumSet::new(crate::equilibrium::Provenance::Oracle, BTreeSet::new());
        assert_eq!(
            select_social_equilibrium(&s, CostModel::Quadratic, &empty).unwrap_err(),
            Error::EmptyEquilibriumSet
        );
    }

    #[test]
    fn row_formulas() {
        assert_eq!(
            theorem1_formula(&scenario((9, 5), (9, 10))).allocation,
            a(13, 8)
        );
        assert_eq!(theorem1_formula(&scenario((9, 5), (9, 10))).row, 2);
        let l5 = theorem1_formula(&scenario((7, 9), (8, 10)));
        assert_eq!((l5.row, l5.allocation), (3, a(7, 12)));
        let s2 = theorem1_formula(&scenario((9, 10), (10, 10)));
        assert_eq!((s2.row, s2.allocation), (1, a(10, 15)));
    }

    #[test]
    fn premise_rejects_attained_optimum() {
        let q = CostModel::Quadratic;
        let s1 = scenario((0, 0), (8, 10));
        assert!(closed_form_theorem1(&s1, q, &nash_oracle(&s1, q)).is_err());
        let s3 = scenario((9, 5), (9, 10));
        let p = theorem1_premise(&s3, q, &nash_oracle(&s3, q)).unwrap();
        assert!(p.unattained && !p.multiple);
        assert_eq!(
            closed_form_theorem1(&s3, q, &nash_oracle(&s3, q))
                .unwrap()
                .allocation,
            a(13, 8)
        );
    }
}
