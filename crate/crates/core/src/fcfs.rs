//! The intersection manager's first-come-first-serve rule.
//!
//! Randomness never happens in here. A tie is returned as an explicit
//! two-branch lottery and callers take expectations (or sample with their
//! own seeded generator).

use std::fmt;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::time::{GridTime, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agent {
    One,
    Two,
}

impl Agent {
    pub const BOTH: [Agent; 2] = [Agent::One, Agent::Two];

    pub fn other(self) -> Agent {
        match self {
            Agent::One => Agent::Two,
            Agent::Two => Agent::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Agent::One => 0,
            Agent::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent {}", self.number())
    }
}

/// Private type of one agent: earliest possible and desired passing times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentProfile {
    pub earliest: GridTime,
    pub desired: GridTime,
}

impl AgentProfile {
    pub fn new(earliest: GridTime, desired: GridTime) -> Self {
        AgentProfile { earliest, desired }
    }

    pub fn from_units(earliest: i64, desired: i64) -> Self {
        AgentProfile::new(
            GridTime::from_units(earliest),
            GridTime::from_units(desired),
        )
    }
}

/// One instance of the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    grid: TimeGrid,
    crossing: GridTime,
    profiles: [AgentProfile; 2],
}

impl Scenario {
    pub fn new(
        grid: TimeGrid,
        crossing: GridTime,
        agent1: AgentProfile,
        agent2: AgentProfile,
    ) -> Result<Self> {
        if crossing <= GridTime::ZERO {
            return Err(Error::InvalidScenario(format!(
                "crossing duration must be positive, got {crossing}"
            )));
        }
        let half = crossing.checked_half();
        if !half.is_some_and(|h| h.half_units() % grid.tick().half_units() == 0) {
            return Err(Error::InvalidScenario(format!(
                "crossing duration {crossing} must be an even number of ticks"
            )));
        }
        for (agent, p) in Agent::BOTH.iter().zip([agent1, agent2]) {
            if !grid.contains(p.earliest) || !grid.contains(p.desired) {
                return Err(Error::InvalidScenario(format!(
                    "{agent}: earliest {} and desired {} must lie on the grid {grid}",
                    p.earliest, p.desired
                )));
            }
            if p.earliest > p.desired {
                return Err(Error::InvalidScenario(format!(
                    "{agent}: earliest {} is after desired {}",
                    p.earliest, p.desired
                )));
            }
        }
        Ok(Scenario {
            grid,
            crossing,
            profiles: [agent1, agent2],
        })
    }

    /// Convenience constructor in whole time-units: `(earliest, desired)` per agent.
    pub fn from_units(
        tick: i64,
        bounds: (i64, i64),
        crossing: i64,
        agent1: (i64, i64),
        agent2: (i64, i64),
    ) -> Result<Self> {
        Scenario::new(
            TimeGrid::new(tick, bounds.0, bounds.1)?,
            GridTime::from_units(crossing),
            AgentProfile::from_units(agent1.0, agent1.1),
            AgentProfile::from_units(agent2.0, agent2.1),
        )
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn crossing(&self) -> GridTime {
        self.crossing
    }

    pub fn half_crossing(&self) -> GridTime {
        GridTime::midpoint(self.crossing, GridTime::ZERO)
    }

    pub fn tick(&self) -> GridTime {
        self.grid.tick()
    }

    /// Minimum gap FCFS leaves between the two passing times: `crossing + tick`.
    pub fn spacing(&self) -> GridTime {
        self.crossing + self.grid.tick()
    }

    pub fn profile(&self, agent: Agent) -> &AgentProfile {
        &self.profiles[agent.index()]
    }

    pub fn profiles(&self) -> [AgentProfile; 2] {
        self.profiles
    }

    pub fn with_profile(&self, agent: Agent, profile: AgentProfile) -> Result<Scenario> {
        let mut profiles = self.profiles;
        profiles[agent.index()] = profile;
        Scenario::new(self.grid, self.crossing, profiles[0], profiles[1])
    }

    /// Same scenario with the agent labels exchanged.
    pub fn swapped(&self) -> Scenario {
        Scenario {
            profiles: [self.profiles[1], self.profiles[0]],
            ..*self
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.profiles;
        write!(
            f,
            "grid {} dt {} e=({},{}) d=({},{})",
            self.grid, self.crossing, a.earliest, b.earliest, a.desired, b.desired
        )
    }
}

/// Reported passing times, one per agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReportPair {
    pub report1: GridTime,
    pub report2: GridTime,
}

impl ReportPair {
    pub fn new(report1: GridTime, report2: GridTime) -> Self {
        ReportPair { report1, report2 }
    }

    pub fn from_units(r1: i64, r2: i64) -> Self {
        ReportPair::new(GridTime::from_units(r1), GridTime::from_units(r2))
    }

    /// Builds a pair from one agent's own report and the opponent's.
    pub fn with_own(agent: Agent, own: GridTime, opponent: GridTime) -> Self {
        match agent {
            Agent::One => ReportPair::new(own, opponent),
            Agent::Two => ReportPair::new(opponent, own),
        }
    }

    pub fn get(&self, agent: Agent) -> GridTime {
        match agent {
            Agent::One => self.report1,
            Agent::Two => self.report2,
        }
    }

    pub fn swapped(&self) -> ReportPair {
        ReportPair::new(self.report2, self.report1)
    }
}

impl fmt::Display for ReportPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.report1, self.report2)
    }
}

/// Allocated passing times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation {
    pub t1: GridTime,
    pub t2: GridTime,
}

impl Allocation {
    pub fn new(t1: GridTime, t2: GridTime) -> Self {
        Allocation { t1, t2 }
    }

    pub fn from_units(t1: i64, t2: i64) -> Self {
        Allocation::new(GridTime::from_units(t1), GridTime::from_units(t2))
    }

    /// Allocation built from the first passer's and second passer's times.
    pub fn ordered(first: Agent, first_time: GridTime, second_time: GridTime) -> Self {
        match first {
            Agent::One => Allocation::new(first_time, second_time),
            Agent::Two => Allocation::new(second_time, first_time),
        }
    }

    pub fn time(&self, agent: Agent) -> GridTime {
        match agent {
            Agent::One => self.t1,
            Agent::Two => self.t2,
        }
    }

    /// The agent that passes first; `None` when both times coincide.
    pub fn first_passer(&self) -> Option<Agent> {
        match self.t1.cmp(&self.t2) {
            std::cmp::Ordering::Less => Some(Agent::One),
            std::cmp::Ordering::Greater => Some(Agent::Two),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn separation(&self) -> GridTime {
        (self.t1 - self.t2).abs()
    }

    pub fn swapped(&self) -> Allocation {
        Allocation::new(self.t2, self.t1)
    }

    pub fn shifted(&self, by: GridTime) -> Allocation {
        Allocation::new(self.t1 + by, self.t2 + by)
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.t1, self.t2)
    }
}

/// A finite lottery over outcomes with exact probabilities.
///
/// Branches are kept merged and sorted, so two lotteries describing the same
/// distribution compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lottery<T> {
    branches: Vec<(Rational, T)>,
}

impl<T: Ord + Copy> Lottery<T> {
    pub fn certain(outcome: T) -> Self {
        Lottery {
            branches: vec![(Rational::from_integer(1), outcome)],
        }
    }

    /// Fair coin between two outcomes.
    pub fn coin(a: T, b: T) -> Self {
        let half = Rational::new(1, 2);
        Lottery::from_branches(vec![(half, a), (half, b)])
    }

    /// Merges equal outcomes and sorts; probabilities must sum to one.
    pub fn from_branches(mut raw: Vec<(Rational, T)>) -> Self {
        #[allow(clippy::unnecessary_sort_by)]
        raw.sort_by(|a, b| a.1.cmp(&b.1));
        let mut branches: Vec<(Rational, T)> = Vec::with_capacity(raw.len());
        for (p, outcome) in raw {
            match branches.last_mut() {
                Some((q, last)) if *last == outcome => *q += p,
                _ => branches.push((p, outcome)),
            }
        }
        debug_assert_eq!(
            branches.iter().map(|b| b.0).sum::<Rational>(),
            Rational::from_integer(1)
        );
        Lottery { branches }
    }

    pub fn branches(&self) -> &[(Rational, T)] {
        &self.branches
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &T> {
        self.branches.iter().map(|(_, o)| o)
    }

    pub fn is_deterministic(&self) -> bool {
        self.branches.len() == 1
    }

    pub fn as_certain(&self) -> Option<T> {
        self.is_deterministic().then(|| self.branches[0].1)
    }

    /// Pushes every branch through `f` and flattens the nested lotteries.
    pub fn flat_map<U: Ord + Copy>(&self, mut f: impl FnMut(&T) -> Lottery<U>) -> Lottery<U> {
        let mut raw = Vec::new();
        for (p, outcome) in &self.branches {
            for (q, inner) in f(outcome).branches {
                raw.push((*p * q, inner));
            }
        }
        Lottery::from_branches(raw)
    }
}

impl<T: fmt::Display> fmt::Display for Lottery<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [(_, only)] = self.branches.as_slice() {
            return write!(f, "{only}");
        }
        for (k, (p, o)) in self.branches.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{p}*{o}")?;
        }
        Ok(())
    }
}

pub type AllocationLottery = Lottery<Allocation>;

/// Allocates the intersection to the earlier report; ties go to a fair coin.
///
/// The first passer gets exactly its report, the second passer gets its own
/// report or `first + crossing + tick`, whichever is later. Allocated times
/// may exceed the grid's upper bound.
pub fn fcfs_allocate(scenario: &Scenario, reports: ReportPair) -> Result<AllocationLottery> {
    for r in [reports.report1, reports.report2] {
        if !scenario.grid().contains(r) {
            return Err(Error::OffGridReport { report: r });
        }
    }
    Ok(allocate_unchecked(scenario, reports))
}

/// `fcfs_allocate` for reports already known to be on the grid.
pub(crate) fn allocate_unchecked(scenario: &Scenario, reports: ReportPair) -> AllocationLottery {
    let spacing = scenario.spacing();
    let (r1, r2) = (reports.report1, reports.report2);
    match r1.cmp(&r2) {
        std::cmp::Ordering::Less => Lottery::certain(Allocation::new(r1, r2.max(r1 + spacing))),
        std::cmp::Ordering::Greater => Lottery::certain(Allocation::new(r1.max(r2 + spacing), r2)),
        std::cmp::Ordering::Equal => Lottery::coin(
            Allocation::new(r1, r1 + spacing),
            Allocation::new(r1 + spacing, r1),
        ),
    }
}

/// Both agents pass no earlier than their earliest possible times.
pub fn is_feasible(scenario: &Scenario, allocation: &Allocation) -> bool {
    Agent::BOTH
        .iter()
        .all(|&a| allocation.time(a) >= scenario.profile(a).earliest)
}

pub fn lottery_is_feasible(scenario: &Scenario, lottery: &AllocationLottery) -> bool {
    lottery.outcomes().all(|a| is_feasible(scenario, a))
}

/// Every branch lets `agent` pass no earlier than its earliest time.
pub fn is_feasible_for(scenario: &Scenario, agent: Agent, lottery: &AllocationLottery) -> bool {
    let earliest = scenario.profile(agent).earliest;
    lottery.outcomes().all(|a| a.time(agent) >= earliest)
}
