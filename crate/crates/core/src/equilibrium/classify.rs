use std::fmt;

use crate::fcfs::{Agent, Scenario};
use crate::time::GridTime;

/// Which equilibrium regime a scenario falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseLabel {
    /// The desired times are more than a crossing apart; truth-telling works.
    NoConflict,
    /// Equal desired times.
    Lemma1,
    /// Desired times less than half a crossing from being conflict-free.
    Lemma2,
    /// Close desired times, lead agent's earliest time no later than trail's.
    Lemma3,
    /// Close desired times, trail agent can start earlier; lead still passes first.
    Lemma4Former,
    /// Close desired times where the trail agent passes first.
    Lemma4Latter,
    /// Trail agent cannot pass before the lead agent's desired time.
    Lemma5,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 7] = [
        CaseLabel::NoConflict,
        CaseLabel::Lemma1,
        CaseLabel::Lemma2,
        CaseLabel::Lemma3,
        CaseLabel::Lemma4Former,
        CaseLabel::Lemma4Latter,
        CaseLabel::Lemma5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::NoConflict => "NoConflict",
            CaseLabel::Lemma1 => "Lemma1",
            CaseLabel::Lemma2 => "Lemma2",
            CaseLabel::Lemma3 => "Lemma3",
            CaseLabel::Lemma4Former => "Lemma4Former",
            CaseLabel::Lemma4Latter => "Lemma4Latter",
            CaseLabel::Lemma5 => "Lemma5",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scenario seen from its lead agent (earlier desired time; on equal
/// desired times, earlier earliest time; on a full tie, agent 1) and its
/// trail agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoleView {
    pub lead: Agent,
    pub trail: Agent,
    pub lead_earliest: GridTime,
    pub lead_desired: GridTime,
    pub trail_earliest: GridTime,
    pub trail_desired: GridTime,
    pub crossing: GridTime,
    pub half_crossing: GridTime,
    pub tick: GridTime,
}

impl RoleView {
    pub fn of(scenario: &Scenario) -> RoleView {
        let [p1, p2] = scenario.profiles();
        let lead = if (p1.desired, p1.earliest) <= (p2.desired, p2.earliest) {
            Agent::One
        } else {
            Agent::Two
        };
        let trail = lead.other();
        let (l, t) = (scenario.profile(lead), scenario.profile(trail));
        RoleView {
            lead,
            trail,
            lead_earliest: l.earliest,
            lead_desired: l.desired,
            trail_earliest: t.earliest,
            trail_desired: t.desired,
            crossing: scenario.crossing(),
            half_crossing: scenario.half_crossing(),
            tick: scenario.tick(),
        }
    }

    pub fn spacing(&self) -> GridTime {
        self.crossing + self.tick
    }

    /// Desired-time gap, trail minus lead (never negative).
    pub fn gap(&self) -> GridTime {
        self.trail_desired - self.lead_desired
    }

    pub fn has_conflict(&self) -> bool {
        self.lead_desired + self.crossing >= self.trail_desired
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Classification {
    pub label: CaseLabel,
    pub roles: RoleView,
    /// Human-readable account of the predicates that decided the label.
    pub predicates: &'static [&'static str],
}

pub fn classify(scenario: &Scenario) -> Classification {
    let v = RoleView::of(scenario);
    let (label, predicates): (CaseLabel, &'static [&'static str]) = if !v.has_conflict() {
        (
            CaseLabel::NoConflict,
            &["lead_desired + dt < trail_desired"],
        )
    } else if v.lead_desired == v.trail_desired {
        (
            CaseLabel::Lemma1,
            &[
                "lead_desired == trail_desired",
                "lead_earliest <= trail_earliest",
            ],
        )
    } else if v.trail_earliest > v.lead_desired {
        (
            CaseLabel::Lemma5,
            &[
                "lead_desired < trail_desired <= lead_desired + dt",
                "lead_desired < trail_earliest",
            ],
        )
    } else if v.lead_desired < v.trail_desired - v.half_crossing {
        (
            CaseLabel::Lemma2,
            &[
                "earliest times <= lead_desired",
                "trail_desired - dt <= lead_desired < trail_desired - dt/2",
            ],
        )
    } else if v.lead_earliest <= v.trail_earliest {
        (
            CaseLabel::Lemma3,
            &[
                "lead_earliest <= trail_earliest <= lead_desired",
                "lead_desired >= trail_desired - dt/2",
            ],
        )
    } else if v.lead_earliest <= v.trail_desired - v.half_crossing {
        (
            CaseLabel::Lemma4Former,
            &[
                "trail_earliest < lead_earliest <= lead_desired",
                "lead_desired >= trail_desired - dt/2",
                "lead_earliest <= trail_desired - dt/2",
            ],
        )
    } else {
        (
            CaseLabel::Lemma4Latter,
            &[
                "trail_earliest < lead_earliest <= lead_desired",
                "lead_desired >= trail_desired - dt/2",
                "trail_desired - dt/2 < lead_earliest",
            ],
        )
    };
    Classification {
        label,
        roles: v,
        predicates,
    }
}
