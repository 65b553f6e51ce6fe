//! FCFS allocation of report pairs, including the fair coin on a tie, and
//! the exact expected costs that follow.

use intersection_game::payoff::expected_agent_cost;
use intersection_game::{fcfs_allocate, Agent, CostModel, ReportPair, Result, Scenario};

fn main() -> Result<()> {
    // tick 1, grid [0,20], crossing 4, e=(0,0), d=(8,10)
    let s1 = Scenario::from_units(1, (0, 20), 4, (0, 8), (0, 10))?;
    let model = CostModel::Quadratic;

    for (r1, r2) in [(8, 10), (7, 8), (8, 8), (12, 3)] {
        let reports = ReportPair::from_units(r1, r2);
        let lottery = fcfs_allocate(&s1, reports)?;
        println!(
            "reports {reports} -> {lottery}  cost1 {}  cost2 {}",
            expected_agent_cost(model, &lottery, &s1, Agent::One),
            expected_agent_cost(model, &lottery, &s1, Agent::Two),
        );
    }
    Ok(())
}
