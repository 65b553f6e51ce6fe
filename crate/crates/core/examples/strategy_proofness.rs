//! Exhaustive search for profitable misreports, on the truthful FCFS
//! baseline and on the mechanism.

use intersection_game::mechanism::{verify_strategy_proofness, MechanismSource};
use intersection_game::{CostModel, Result, Scenario};

fn main() -> Result<()> {
    let s1 = Scenario::from_units(1, (0, 20), 4, (0, 8), (0, 10))?;
    for source in [
        MechanismSource::TruthfulFcfs,
        MechanismSource::Table1,
        MechanismSource::OracleSelection,
    ] {
        let report = verify_strategy_proofness(&s1, CostModel::Quadratic, source)?;
        println!(
            "{source}: {} profitable misreport(s)",
            report.violation_count()
        );
        for v in report.violations.iter().take(3) {
            println!(
                "  agent {} reports e={} d={}: {} -> {} ({} -> {})",
                v.agent.number(),
                v.misreport.earliest,
                v.misreport.desired,
                v.truthful_cost,
                v.deviating_cost,
                v.truthful_allocation,
                v.deviating_allocation
            );
        }
    }
    Ok(())
}
