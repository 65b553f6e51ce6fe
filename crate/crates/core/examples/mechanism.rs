//! The direct mechanism: agents report (earliest, desired) and the manager
//! reports on their behalf, from the assignment table or the oracle.

use intersection_game::mechanism::{run_direct_mechanism, MechanismSource};
use intersection_game::{CostModel, Result, Scenario};

fn main() -> Result<()> {
    let scenarios = [
        ("S1", Scenario::from_units(1, (0, 20), 4, (0, 8), (0, 10))?),
        (
            "S2",
            Scenario::from_units(1, (0, 20), 4, (9, 10), (10, 10))?,
        ),
        ("S3", Scenario::from_units(1, (0, 20), 4, (9, 9), (5, 10))?),
        (
            "no conflict",
            Scenario::from_units(1, (0, 20), 4, (0, 4), (0, 10))?,
        ),
    ];
    for (name, s) in scenarios {
        for source in [MechanismSource::Table1, MechanismSource::OracleSelection] {
            let out = run_direct_mechanism(&s, CostModel::Quadratic, source)?;
            let rung = out.rung.map(|r| format!(" [{r}]")).unwrap_or_default();
            println!(
                "{name:<12} {source:<7} {}{rung}: reports {} -> {}",
                out.case, out.assigned, out.allocation
            );
        }
    }
    Ok(())
}
