//! Socially optimal allocations, the socially optimal equilibrium, and the
//! cross-check of the closed forms against brute force.

use intersection_game::equilibrium::nash_oracle;
use intersection_game::social::{
    closed_form_social_cases, crosscheck, select_social_equilibrium, socially_optimal_allocation,
    SeparationMode,
};
use intersection_game::{CostModel, Result, Scenario};

fn main() -> Result<()> {
    let model = CostModel::Quadratic;
    let cases = [
        (
            "d=(10,10)",
            Scenario::from_units(1, (0, 20), 4, (0, 10), (0, 10))?,
        ),
        ("S1", Scenario::from_units(1, (0, 20), 4, (0, 8), (0, 10))?),
        (
            "S2",
            Scenario::from_units(1, (0, 20), 4, (9, 10), (10, 10))?,
        ),
        (
            "d=(8,9)",
            Scenario::from_units(1, (0, 20), 4, (0, 8), (0, 9))?,
        ),
    ];
    for (name, s) in cases {
        let opt = socially_optimal_allocation(&s, model, SeparationMode::FcfsCompatible)?;
        let argmin: Vec<String> = opt.argmin_set.iter().map(|a| a.to_string()).collect();
        println!(
            "{name}: optimum {} (cost {}), argmin {}",
            opt.lottery,
            opt.cost,
            argmin.join(" ")
        );
        if let Ok(formula) = closed_form_social_cases(&s) {
            println!("  case {} formula {}", formula.case.name(), formula.lottery);
        }
        let sel = select_social_equilibrium(&s, model, &nash_oracle(&s, model))?;
        println!(
            "  selected {} -> {} (cost {}, epsilon {:?})",
            sel.reports,
            sel.lottery,
            sel.diagnostics.selected_cost,
            sel.diagnostics.epsilon.map(|e| e.to_string())
        );
        for row in crosscheck(&s, model)?.rows {
            println!(
                "  discrepancy {}: {} vs {}",
                row.kind, row.closed_form, row.oracle
            );
        }
    }
    Ok(())
}
