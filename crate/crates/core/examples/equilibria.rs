//! Pure equilibria two ways: brute-force oracle and the case-by-case closed
//! form, diffed per scenario.

use intersection_game::equilibrium::{classify, closed_form_equilibria, verify_soundness};
use intersection_game::{fcfs_allocate, CostModel, Result, Scenario};

fn main() -> Result<()> {
    let scenarios = [
        ("S1", Scenario::from_units(1, (0, 20), 4, (0, 8), (0, 10))?),
        (
            "S2",
            Scenario::from_units(1, (0, 20), 4, (9, 10), (10, 10))?,
        ),
        ("S3", Scenario::from_units(1, (0, 20), 4, (9, 9), (5, 10))?),
        ("tiny", Scenario::from_units(1, (0, 6), 2, (0, 3), (0, 3))?),
        (
            "lemma5 tie",
            Scenario::from_units(1, (0, 12), 2, (0, 0), (1, 1))?,
        ),
    ];
    for (name, s) in scenarios {
        let class = classify(&s);
        let closed = closed_form_equilibria(&s);
        let report = verify_soundness(&s, CostModel::Quadratic);
        println!("{name}: {s}  [{}]", class.label);
        for r in closed.set.iter() {
            let verdict = if report.oracle.contains(r) {
                "oracle agrees"
            } else {
                "ORACLE REJECTS"
            };
            println!(
                "  closed form {r} -> {}  ({verdict})",
                fcfs_allocate(&s, *r)?
            );
        }
        let oracle: Vec<String> = report.oracle.iter().map(|r| r.to_string()).collect();
        println!("  oracle: {}", oracle.join(" "));
    }
    Ok(())
}
