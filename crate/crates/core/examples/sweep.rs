//! A small exhaustive sweep with every check, printing the summary counters.

use anyhow::Result;
use intersection_game::cli::{run_sweep, Settings, SweepSpec};

fn main() -> Result<()> {
    let spec: SweepSpec =
        "delta = 1\ntheta_min = 0\ntheta_max = 8\ndt = 2, 4\ncost = quadratic, power:4\n"
            .parse()?;
    println!("cardinality {}", spec.cardinality()?);
    let result = run_sweep(&spec, &Settings::default())?;
    print!("{}", result.summary.tsv());
    for row in result.discrepancies.unexpected().take(3) {
        println!("unexpected: {}", row.tsv());
    }
    Ok(())
}
