//! Writes tagged allocation-region points as TSV for external plotting.
//!
//! Usage: cargo run --example region_export [OUT_DIR]

use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use intersection_game::cli::{cmd_region, ScenarioFile, Settings};

const FILES: [(&str, &str); 2] = [
    (
        "s1",
        "delta = 1\ntheta_min = 0\ntheta_max = 20\ndt = 4\ne1 = 0\nd1 = 8\ne2 = 0\nd2 = 10\n",
    ),
    (
        "s3",
        "delta = 1\ntheta_min = 0\ntheta_max = 20\ndt = 4\ne1 = 9\nd1 = 9\ne2 = 5\nd2 = 10\n",
    ),
];

fn main() -> Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    fs::create_dir_all(&out_dir)?;
    for (name, text) in FILES {
        let file: ScenarioFile = text.parse()?;
        let out = cmd_region(&file, &Settings::default())?;
        let path = out_dir.join(format!("region_{name}.tsv"));
        fs::write(&path, &out.text)?;
        let tagged = out
            .text
            .lines()
            .filter(|l| l.contains("equilibrium"))
            .count();
        println!(
            "{}: {} points, {tagged} equilibrium",
            path.display(),
            out.text.lines().count() - 2
        );
    }
    Ok(())
}
