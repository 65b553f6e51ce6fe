use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use intersection_game::cli::{
    self, CommandOutput, EquilibriumMethod, ScenarioFile, Settings, SweepSpec,
};
use intersection_game::mechanism::MechanismSource;
use intersection_game::social::SeparationMode;
use intersection_game::CostModel;

/// Two-agent intersection game: equilibria, social optimum, mechanism checks.
#[derive(Debug, Parser)]
#[command(name = "isect", version)]
struct Args {
    /// Cost model: quadratic, power:<p> or power:<n>/<d>.
    #[arg(long, global = true)]
    cost: Option<CostModel>,
    /// Separation for the social optimum: fcfs or eq4.
    #[arg(long, global = true)]
    separation: Option<SeparationMode>,
    /// Mechanism report source: table1 or oracle.
    #[arg(long, global = true)]
    source: Option<MechanismSource>,
    /// Use truthful FCFS reporting instead of the mechanism.
    #[arg(long, global = true)]
    baseline: bool,
    /// Refuse sweeps with more scenario evaluations than this.
    #[arg(long, global = true)]
    max_sweep: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the case label and the predicates that decided it.
    Classify { file: PathBuf },
    /// List equilibrium report pairs with allocations and costs.
    Equilibria {
        file: PathBuf,
        /// closed, oracle or both (both adds a diff section).
        #[arg(long, default_value = "both")]
        method: EquilibriumMethod,
    },
    /// Social optimum, selected equilibrium and diagnostics.
    Social { file: PathBuf },
    /// Run the direct mechanism on the reported profiles.
    Mechanism { file: PathBuf },
    /// Search for profitable misreports; exit 1 if any exist.
    VerifySp { file: PathBuf },
    /// Allocation region points tagged for plotting.
    Region { file: PathBuf },
    /// Run every check over a sweep spec.
    Sweep {
        spec: PathBuf,
        /// Write summary, scenario, discrepancy and SP tables here.
        #[arg(long)]
        archive: Option<PathBuf>,
    },
}

fn run(args: Args) -> Result<CommandOutput> {
    let settings = Settings {
        cost: args.cost,
        separation: args.separation,
        source: args.source,
        baseline: args.baseline,
        max_sweep: args.max_sweep,
    };
    let load =
        |p: &PathBuf| ScenarioFile::load(p).with_context(|| format!("reading {}", p.display()));
    Ok(match &args.command {
        Command::Classify { file } => cli::cmd_classify(&load(file)?),
        Command::Equilibria { file, method } => {
            cli::cmd_equilibria(&load(file)?, &settings, *method)
        }
        Command::Social { file } => cli::cmd_social(&load(file)?, &settings)?,
        Command::Mechanism { file } => cli::cmd_mechanism(&load(file)?, &settings)?,
        Command::VerifySp { file } => cli::cmd_verify_sp(&load(file)?, &settings)?,
        Command::Region { file } => cli::cmd_region(&load(file)?, &settings)?,
        Command::Sweep { spec, archive } => {
            let spec =
                SweepSpec::load(spec).with_context(|| format!("reading {}", spec.display()))?;
            eprintln!("sweep cardinality: {}", spec.cardinality()?);
            cli::cmd_sweep(&spec, &settings, archive.as_deref())?
        }
    })
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
