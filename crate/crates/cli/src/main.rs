//! `drugtol`: simulate dosing regimens, check equilibria, fit observations
//! and optimize weekly schedules from the command line.

mod commands;
mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "drugtol",
    version,
    about = "Drug tolerance simulation and dosing optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dose schedule and write the trajectory.
    Simulate(SimulateArgs),
    /// Constant-dose equilibria and the implied tolerance strength.
    Analyze(AnalyzeArgs),
    /// Find the best weekly plan under a daily or weekly cap.
    Optimize(OptimizeArgs),
    /// Score parameters against observed series.
    FitLoss(FitArgs),
    /// Score a range of values of one parameter against observed series.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Built-in parameter set (caffeine, nicotine) or a JSON parameter file.
    #[arg(long)]
    params: Option<String>,
    /// Integration step in minutes.
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    /// Seed recorded in every output; drives the optimizer's starting points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

/// Where the dose schedule comes from. Exactly one is required.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ScheduleSource {
    /// Built-in four-week regimen (daily-one-cup, two-cups-two-weeks, weekday-140).
    #[arg(long)]
    preset: Option<String>,
    /// Weekly plan, inline JSON or a file; repeated for --weeks weeks.
    #[arg(long)]
    plan: Option<String>,
    /// Dose schedule, inline JSON or a file: {"horizon_min", "segments": [...]}.
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: ScheduleSource,
    /// Weeks to repeat a --plan for.
    #[arg(long, default_value_t = 4)]
    weeks: usize,
    /// Record every n-th step.
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Constant dose rate (µg/min); defaults to one cup a day.
    #[arg(long)]
    dose_rate: Option<f64>,
    /// Observed effect before tolerance; with --e-drug-tol, estimates k4 from data.
    #[arg(long, requires = "e_drug_tol")]
    e_drug: Option<f64>,
    /// Observed effect once tolerance has developed.
    #[arg(long, requires = "e_drug")]
    e_drug_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    /// Named benchmark condition; sets parameters and constraint.
    #[arg(long, conflicts_with_all = ["params", "constraint"])]
    condition: Option<String>,
    /// daily:CAP or weekly:CAP (cups).
    #[arg(long)]
    constraint: Option<String>,
    /// Plan template supplying the dosing window and cup mass (doses ignored).
    #[arg(long)]
    plan: Option<String>,
    /// Objective spec, inline JSON or a file.
    #[arg(long)]
    objective: Option<String>,
    /// Number of random starting points.
    #[arg(long, default_value_t = drugtol_core::optimizer::DEFAULT_STARTS)]
    starts: usize,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: ScheduleSource,
    /// Weeks to repeat a --plan for.
    #[arg(long, default_value_t = 4)]
    weeks: usize,
    /// Observation CSV file; repeat for several series.
    #[arg(long = "obs", required = true)]
    observations: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Parameter to vary (e0, k1..k7, c_half), in normalized units.
    #[arg(long)]
    field: String,
    /// Comma-separated candidate values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Analyze(args) => commands::analyze(&args),
        Command::Optimize(args) => commands::optimize(&args),
        Command::FitLoss(args) => commands::fit_loss(&args),
        Command::Sweep(args) => commands::sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 3 for numeric failures inside the model, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err
        .chain()
        .filter_map(|e| e.downcast_ref::<drugtol_core::Error>())
        .any(drugtol_core::Error::is_numeric);
    if numeric {
        3
    } else {
        2
    }
}
