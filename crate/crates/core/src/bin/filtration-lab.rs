//! Experiment runner: seeded, reproducible, reporting to stdout or a file.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on
//! configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use filtration_lab::experiments::{
    diagram_fixture, resolve, run, run_diagram, suite, PartialConfig,
};
use filtration_lab::report::{Report, ReportFormat};
use filtration_lab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "filtration-lab",
    version,
    about = "Seeded simulation experiments for subset extraction, decimation, \
             cascaded couplings, affine field chains, and entropy identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extraction algebra and decimation-chain checks.
    Decimate(RunArgs),
    /// Cascaded coupling against the periodic reference word.
    Cascade(CascadeArgs),
    /// Collapsed-walk regime of the cascade with closed-form bounds.
    CascadeCollapsed(RunArgs),
    /// Coupled affine chains over the tower of binary fields.
    Tsirelson(RunArgs),
    /// Entropy identities on random finite instances and symbolic systems.
    EntropySuite(RunArgs),
    /// Sigma-field exchange lemmas with witness reporting.
    ExchangeSuite(RunArgs),
    /// Every experiment at its default scale under one seed.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Chain depth (number of levels below the surface).
    #[arg(long)]
    depth: Option<u32>,
    /// Window length L of positions under scrutiny.
    #[arg(long)]
    window: Option<u64>,
    /// Step horizon n for walks and rate sequences.
    #[arg(long)]
    steps: Option<u32>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, default_value = "json")]
    format: String,
    /// JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CascadeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Check only the worked three-step example and exit.
    #[arg(long, alias = "paper-diagram")]
    diagram: bool,
}

#[derive(Args)]
struct SuiteArgs {
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, default_value = "json")]
    format: String,
}

fn partial_from_args(args: &RunArgs) -> Result<PartialConfig> {
    let flags = PartialConfig {
        seed: args.seed,
        trials: args.trials,
        depth: args.depth,
        window: args.window,
        steps: args.steps,
        field_moduli: None,
        prefix_cap: None,
    };
    Ok(match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidConfig(format!("cannot read {}: {e}", path.display()))
            })?;
            flags.over(&PartialConfig::from_json(&text)?)
        }
        None => flags,
    })
}

fn emit(report: &Report, format: ReportFormat, out: &Option<PathBuf>) -> Result<bool> {
    let rendered = report.render(format)?;
    match out {
        Some(path) => std::fs::write(path, rendered).map_err(|e| {
            Error::InvalidConfig(format!("cannot write {}: {e}", path.display()))
        })?,
        None => print!("{rendered}"),
    }
    Ok(report.all_pass())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Decimate(args) => run_named("decimate", args),
        Command::Cascade(args) => {
            if args.diagram {
                let format: ReportFormat = args.run.format.parse()?;
                let cfg = resolve("cascade", &partial_from_args(&args.run)?)?;
                let report = run_diagram(&cfg, &diagram_fixture())?;
                emit(&report, format, &args.run.out)
            } else {
                run_named("cascade", args.run)
            }
        }
        Command::CascadeCollapsed(args) => run_named("cascade-collapsed", args),
        Command::Tsirelson(args) => run_named("tsirelson", args),
        Command::EntropySuite(args) => run_named("entropy-suite", args),
        Command::ExchangeSuite(args) => run_named("exchange-suite", args),
        Command::Suite(args) => {
            let format: ReportFormat = args.format.parse()?;
            let report = suite(args.seed.unwrap_or(filtration_lab::experiments::DEFAULT_SEED))?;
            emit(&report, format, &args.out)
        }
    }
}

fn run_named(experiment: &str, args: RunArgs) -> Result<bool> {
    let format: ReportFormat = args.format.parse()?;
    let cfg = resolve(experiment, &partial_from_args(&args)?)?;
    let report = run(&cfg)?;
    emit(&report, format, &args.out)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
