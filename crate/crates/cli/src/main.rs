use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hgroup_cli::{run, suite, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "hgroup", version, about = "Measure experiments on graded nilpotent groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report.json, summary.txt and CSV traces.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides every Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Do not print the summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of the configuration.
    Run,
    /// List built-in groups and distances.
    Catalog,
    ValidateGroup,
    AnalyzePoint,
    DegreeMap,
    SphericalFactor,
    FedererDensity,
    AreaCheck,
    CoareaCheck,
    BlowupCheck,
    ConcavityCheck,
    TranslationCheck,
    BetaConstancy,
    PropSuite,
}

impl Command {
    fn task(&self) -> Option<&'static str> {
        Some(match self {
            Self::Run => return None,
            Self::Catalog => "catalog",
            Self::ValidateGroup => "validate-group",
            Self::AnalyzePoint => "analyze-point",
            Self::DegreeMap => "degree-map",
            Self::SphericalFactor => "spherical-factor",
            Self::FedererDensity => "federer-density",
            Self::AreaCheck => "area-check",
            Self::CoareaCheck => "coarea-check",
            Self::BlowupCheck => "blowup-check",
            Self::ConcavityCheck => "concavity-check",
            Self::TranslationCheck => "translation-check",
            Self::BetaConstancy => "beta-constancy",
            Self::PropSuite => "prop-suite",
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if matches!(cli.command, Command::Catalog) && cli.config.is_none() && cli.out.is_none() {
        print!("{}", suite::format_catalog(&suite::catalog()));
        return ExitCode::SUCCESS;
    }
    let config = match &cli.config {
        Some(path) => RunConfig::load(path),
        None if matches!(cli.command, Command::Catalog) => RunConfig::from_json("{}"),
        None => {
            eprintln!("error: --config is required");
            return ExitCode::from(2);
        }
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        out: cli.out,
        seed: cli.seed,
        samples: cli.samples,
        only: cli.command.task().map(String::from),
    };
    match run(&config, &opts) {
        Ok(outcome) => {
            if !cli.quiet {
                print!("{}", outcome.summary);
                println!("report written to {}", outcome.out_dir.join("report.json").display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
