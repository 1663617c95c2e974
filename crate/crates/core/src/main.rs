use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spincat::harness::{config_schema, exit_code, run, write_record, ExperimentConfig, ExperimentKind, OutputFormat};
use spincat::Error;

#[derive(Parser)]
#[command(name = "spincat", version, about = "Spin-cat qudit error correction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error vs dephasing strength for physical, encoded and corrected qubits
    Fig3Sweep(RunArgs),
    /// Corrected error vs the correction phase
    PhaseSweep(RunArgs),
    /// Error vs storage time and lifetime gain
    Breakeven(RunArgs),
    /// Erasure fraction vs delay under motional heating
    ErasureScan(RunArgs),
    /// Knill-Laflamme conditions of the spin-cat code
    KlReport(RunArgs),
    /// Tomography calibration on a known state
    TomoCalibration(RunArgs),
    /// Print the JSON Schema of the config file
    Schema,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Override the number of Monte Carlo trials per point
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::for_experiment(kind),
    };
    cfg.experiment = kind;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    let record = run(&cfg)?;
    let format = match args.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let paths = write_record(&record, &args.out, format)?;
    if !args.quiet {
        println!("{}", serde_json::to_string_pretty(&record.summary)?);
        for p in paths {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Fig3Sweep(a) => (ExperimentKind::Fig3Sweep, a),
        Command::PhaseSweep(a) => (ExperimentKind::PhaseSweep, a),
        Command::Breakeven(a) => (ExperimentKind::Breakeven, a),
        Command::ErasureScan(a) => (ExperimentKind::ErasureScan, a),
        Command::KlReport(a) => (ExperimentKind::KlReport, a),
        Command::TomoCalibration(a) => (ExperimentKind::TomoCalibration, a),
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&config_schema()).expect("schema serializes"));
            return ExitCode::SUCCESS;
        }
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
