//! `timebin` command-line runner.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 config error, 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use timebin::config::ConfigFile;
use timebin::harness::{self, SweepRow};
use timebin::report::{fmt17, ReportEnvelope};
use timebin::Protocol;

#[derive(Parser, Debug)]
#[command(name = "timebin", version, about = "Single-photon time-bin error rejection/correction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo run of the error-rejection protocol.
    Reject(CommonArgs),
    /// Monte Carlo run of the error-correction protocol.
    Correct(CommonArgs),
    /// Exact probabilities on a θ grid.
    Sweep(CommonArgs),
    /// Cross-check sparse propagation against the dense-matrix oracle.
    Verify(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config trial count.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] timebin::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("oracle verification failed")]
    VerificationFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::VerificationFailed => 1,
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_config(args: &CommonArgs) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(&args.config).map_err(io_err(&args.config))?;
    let mut cfg = ConfigFile::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = Some(trials);
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))
}

fn run_protocol(protocol: Protocol, args: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let experiment = cfg.experiment(protocol)?;
    let report = harness::run_experiment(&experiment, cfg.threads)?;
    let command = match protocol {
        Protocol::Reject => "reject",
        Protocol::Correct => "correct",
    };
    let envelope = ReportEnvelope {
        command,
        seed: cfg.seed,
        config: &cfg,
        result: &report,
    };
    write(&args.out, "report.json", &envelope.to_json())?;
    write(&args.out, "trials.csv", &report.to_csv())?;

    let agg = &report.aggregates;
    match protocol {
        Protocol::Reject => println!(
            "reject: trials={} mean_accept={} mean_early={} mean_late={} min_fidelity={}",
            agg.trials,
            fmt17(agg.mean_accept_or_p1),
            fmt17(agg.mean_early_or_p2),
            agg.mean_late.map(fmt17).unwrap_or_else(|| "-".into()),
            agg.min_fidelity.map(fmt17).unwrap_or_else(|| "-".into()),
        ),
        Protocol::Correct => println!(
            "correct: trials={} mean_port1={} mean_port2={} max_defect={} min_fidelity={}",
            agg.trials,
            fmt17(agg.mean_accept_or_p1),
            fmt17(agg.mean_early_or_p2),
            fmt17(agg.max_probability_defect),
            agg.min_fidelity.map(fmt17).unwrap_or_else(|| "-".into()),
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepResult<'a> {
    protocol: Protocol,
    rows: &'a [SweepRow],
}

fn run_sweep(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let section = cfg.sweep_section()?;
    let grid = section.grid()?;
    let q = cfg.sweep_qubit()?;
    let rows = harness::sweep(section.protocol, &grid, section.phi, section.chi, &q)?;
    let result = SweepResult {
        protocol: section.protocol,
        rows: &rows,
    };
    let envelope = ReportEnvelope {
        command: "sweep",
        seed: cfg.seed,
        config: &cfg,
        result: &result,
    };
    write(&args.out, "report.json", &envelope.to_json())?;
    write(&args.out, "sweep.csv", &harness::sweep_csv(&rows))?;
    println!("sweep: {} grid points written to {}", rows.len(), args.out.join("sweep.csv").display());
    Ok(())
}

fn run_verify(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let section = cfg.verify_section()?;
    let report = harness::verify(section.samples, cfg.seed, section.fault, cfg.threads)?;
    for p in &report.protocols {
        println!(
            "verify {:?}: samples={} max_deviation={} max_unitarity_error={} {}",
            p.protocol,
            p.samples,
            fmt17(p.max_deviation),
            fmt17(p.max_unitarity_error),
            if p.passed { "PASS" } else { "FAIL" },
        );
    }
    let envelope = ReportEnvelope {
        command: "verify",
        seed: cfg.seed,
        config: &cfg,
        result: &report,
    };
    write(&args.out, "report.json", &envelope.to_json())?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Reject(args) => run_protocol(Protocol::Reject, args),
        Command::Correct(args) => run_protocol(Protocol::Correct, args),
        Command::Sweep(args) => run_sweep(args),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
