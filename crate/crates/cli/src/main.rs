//! `transverse`: verify, flow and functional runs on built-in foliated scenarios.

mod config;
mod flow;
mod functional;
mod goldens;
mod output;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{Command, RunConfig};
use report::Header;

pub const SCHEMA: &str = include_str!("../schema.txt");

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 2;
pub const EXIT_BLOW_UP: u8 = 3;
pub const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] transverse_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(transverse_core::Error::BlowUp { .. }) => EXIT_BLOW_UP,
            CliError::Core(transverse_core::Error::Numeric(_)) => EXIT_NO_CONVERGENCE,
            _ => EXIT_FAIL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "transverse", version, about = "Transverse Ricci flow and soliton checks on foliated manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the curvature, operator, soliton and theorem-consistency suites.
    Verify(RunArgs),
    /// Integrate the transverse Ricci flow and write a monitor trace.
    Flow(RunArgs),
    /// Evaluate F_Q, W_Q, lambda_Q and mu_Q.
    Functional(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides TRANSVERSE_OUT_DIR and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random test data (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

struct Outcome {
    code: u8,
    summary: String,
}

fn execute(command: Command, args: &RunArgs) -> Result<Outcome, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Config(format!(
                "{}: config is for `{}`, invoked as `{}`",
                args.config.display(),
                c.as_str(),
                command.as_str()
            )));
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = cfg.resolve_out_dir(args.out.as_deref());
    let header = Header::new(&cfg, command);
    output::write_atomic(&out, "schema.txt", SCHEMA.as_bytes())?;
    match command {
        Command::Verify => {
            let r = verify::run(&cfg, header)?;
            output::write_atomic(&out, "report.json", &output::to_json(&r)?)?;
            let summary = if r.pass {
                format!("verify: all {} checks and {} goldens pass", r.checks.len(), r.goldens.len())
            } else {
                format!("verify: FAILED {}", r.failed.join(", "))
            };
            Ok(Outcome { code: if r.pass { EXIT_OK } else { EXIT_FAIL }, summary })
        }
        Command::Flow => {
            let run = flow::run(&cfg, header)?;
            output::write_atomic(&out, "trace.csv", &output::to_csv(&flow::TRACE_COLUMNS, &run.trace)?)?;
            output::write_atomic(&out, "report.json", &output::to_json(&run.report)?)?;
            let r = &run.report;
            Ok(match r.blow_up_time {
                Some(t) => Outcome { code: EXIT_BLOW_UP, summary: format!("flow: blow-up, last good time t = {t}") },
                None if r.pass => Outcome { code: EXIT_OK, summary: format!("flow: completed {} rows", r.rows) },
                None => Outcome {
                    code: EXIT_FAIL,
                    summary: format!("flow: monitor violations at t = {:?}", r.violations),
                },
            })
        }
        Command::Functional => {
            let r = functional::run(&cfg, header)?;
            output::write_atomic(&out, "report.json", &output::to_json(&r)?)?;
            Ok(if !r.converged {
                Outcome {
                    code: EXIT_NO_CONVERGENCE,
                    summary: format!("functional: not converged{}", r.error.map(|e| format!(": {e}")).unwrap_or_default()),
                }
            } else if r.pass {
                Outcome { code: EXIT_OK, summary: format!("functional: {} values", r.entries.len()) }
            } else {
                let bad: Vec<&str> = r.goldens.iter().filter(|g| !g.pass).map(|g| g.name.as_str()).collect();
                Outcome { code: EXIT_FAIL, summary: format!("functional: golden mismatch {}", bad.join(", ")) }
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_FAIL } else { EXIT_OK });
        }
    };
    let (command, args) = match &cli.command {
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Flow(a) => (Command::Flow, a),
        Cmd::Functional(a) => (Command::Functional, a),
    };
    match execute(command, args) {
        Ok(o) => {
            if o.code == EXIT_OK {
                println!("{}", o.summary);
            } else {
                eprintln!("{}", o.summary);
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
