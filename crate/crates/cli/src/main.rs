//! `qbitcoin`: run the built-in scenarios and check their reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbitcoin::scenario::{
    run_scenario, verify_report, RunConfig, RunParams, RunReport, Scenario, ScenarioError,
};

mod exit {
    pub const HELD: u8 = 0;
    pub const NOT_HELD: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const UNKNOWN_SCENARIO: u8 = 3;
    pub const CONFIG: u8 = 4;
    pub const IO: u8 = 5;
    pub const REPORT_MISMATCH: u8 = 6;
    pub const REPORT_PARSE: u8 = 7;
    pub const SIMULATION: u8 = 8;
}

#[derive(Parser)]
#[command(name = "qbitcoin", version, about = "Quantum cash protocol scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Run reports.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// List scenario names.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario and write its report.
    Run {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// JSON run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report destination; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Recompute a report's aggregates and compare.
    Verify { file: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(exit::IO, format!("{}: {e}", path.display())))
}

fn list(json: bool) -> Result<u8, Failure> {
    if json {
        let entries: Vec<_> = Scenario::ALL
            .iter()
            .map(|s| serde_json::json!({ "name": s.name(), "property": s.property() }))
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&entries).expect("json values serialize")
        );
    } else {
        for s in Scenario::ALL {
            println!("{s}");
        }
    }
    Ok(exit::HELD)
}

fn run(
    name: &str,
    seed: u64,
    trials: usize,
    config: Option<&Path>,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let scenario: Scenario = name
        .parse()
        .map_err(|e: ScenarioError| Failure::new(exit::UNKNOWN_SCENARIO, e.to_string()))?;
    let config = match config {
        Some(path) => Some(
            RunConfig::parse(&read(path)?)
                .map_err(|e| Failure::new(exit::CONFIG, format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let params = RunParams::resolve(scenario, config.as_ref())
        .map_err(|e| Failure::new(exit::CONFIG, e.to_string()))?;
    let report = run_scenario(scenario, seed, trials, &params).map_err(|e| match e {
        ScenarioError::Config(_) => Failure::new(exit::CONFIG, e.to_string()),
        other => Failure::new(exit::SIMULATION, other.to_string()),
    })?;
    let json = report.to_json();
    match out {
        Some(path) => fs::write(path, &json)
            .map_err(|e| Failure::new(exit::IO, format!("{}: {e}", path.display())))?,
        None => print!("{json}"),
    }
    let aggregates: Vec<String> = report
        .aggregates
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    eprintln!(
        "{scenario}: property {} ({})",
        if report.property_held {
            "held"
        } else {
            "NOT held"
        },
        aggregates.join(", ")
    );
    Ok(if report.property_held {
        exit::HELD
    } else {
        exit::NOT_HELD
    })
}

fn verify(file: &Path) -> Result<u8, Failure> {
    let report: RunReport = serde_json::from_str(&read(file)?)
        .map_err(|e| Failure::new(exit::REPORT_PARSE, format!("{}: {e}", file.display())))?;
    match verify_report(&report) {
        Ok(()) => {
            println!("ok");
            Ok(exit::HELD)
        }
        Err(diffs) => Err(Failure::new(
            exit::REPORT_MISMATCH,
            format!("report mismatch:\n  {}", diffs.join("\n  ")),
        )),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::HELD
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Scenario(ScenarioCommand::List { json }) => list(*json),
        Command::Scenario(ScenarioCommand::Run {
            name,
            seed,
            trials,
            config,
            out,
        }) => run(name, *seed, *trials, config.as_deref(), out.as_deref()),
        Command::Report(ReportCommand::Verify { file }) => verify(file),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
