use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use pilotforge::harness::{csv_string, parse_config_file, preset, run_scenario, PRESET_NAMES};
use pilotforge::selftest;

#[derive(Parser)]
#[command(name = "pilotforge", version, about = "Pilot and combiner design for multi-cell channel estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo scenario and write CSV results.
    Run(RunArgs),
    /// Print the built-in scenario names.
    ListPresets,
    /// Run the built-in consistency checks.
    Selftest,
}

#[derive(Args)]
#[group(skip)]
#[command(group(ArgGroup::new("source").required(true).args(["preset", "config"])))]
struct RunArgs {
    /// Built-in scenario name.
    #[arg(long)]
    preset: Option<String>,
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> pilotforge::Result<()> {
    let mut scenario = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name)?,
        (None, Some(path)) => parse_config_file(path)?,
        (None, None) => unreachable!("clap enforces one source"),
    };
    if let Some(t) = args.trials {
        scenario.trials = t;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    let text = csv_string(&run_scenario(&scenario)?);
    match args.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::ListPresets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Selftest => {
            let results = selftest::run_all();
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                println!("{tag} {:<36} {:>7.3}s  {}", r.name, r.seconds, r.detail);
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
