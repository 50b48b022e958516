use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use excl::{emit_summary, run_experiment, ExperimentConfig, ExperimentKind, RunError};

/// Run a seeded experiment campaign. Exit status: 0 when every check
/// passes, 1 when any check fails, 2 on a configuration error.
#[derive(Parser, Debug)]
#[command(name = "excl", version)]
struct Cli {
    experiment: ExperimentKind,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write intermediate patterns and cluster dumps.
    #[arg(long)]
    dump: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

const CONFIG_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(CONFIG_ERROR);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let mut cfg = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if let Some(kind) = cfg.experiment {
        if kind != cli.experiment {
            eprintln!("error: experiment: config is for {kind}, command line asks for {}", cli.experiment);
            return ExitCode::from(CONFIG_ERROR);
        }
    }
    cfg.experiment = Some(cli.experiment);
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    cfg.dump |= cli.dump;

    let output = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match emit_summary(&output, &dir) {
        Ok(table) => print!("{table}"),
        Err(e) => {
            eprintln!("error: writing {}: {e}", dir.display());
            return ExitCode::FAILURE;
        }
    }
    if output.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
