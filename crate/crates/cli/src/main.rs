use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mcnls_cli::{run, RunConfig, Task};

/// Exit codes: 0 success, 1 configuration or numerical error, 2 a check failed.
#[derive(Parser, Debug)]
#[command(name = "mcnls", version, about = "Mass-critical inhomogeneous NLS ground states and blow-up harness")]
struct Cli {
    #[arg(value_enum)]
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`; only the random GN test fields use it.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match run(cli.task, &cfg, &out) {
        Ok(outcome) => {
            for (k, v) in &outcome.report {
                println!("{k} = {v}");
            }
            for c in &outcome.checks {
                println!("{}", c.line());
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
