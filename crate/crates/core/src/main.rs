use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use carleman_lab::commands::{self, Command};
use carleman_lab::config::RunConfig;
use carleman_lab::error::{LabError, Result};

#[derive(Parser, Debug)]
#[command(name = "carleman-lab", version, about = "Carleman estimate and coefficient reconstruction audits")]
struct Cli {
    /// check-weights, forward, carleman-audit, lemma-audit, invert, stability-audit or sweep
    command: String,
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for the parameter sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(cli: &Cli) -> Result<()> {
    let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
    let cmd = Command::parse(&cli.command).ok_or_else(|| {
        LabError::Config(format!("unknown command `{}`; expected one of {}", cli.command, names.join(", ")))
    })?;
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(LabError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Config(format!("--jobs: {e}")))?;
    }
    let mut cfg = RunConfig::from_path(&cli.config)?;
    cfg.apply_env()?;
    let outcome = commands::run(cmd, &cfg, &cli.out)?;
    for c in outcome.report.checks() {
        println!("{} {}: {:.4e} (bound {:.4e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    println!("report: {}", outcome.json.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("carleman-lab: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
