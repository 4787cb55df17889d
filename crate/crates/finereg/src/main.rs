use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use finereg::report;
use finereg::run::{self, parse_values};
use finereg::{Scenario, SweepParam};

#[derive(Parser)]
#[command(name = "finereg", version, about = "Fine regularity of boundary points for Schrödinger operators")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "finereg-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the boundary points of one scenario.
    Run { scenario: PathBuf },
    /// Run a scenario over several values of one parameter.
    Sweep {
        scenario: PathBuf,
        /// One of `s`, `kappa`, `h`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; fractions like `1/64` are accepted.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

fn main() -> ExitCode {
    // Usage errors exit with 1; clap's own code 2 means a consistency failure here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// `Ok(false)` on a consistency failure.
fn execute(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow!("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Run { scenario } => {
            let s = Scenario::load(&scenario)?;
            let outcome = run::run_scenario(&s)?;
            report::write_run(&cli.out, &outcome).with_context(|| format!("writing {}", cli.out.display()))?;
            for (i, p) in outcome.points.iter().enumerate() {
                let flag = if p.consistency_failure { "  CONSISTENCY FAILURE" } else { "" };
                println!("point {i}: {}{flag}", p.verdict.as_str());
            }
            Ok(!outcome.consistency_failure())
        }
        Command::Sweep { scenario, param, values } => {
            let p = SweepParam::parse(&param).ok_or_else(|| anyhow!("unknown sweep parameter `{param}` (use s, kappa or h)"))?;
            let values = parse_values(&values)?;
            let s = Scenario::load(&scenario)?;
            let outcome = run::sweep(&s, p, &values, Some(&cli.out))?;
            for (token, r) in &outcome.runs {
                let verdicts: Vec<&str> = r.points.iter().map(|p| p.verdict.as_str()).collect();
                let flag = if r.consistency_failure() { "  CONSISTENCY FAILURE" } else { "" };
                println!("{}={token}: {}{flag}", p.as_str(), verdicts.join(" "));
            }
            Ok(!outcome.consistency_failure())
        }
    }
}
