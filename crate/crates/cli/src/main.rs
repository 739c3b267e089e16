use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mflevy::bench::{run_experiment, run_suite, validate_config, ExperimentSpec, RunOutcome};

/// Simulate nonlinear Lévy-driven particle systems and check them against
/// their oracles.
#[derive(Parser, Debug)]
#[command(name = "mflevy", version)]
struct Cli {
    /// Overrides the seed of every experiment (at most 2^63 - 1 so the
    /// config echo stays valid TOML).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,

    /// Output root; relative `output.dir` entries are resolved against it.
    #[arg(long, global = true, env = "MFLEVY_OUT")]
    out: Option<PathBuf>,

    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configured experiment and write its artifacts.
    Run { config: PathBuf },
    /// Check a config file and print its normalized form.
    Validate { config: PathBuf },
    /// Run the default experiment of every shipped model.
    Suite {
        /// Particle count (defaults to 10000).
        #[arg(long)]
        particles: Option<usize>,
    },
}

const EXIT_FAILED_CLAIM: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn report(outcome: &RunOutcome) -> usize {
    println!("== {} -> {}", outcome.model.name(), outcome.dir.display());
    for r in &outcome.results.reports {
        println!("{}", r.summary());
    }
    for v in &outcome.results.variance {
        println!(
            "variance t={:<8} observed {:.6e} ± {:.3e}  predicted {:.6e}",
            v.t, v.observed, v.stderr, v.predicted
        );
    }
    for r in &outcome.results.rates {
        match r.fit.fit {
            Some(f) => println!(
                "rate {:<20} slope {:+.4} ± {:.4}  95% CI [{:.4}, {:.4}]  R² {:.4}",
                r.name, f.slope, f.slope_stderr, f.ci[0], f.ci[1], f.r_squared
            ),
            None => println!("rate {:<20} degenerate (distances vanish)", r.name),
        }
    }
    let failures = outcome.results.failures().len();
    println!("{} claims, {failures} failed", outcome.results.reports.len());
    failures
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentSpec, ExitCode> {
    match validate_config(path) {
        Ok(mut spec) => {
            if let Some(s) = seed {
                spec.scheme.seed = s;
            }
            Ok(spec)
        }
        Err(e) => {
            eprint!("{}: {e}", path.display());
            Err(ExitCode::from(EXIT_USAGE))
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let failures = match cli.command {
        Command::Validate { config } => {
            let spec = match load(&config, cli.seed) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            print!("{}", spec.to_toml());
            0
        }
        Command::Run { config } => {
            let spec = match load(&config, cli.seed) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let dir = match &cli.out {
                Some(root) => root.join(&spec.output.dir),
                None => PathBuf::from(&spec.output.dir),
            };
            let outcome = run_experiment(&spec, &dir).with_context(|| format!("running {}", config.display()))?;
            report(&outcome)
        }
        Command::Suite { particles } => {
            let root = cli.out.unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
            let outcomes = run_suite(&root, cli.seed.unwrap_or(0), particles).context("running the suite")?;
            outcomes.iter().map(report).sum()
        }
    };
    Ok(if failures > 0 {
        ExitCode::from(EXIT_FAILED_CLAIM)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
