use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use normvol::commands::{run, Command, Overrides};
use normvol::config::ExperimentConfig;

/// Bachelier stochastic-volatility pricing experiments.
#[derive(Parser, Debug)]
#[command(name = "normvol", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true)]
    terms: Option<usize>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Series prices on the strike grid.
    Price {
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long)]
        maturity: Option<f64>,
        /// Add conditional Monte Carlo prices with 95% intervals.
        #[arg(long)]
        benchmark: bool,
    },
    /// Implied-vol errors of the series against Monte Carlo.
    Smile,
    /// Optimal number of series terms.
    Nstar,
    /// Delta and Gamma by three methods, with timings.
    Greeks,
    /// Control-variate variance reduction.
    Cv,
    /// Estimate and store moment tables.
    Moments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config.as_ref() else {
        eprintln!("error: --config <FILE> is required");
        return ExitCode::from(2);
    };
    let command = match cli.command {
        Cmd::Price {
            strike,
            maturity,
            benchmark,
        } => Command::Price {
            strike,
            maturity,
            benchmark,
        },
        Cmd::Smile => Command::Smile,
        Cmd::Nstar => Command::Nstar,
        Cmd::Greeks => Command::Greeks,
        Cmd::Cv => Command::Cv,
        Cmd::Moments => Command::Moments,
    };
    let overrides = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        terms: cli.terms,
        out: cli.out,
    };
    let result = ExperimentConfig::load(config)
        .and_then(|cfg| overrides.apply(&cfg))
        .and_then(|cfg| {
            let output = run(&cfg, &command)?;
            let written = output.write_to(&cfg.output.directory)?;
            Ok((output, written))
        });
    match result {
        Ok((output, written)) => {
            print!("{}", output.summary);
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
