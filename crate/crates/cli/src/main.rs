use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixvol_cli::{run, Command, RunConfig, Settings, EXIT_CONVERGENCE};

#[derive(Parser)]
#[command(name = "mixvol", version, about = "Mixed-frequency volatility models: GARCH-MIDAS, DCC-GARCH, DCC-MIDAS")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Descriptive statistics, normality, serial-correlation and unit-root tests.
    Describe(Common),
    /// Fit every configured GARCH-MIDAS model and rank them by BIC.
    FitGarchMidas(Common),
    /// Fit DCC-GARCH and DCC-MIDAS correlation models on a pair of series.
    FitDcc(Common),
    /// Simulate a GARCH-MIDAS panel and write it with the true parameters.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model fits run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Describe(c) => (Command::Describe, c),
        Sub::FitGarchMidas(c) => (Command::FitGarchMidas, c),
        Sub::FitDcc(c) => (Command::FitDcc, c),
        Sub::Simulate(c) => (Command::Simulate, c),
    };
    let cfg = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let settings = Settings {
        out: common
            .out
            .or_else(|| cfg.out.as_ref().map(|o| cfg.resolve(o)))
            .unwrap_or_else(|| PathBuf::from("out")),
        jobs: common.jobs,
        seed: common.seed,
    };
    match run(command, &cfg, &settings) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: not every fit converged; see the report");
            ExitCode::from(EXIT_CONVERGENCE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
