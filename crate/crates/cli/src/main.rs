use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectrum_auction::sim::Scheduler;
use spectrum_auction_cli::commands::{self, Model, Preset, SimulateArgs};
use spectrum_auction_cli::error::CliError;

/// Truthful spectrum auctions for relay-augmented LTE downlinks.
#[derive(Debug, Parser)]
#[command(name = "spectrum-auction", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one auction and print winners, RBs, payments and duals as JSON.
    Auction {
        #[arg(long, value_enum)]
        model: Model,
        /// Slot configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Bids (CSV).
        #[arg(long)]
        bids: PathBuf,
        /// Relative payment precision, e.g. 1e-3 or 1/1000.
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Compare greedy welfare with the exact optimum and the ratio bound.
    OracleCompare {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        bids: PathBuf,
    },
    /// Run a slotted simulation and write metrics CSV and summary JSON.
    Simulate {
        /// JSON overrides of the preset scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "default")]
        preset: Preset,
        /// auction-basic, auction-extended, round-robin, best-cqi or all.
        #[arg(long, default_value = "all")]
        scheduler: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CQI trace (CSV: slot,bidder,cqi...).
        #[arg(long, conflicts_with = "synth")]
        trace: Option<PathBuf>,
        /// Generate a synthetic CQI trace from the seed.
        #[arg(long)]
        synth: bool,
        /// Override the number of slots.
        #[arg(long)]
        slots: Option<usize>,
        /// Also solve each slot exactly where the instance is small enough.
        #[arg(long)]
        oracle: bool,
        /// Skip critical payments.
        #[arg(long)]
        no_payments: bool,
        #[arg(long)]
        epsilon: Option<String>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Randomized truthfulness, monotonicity and IR checks.
    TruthfulnessCheck {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epsilon: Option<String>,
        /// Check a deliberately non-monotone rule instead (must fail).
        #[arg(long)]
        faulty_rule: bool,
    },
}

fn schedulers(name: &str) -> Result<Vec<Scheduler>, CliError> {
    if name == "all" {
        return Ok(Scheduler::ALL.to_vec());
    }
    name.split(',')
        .map(|n| {
            n.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("unknown scheduler {n:?}")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Auction {
            model,
            config,
            bids,
            epsilon,
        } => commands::auction(model, &config, &bids, epsilon.as_deref(), &mut out),
        Command::OracleCompare {
            model,
            config,
            bids,
        } => commands::oracle_compare(model, &config, &bids, &mut out),
        Command::Simulate {
            scenario,
            preset,
            scheduler,
            seed,
            trace,
            synth,
            slots,
            oracle,
            no_payments,
            epsilon,
            jobs,
            out: out_dir,
        } => {
            let args = SimulateArgs {
                preset,
                scenario,
                schedulers: schedulers(&scheduler)?,
                seed,
                slots,
                trace,
                synth,
                oracle,
                payments: !no_payments,
                epsilon,
                jobs,
                out_dir,
            };
            commands::simulate(&args, &mut out).map(|_| ())
        }
        Command::TruthfulnessCheck {
            model,
            trials,
            seed,
            epsilon,
            faulty_rule,
        } => commands::truthfulness_check(
            model,
            trials,
            seed,
            epsilon.as_deref(),
            faulty_rule,
            &mut out,
        )
        .map(|_| ()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
