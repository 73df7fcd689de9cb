use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sybilscatter::cli;
use sybilscatter::ForestParams;

#[derive(Parser)]
#[command(
    name = "sybilscatter",
    version,
    about = "Backscatter-tag Sybil detection: simulate robot networks, train and evaluate the detector"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the labeled dataset
    Simulate {
        /// Scenario JSON; defaults to the office preset
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's rng_seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Also write every raw trace to traces.csv
        #[arg(long)]
        dump_traces: bool,
    },
    /// Train a random forest on a dataset CSV
    Train {
        /// Dataset CSV (feature columns + label column)
        #[arg(long)]
        dataset: PathBuf,
        /// Number of trees
        #[arg(long, default_value_t = 30)]
        trees: usize,
        /// Disable the ascending-sort feature preprocessing
        #[arg(long)]
        no_sort: bool,
        /// Cap on tree depth (unlimited when omitted)
        #[arg(long)]
        max_depth: Option<usize>,
        /// Master seed for bootstrap and feature sampling
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a saved model against a dataset CSV
    Eval {
        /// Model file written by train
        #[arg(long)]
        model: PathBuf,
        /// Dataset CSV to score
        #[arg(long)]
        dataset: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment sweep from a JSON spec
    Sweep {
        /// Sweep spec JSON
        #[arg(long)]
        sweep_spec: PathBuf,
        /// Base scenario JSON; defaults to the office preset
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed shared by all grid cells
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let result = match args.command {
        Command::Simulate {
            config,
            seed,
            out,
            dump_traces,
        } => cli::cmd_simulate(config.as_deref(), seed, &out, dump_traces),
        Command::Train {
            dataset,
            trees,
            no_sort,
            max_depth,
            seed,
            out,
        } => {
            let params = ForestParams {
                num_trees: trees,
                sort_enabled: !no_sort,
                max_depth,
                seed,
            };
            cli::cmd_train(&dataset, &params, &out)
        }
        Command::Eval { model, dataset, out } => cli::cmd_eval(&model, &dataset, &out),
        Command::Sweep {
            sweep_spec,
            config,
            seed,
            out,
        } => cli::cmd_sweep(&sweep_spec, config.as_deref(), seed, &out),
    };
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
