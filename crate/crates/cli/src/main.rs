//! `spellforge`: batch commands for the welfare-receipt forecasting pipeline.
//!
//! Every command writes its outputs plus a `manifest.json` (input and output
//! digests, seeds, timings) into `--out`. Exit status is 0 on success, 2 on
//! usage, input or configuration errors and 3 on numerical failure.

mod commands;
mod manifest;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "spellforge", version, about = "Forecast long-term income-support receipt from payment spells")]
struct Cli {
    /// Worker threads for data-parallel loops (default: all cores).
    #[arg(long, global = true, env = "SPELLFORGE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Cohort files, either from a directory with the standard names or one by one.
#[derive(Debug, Clone, Args)]
pub struct CohortArgs {
    /// Directory holding spells.csv, persons.csv and optionally activity.csv
    /// and parent_links.csv.
    #[arg(long)]
    pub cohort: Option<PathBuf>,
    #[arg(long)]
    pub spells: Option<PathBuf>,
    #[arg(long)]
    pub persons: Option<PathBuf>,
    #[arg(long)]
    pub activity: Option<PathBuf>,
    #[arg(long)]
    pub parent_links: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic cohort from a generator config.
    Synth {
        /// Generator config (JSON); the bundled paperlike-v1 recipe if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's cohort size.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive the design matrix for a cohort.
    Features {
        #[command(flatten)]
        cohort: CohortArgs,
        /// Feature catalog (JSON); the shipped catalog if omitted.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model ladder and report holdout accuracy.
    Train {
        #[command(flatten)]
        cohort: CohortArgs,
        /// Features file from `features`; derived from the cohort if omitted.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Ladder file, or the name of a bundled ladder (table2, extensions, unemployment).
        #[arg(long, default_value = "table2")]
        ladder: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Outcome for entries that do not name one.
        #[arg(long, default_value = "any-is", value_parser = ["any-is", "unemployment"])]
        outcome: String,
        /// Drop people paid on every day of this window, e.g. 2011-2014.
        #[arg(long)]
        exclude_always_on: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model against observed outcomes.
    Evaluate {
        #[command(flatten)]
        cohort: CohortArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Split file from `train`; restricts scoring to its holdout rows.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, default_value = "any-is", value_parser = ["any-is", "unemployment"])]
        outcome: String,
        #[arg(long, default_value_t = 1000)]
        n_bootstrap: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Group people predicted to be at risk.
    Cluster {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Column metadata; `<features>.columns.json` if omitted.
        #[arg(long)]
        columns: Option<PathBuf>,
        /// Predicted outcome above which a person is at risk.
        #[arg(long, default_value_t = spellforge_core::cluster::DEFAULT_AT_RISK)]
        threshold: f64,
        #[arg(long, default_value = "ward", value_parser = ["ward", "average", "complete"])]
        linkage: String,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        /// Use this group count instead of the recommendation.
        #[arg(long)]
        k: Option<usize>,
        /// Explicit clustering variables (comma separated).
        #[arg(long, value_delimiter = ',')]
        variables: Vec<String>,
        /// Leading predictors of the model to include.
        #[arg(long, default_value_t = 20)]
        top: usize,
        /// Catalog groups to include alongside the model's leading predictors.
        #[arg(long, value_delimiter = ',', default_value = "heuristic,is-history")]
        groups: Vec<String>,
        #[arg(long, default_value_t = spellforge_core::cluster::DEFAULT_MIN_GROUP)]
        min_group: usize,
        /// Cluster a random subset when more people are at risk.
        #[arg(long, default_value_t = 5000)]
        max_rows: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a training report as a table and outcome histograms.
    Report {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Synth { config, seed, n, out } => commands::synth(config.as_deref(), seed, n, &out),
        Command::Features { cohort, catalog, out } => commands::features(&cohort, catalog.as_deref(), &out),
        Command::Train {
            cohort,
            features,
            catalog,
            ladder,
            seed,
            outcome,
            exclude_always_on,
            out,
        } => commands::train(&commands::TrainArgs {
            cohort,
            features,
            catalog,
            ladder,
            seed,
            outcome,
            exclude_always_on,
            out,
        }),
        Command::Evaluate {
            cohort,
            model,
            features,
            catalog,
            split,
            outcome,
            n_bootstrap,
            seed,
            out,
        } => commands::evaluate(&commands::EvaluateArgs {
            cohort,
            model,
            features,
            catalog,
            split,
            outcome,
            n_bootstrap,
            seed,
            out,
        }),
        Command::Cluster {
            model,
            features,
            columns,
            threshold,
            linkage,
            k_max,
            k,
            variables,
            top,
            groups,
            min_group,
            max_rows,
            seed,
            out,
        } => commands::cluster(&commands::ClusterArgs {
            model,
            features,
            columns,
            threshold,
            linkage,
            k_max,
            k,
            variables,
            top,
            groups,
            min_group,
            max_rows,
            seed,
            out,
        }),
        Command::Report { report, out } => commands::report(&report, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
