//! `pam`: prime adjacency matrices, path features and downstream tasks from
//! triple files.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "pam", version, about = "Prime adjacency matrices for multi-relational graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores); results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every random split.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Record wall time in the manifest (makes it run-dependent).
    #[arg(long, global = true)]
    pub timings: bool,
    /// Debug logging.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write P¹…P^k and their value histograms.
    Power {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        pam: PamArgs,
    },
    /// Node classification from node path bags.
    Node {
        #[arg(long)]
        input: Option<PathBuf>,
        /// `node<TAB>class[<TAB>train|test]` lines.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Share of labeled nodes used for training when labels carry no split.
        #[arg(long)]
        train_fraction: Option<f64>,
        #[command(flatten)]
        pam: PamArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Relation prediction for held-out triples.
    Relation {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        valid: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[command(flatten)]
        pam: PamArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Graph-level regression over a directory of graphs.
    GraphRegress {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[command(flatten)]
        pam: PamArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Horn rules `path → relation` with support and confidence.
    Rules {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        min_support: Option<usize>,
        #[arg(long)]
        min_confidence: Option<f64>,
        #[command(flatten)]
        pam: PamArgs,
    },
    /// All k-hop relation chains between two nodes.
    Paths {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        head: Option<String>,
        #[arg(long)]
        tail: Option<String>,
        #[command(flatten)]
        pam: PamArgs,
    },
}

#[derive(Args, Debug, Default)]
pub struct PamArgs {
    /// Highest hop order.
    #[arg(long)]
    pub k: Option<usize>,
    /// sum, product or lossless.
    #[arg(long)]
    pub mode: Option<String>,
    /// Arbitrary-precision cells instead of 64-bit ones.
    #[arg(long)]
    pub bigint: bool,
    /// Lossless prime allocation: sequential or lexicographic.
    #[arg(long)]
    pub allocation: Option<String>,
    /// Cap on stored lossless factors per hop order.
    #[arg(long)]
    pub max_factors: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct FeatureArgs {
    /// Weight of a node's own features against its neighbours' mean.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Largest document-frequency ratio kept.
    #[arg(long)]
    pub max_df: Option<f64>,
    /// Vocabulary cap.
    #[arg(long)]
    pub vocab: Option<usize>,
    /// tfidf or raw.
    #[arg(long)]
    pub weighting: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// knn, linear or mean.
    #[arg(long)]
    pub model: Option<String>,
    /// Neighbour count of the k-NN model.
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// Ridge term of the linear model.
    #[arg(long)]
    pub ridge: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
