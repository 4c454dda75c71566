//! `hnn`: batch front end for the HNN-extension toolkit.
//!
//! Every command prints a summary JSON on stdout and, with `--out DIR`, also
//! writes its CSV tables and the summary into that directory. Exit code 2
//! means a checked bound was violated, 1 means the run itself failed.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Verdict;
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "hnn", version, about = "HNN extensions of Z^n: normal forms, Bass-Serre trees, the space M, compression")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    /// JSON run configuration; flags below override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// "bs:p:q" or "abc:n:a,b;c,d"
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Ball radius (word length budget for word-length)
    #[arg(long, global = true)]
    radius: Option<usize>,
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Number of sampled pairs or points
    #[arg(long, global = true)]
    pairs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Target exponent, repeatable
    #[arg(long = "p", global = true)]
    p: Vec<f64>,
    /// Directory for CSV and JSON outputs
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Britton normal form and t-exponent of a word such as "t x t^-1 x^2"
    NormalForm { word: String },
    /// Word length by breadth-first search
    WordLength { word: String },
    /// Sphere and ball sizes of the word metric
    BallGrowth,
    /// Ball of the Bass-Serre tree around the base vertex
    TreeBall,
    /// Bracketed distances in Y, for random pairs or a query CSV
    YDist {
        /// CSV with header and columns ax.., as, bx.., bs
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Also write the grid nodes to grid.csv
        #[arg(long)]
        export_grid: bool,
    },
    /// Checks d <= d_M <= 4(1+kappa) d on sampled pairs of M
    VerifyLemma,
    /// Properness, normalization and orbit quasi-isometry probes
    Probe,
    /// Compression exponents of explicit embeddings into l^p
    EstimateCompression,
}

fn run(cli: Cli) -> anyhow::Result<Verdict> {
    let f = cli.flags;
    let over = Overrides {
        preset: f.preset,
        radius: f.radius,
        grid_step: f.grid_step,
        pairs: f.pairs,
        seed: f.seed,
        p_values: f.p,
        out: f.out,
    };
    let cfg = RunConfig::load(f.config.as_deref(), over)?;
    match cli.command {
        Command::NormalForm { word } => commands::normal_form(&cfg, &word),
        Command::WordLength { word } => commands::word_length(&cfg, &word),
        Command::BallGrowth => commands::ball_growth(&cfg),
        Command::TreeBall => commands::tree_ball(&cfg),
        Command::YDist { queries, export_grid } => commands::y_dist(&cfg, queries.as_deref(), export_grid),
        Command::VerifyLemma => commands::verify_lemma(&cfg),
        Command::Probe => commands::probe(&cfg),
        Command::EstimateCompression => commands::estimate_compression(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Verdict::Clean) => ExitCode::SUCCESS,
        Ok(Verdict::Violated) => {
            eprintln!("hnn: a checked bound was violated");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("hnn: {e:#}");
            ExitCode::FAILURE
        }
    }
}
