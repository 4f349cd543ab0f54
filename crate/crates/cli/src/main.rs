mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hslice_core::gen::GenKind;

#[derive(Debug, Parser)]
#[command(
    name = "hslice",
    version,
    about = "Hypercube edge slicing: verification, decomposition, witness search and lemma checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Input file (collection, matrix, vector or case file, by subcommand).
    #[arg(long, global = true, env = "HSLICE_INPUT")]
    pub input: Option<PathBuf>,
    /// Directory receiving report.json, CSVs and manifest.json.
    #[arg(
        long,
        global = true,
        env = "HSLICE_OUTPUT",
        default_value = "hslice-out"
    )]
    pub output: PathBuf,
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true, env = "HSLICE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "HSLICE_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Witness attempts.
    #[arg(long, global = true, env = "HSLICE_BUDGET", default_value_t = 10_000)]
    pub budget: u64,
    /// Monte Carlo trials.
    #[arg(long, global = true, env = "HSLICE_TRIALS", default_value_t = 100_000)]
    pub trials: u64,
    /// Sampler parameters: `paper` or `rho0=..,rho1=..,delta_heavy=..,bad_threshold=..,close_threshold=..,near_bad_dot=..,levels=..`.
    #[arg(long, global = true, env = "HSLICE_PARAMS", default_value = "paper")]
    pub params: String,
    /// Decomposition constants: `paper` or `S=..,W=..,tau=..`.
    #[arg(long, global = true, env = "HSLICE_CONSTANTS", default_value = "paper")]
    pub constants: String,
    /// Largest dimension enumerated exhaustively.
    #[arg(long, global = true, env = "HSLICE_CAP", default_value_t = hslice_core::cube::DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that every hypercube edge is sliced by the collection.
    Verify {
        /// Read the collection as exact rationals or floats, overriding its `mode`.
        #[arg(long)]
        mode: Option<String>,
        /// Unsliced edges listed in unsliced.csv.
        #[arg(long, default_value_t = 1024)]
        unsliced_limit: usize,
    },
    /// Search for an edge no hyperplane slices.
    Witness {
        /// Also estimate the close-index breakdown at the decomposed instance.
        #[arg(long)]
        breakdown: bool,
        /// Also check the per-hyperplane slicing probabilities at the found point.
        #[arg(long)]
        claims: bool,
    },
    /// Split rows and columns and verify the resulting conditions.
    Decompose,
    /// Count scales of a vector (input: JSON array).
    Scales {
        #[arg(long)]
        delta: f64,
        /// Also run the exhaustive optimum (at most 12 entries).
        #[arg(long)]
        brute: bool,
    },
    /// Run a case file of lemma checks (bundled cases without --input).
    Lab,
    /// Write a collection to collection.json.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
    },
}

fn parse_kind(s: &str) -> Result<GenKind, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::error_code(&err))
        }
    }
}
