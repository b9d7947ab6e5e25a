use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod commands;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable file, malformed Newick or JSON, bad flags.
    #[error("{0}")]
    Input(String),
    /// The input was fine but a check or search came out negative.
    #[error("{0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "plucker-tree", version, about = "Plücker tree ideals, secant witnesses and dimension checks")]
pub struct Cli {
    /// Seed for every randomized step; echoed in all outputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Splits, cherries, cluster counts and circular order of a tree.
    TreeInfo {
        /// Newick file, or `-` for stdin.
        tree: PathBuf,
        /// Collapse degree-two vertices instead of rejecting them.
        #[arg(long)]
        suppress_degree_two: bool,
    },
    /// Initial forms of the Pfaffian generators of a secant.
    Generators {
        tree: PathBuf,
        /// Secant order `s`; `1` gives the quartet binomials.
        #[arg(long, default_value_t = 1)]
        secant: usize,
    },
    /// Random search for a winning-direction witness.
    DraismaSearch {
        tree: PathBuf,
        /// Required `rank1 + rank2`; defaults to `4n - 10`.
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        max_iters: u64,
        /// Accept only `rank1 == rank2`.
        #[arg(long)]
        balanced: bool,
    },
    /// Lift witnesses to a tree with three or four cherries.
    DraismaLift {
        tree: PathBuf,
        /// Strip to a cherry-only base tree and lift back one leaf at a time.
        #[arg(long)]
        lift_chain: bool,
        /// Base certificates; searched for when absent.
        #[arg(long = "base")]
        bases: Vec<PathBuf>,
        /// Certificate on the tree minus its largest leaf, for a single lift.
        #[arg(long)]
        from: Option<PathBuf>,
        /// Side leaves `L1,L2,L3,L4` for a single lift.
        #[arg(long, value_delimiter = ',')]
        leaves: Option<Vec<usize>>,
    },
    /// Recompute a certificate from scratch.
    DraismaVerify { certificate: PathBuf },
    /// Bounds, Jacobian rank and equality verdict for one tree.
    Dimension {
        tree: PathBuf,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = plucker_tree::linalg::DEFAULT_PRIME)]
        prime: u64,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Cluster predicate against the Jacobian verdict over many trees.
    ConjectureSweep {
        /// Files with one Newick tree per line.
        trees: Vec<PathBuf>,
        /// Secant orders to test.
        #[arg(long = "r", value_delimiter = ',', default_values_t = [2usize])]
        orders: Vec<usize>,
        /// Add every tree shape with this many leaves, e.g. `6..9`.
        #[arg(long)]
        shapes: Option<String>,
        /// Keep only trees with these cherry counts.
        #[arg(long, value_delimiter = ',')]
        cherries: Vec<usize>,
        #[arg(long, default_value_t = plucker_tree::linalg::DEFAULT_PRIME)]
        prime: u64,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text.as_bytes()),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, err) = match commands::run(&cli) {
        Ok(text) => (Some(text), None),
        Err((err, partial)) => (partial, Some(err)),
    };
    if let Some(text) = text {
        if let Err(e) = emit(&cli.out, &text) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match err {
        None => ExitCode::SUCCESS,
        Some(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
