use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdagg::{CenteringMode, WeightMode};

/// Hyperdimensional aggregation of local image features.
///
/// Every command is deterministic: the same configuration and inputs give
/// byte-identical outputs.
#[derive(Debug, Parser)]
#[command(name = "hdagg", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by all commands. Flags override the configuration file.
#[derive(Debug, Args)]
pub struct Global {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Hypervector dimensionality.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Master seed for every random quantity (encoder, benchmark, experiments).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Horizontal subintervals of the position encoding.
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// Vertical subintervals of the position encoding.
    #[arg(long, global = true)]
    pub ny: Option<usize>,
    /// Features kept per image, highest score first (0 keeps all).
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub centering: Option<Centering>,
    /// Skip the random projection; descriptors must already have `dim` entries.
    #[arg(long, global = true)]
    pub no_project: bool,
    /// Match weighting of the exhaustive baseline.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Uniform)]
    pub mode: Mode,
    /// Output file or directory.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// recall@k cut-offs, comma separated.
    #[arg(long, global = true, value_delimiter = ',', value_name = "K,..")]
    pub k: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Centering {
    Set,
    Image,
}

impl From<Centering> for CenteringMode {
    fn from(c: Centering) -> Self {
        match c {
            Centering::Set => CenteringMode::Set,
            Centering::Image => CenteringMode::Image,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Uniform,
    Positional,
}

impl From<Mode> for WeightMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Uniform => WeightMode::Uniform,
            Mode::Positional => WeightMode::Positional,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode feature files into holistic descriptor files (`db.hv`, `query.hv` under --out).
    Encode {
        /// Database feature file or directory.
        #[arg(long)]
        db: PathBuf,
        /// Query feature file or directory.
        #[arg(long)]
        query: Option<PathBuf>,
        /// Plain bundles of the descriptors without pose binding.
        #[arg(long)]
        unbound: bool,
    },
    /// Cosine similarity matrix between two holistic descriptor files (CSV).
    Similarity {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Average precision and recall@k of a similarity matrix; writes the PR curve to --out.
    Evaluate {
        /// Similarity matrix CSV.
        #[arg(long)]
        sim: PathBuf,
        /// Ground-truth CSV of `db_index,query_index` rows.
        #[arg(long)]
        gt: PathBuf,
        /// Descriptor files the matrix must have been computed from.
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        query: Option<PathBuf>,
    },
    /// Exhaustive mutual-match similarity matrix between feature files (CSV).
    Baseline {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Write a synthetic benchmark: `db/`, `query/`, `ground_truth.csv`, `benchmark.toml`.
    Synth(SynthArgs),
    /// Similarity decay of a bundled true match (CSV).
    Capacity {
        /// Trials per bundle size.
        #[arg(long)]
        trials: Option<usize>,
        /// Bundle sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
    },
    /// Average precision over hypervector dimensionalities (CSV).
    SweepDims {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024,2048,4096")]
        dims: Vec<usize>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Average precision over (n_x, n_y) grids (CSV).
    SweepGrid {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7")]
        nx_values: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7")]
        ny_values: Vec<usize>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Holistic and exhaustive average precision over feature budgets (CSV).
    SweepFeatures {
        #[arg(long, value_delimiter = ',', default_value = "10,25,50,100,200")]
        budgets: Vec<usize>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub places: Option<usize>,
    #[arg(long)]
    pub features: Option<usize>,
    /// Write the binary feature container instead of text.
    #[arg(long)]
    pub binary: bool,
    #[command(flatten)]
    pub bench: BenchArgs,
}

/// Benchmark overrides shared by the synthetic commands.
#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Horizontal shift of every query feature as a fraction of the width.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Cosine between a query descriptor and its database original.
    #[arg(long)]
    pub noise_cosine: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Independently seeded benchmark instances.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub places: Option<usize>,
    #[command(flatten)]
    pub bench: BenchArgs,
}
