use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kronsketch::sketch::{Algorithm, Preconditioner};

use crate::config::{BasisKind, Format, OracleKind, Precision};

#[derive(Debug, Parser)]
#[command(name = "kronsketch", version, about = "Gradient and HVP sketching experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,

    #[command(flatten)]
    pub knobs: Knobs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// TDA correlation and JL failure rate over (algorithm × D).
    Quality,
    /// Median forward() wall time over (algorithm × D), with a chunked dense baseline.
    Perf,
    /// Arnoldi on the sketched Hessian of a quadratic model.
    Eigen,
    /// Doubling search for the intrinsic dimension.
    Intdim,
    /// Per-block and sketched TDA correlations.
    Tda,
    /// Re-run the configuration embedded in a report.
    Replay { report: PathBuf },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Sketch algorithms, comma separated or repeated.
    #[arg(long = "algo", global = true, value_delimiter = ',')]
    pub algo: Vec<Algorithm>,

    /// Parameter count N.
    #[arg(long, global = true)]
    pub n: Option<usize>,

    /// Target dimensions D, comma separated or repeated.
    #[arg(long = "d", global = true, value_delimiter = ',')]
    pub d: Vec<usize>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    pub oracle: Option<OracleKind>,

    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[arg(long, global = true, value_enum)]
    pub precision: Option<Precision>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// SKVB file of input vectors, used in place of oracle gradients.
    #[arg(long, global = true)]
    pub vectors: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Knobs {
    /// Sketch seeds per cell, `seed, seed+1, …`.
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    #[arg(long, global = true)]
    pub preconditioner: Option<Preconditioner>,

    #[arg(long, global = true)]
    pub pairs: Option<usize>,
    #[arg(long, global = true)]
    pub jl_vectors: Option<usize>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Nonzeros per JL test vector; dense Gaussian when absent.
    #[arg(long, global = true)]
    pub jl_nnz: Option<usize>,

    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true)]
    pub warmup: Option<usize>,
    #[arg(long, global = true)]
    pub no_baseline: bool,

    /// Arnoldi steps.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,

    #[arg(long, global = true)]
    pub d_min: Option<usize>,
    #[arg(long, global = true)]
    pub d_max: Option<usize>,
    /// Steps per search window.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub target: Option<f64>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub verify_windows: Option<usize>,

    #[arg(long, global = true)]
    pub examples: Option<usize>,
    #[arg(long, global = true)]
    pub layers: Option<usize>,
    #[arg(long, global = true)]
    pub clusters: Option<usize>,
    #[arg(long, global = true)]
    pub layer_decay: Option<f64>,
    #[arg(long, global = true)]
    pub noise: Option<f64>,
    #[arg(long, global = true)]
    pub ridge: Option<f64>,

    /// Power-law scale `c` of the quadratic spectrum.
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub outliers: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    pub basis: Option<BasisKind>,

    /// Planted subspace dimension.
    #[arg(long, global = true)]
    pub planted: Option<usize>,
}
