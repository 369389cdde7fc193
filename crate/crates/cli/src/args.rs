use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spinv_core::EnsembleKind;

#[derive(Debug, Parser)]
#[command(
    name = "spinv",
    version,
    about = "Sparse and lp-minimal generalized inverses, with predictions and experiments for their Frobenius norms"
)]
pub struct Cli {
    /// Worker threads for experiment subcommands [default: machine parallelism]
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predicted threshold t* and concentration point alpha* for (p, delta)
    Predict(PredictArgs),
    /// Compute the lp-minimal generalized inverse of a CSV matrix
    Invert(InvertArgs),
    /// Verify that a CSV matrix is a generalized inverse of another
    Check(CheckArgs),
    /// Concentration run: per-trial normalized Frobenius norms
    Experiment(ExperimentArgs),
    /// Random-submatrix inverses against the sparse pseudoinverse
    Baseline(BaselineArgs),
    /// Sample a subsampled Radon forward matrix
    Radon(RadonArgs),
    /// Ratio of squared Frobenius norms on tomography matrices per delta
    TomoTable(TomoArgs),
    /// Means across matrix ensembles for p = 1 and p = 2
    Ensembles(EnsembleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeArg {
    Limit,
    Finite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Admm,
    Lp,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub delta: f64,
    /// Column count; selects the finite-n regime unless --regime is given
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    /// Gaussian draws for the finite-n Monte Carlo functional
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Headerless CSV, one matrix row per line
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub p: f64,
    /// Absolute ADMM stopping tolerance
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = BackendArg::Admm)]
    pub backend: BackendArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub inverse: PathBuf,
    /// Bound on the Frobenius residuals of A X A - A and A X - I
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, value_parser = parse_ensemble)]
    pub ensemble: EnsembleKind,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include the wall_ms column, which varies between runs
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub experiments: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RadonArgs {
    #[arg(long, default_value_t = 15)]
    pub panel: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub deltas: Vec<f64>,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 15)]
    pub panel: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub deltas: Vec<f64>,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_ensemble(s: &str) -> Result<EnsembleKind, String> {
    s.parse().map_err(|e: spinv_core::Error| e.to_string())
}
