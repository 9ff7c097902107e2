use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use weyl_core::extremal::{Ensemble, Variant};
use weyl_core::Lemma;

#[derive(Debug, Parser)]
#[command(name = "weyl-lab", version, about = "Experiments on maximal partial sums of wavelet-type systems")]
pub struct Cli {
    /// Cap on worker threads; reports do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Validate the configuration and print the resolved parameters without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a Haar or Franklin system on a dyadic grid and save it.
    Build(BuildArgs),
    /// Fit the wavelet-type constants of a saved system.
    Verify(VerifyArgs),
    /// Apply one operator to a sampled function.
    Op(OpArgs),
    /// Estimate the constant of one supporting inequality.
    Check(CheckArgs),
    /// Search for large maximal projection norms.
    Estimate(EstimateArgs),
    /// Fit the growth exponent of an estimate table.
    Fit(FitArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Haar,
    Franklin,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_enum)]
    pub system: SystemKind,
    /// Number of functions.
    #[arg(long)]
    pub n: usize,
    /// Grid level `J`: functions are sampled on `2^J` cells.
    #[arg(long)]
    pub levels: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Decay exponent; defaults to the system's own, else 0.9.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Hölder exponent; defaults to the system's own, else 1.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    Project,
    PhiBlock,
    HaarBlock,
    Mq,
    Md,
    Square,
    Majorant,
}

#[derive(Debug, Args)]
pub struct OpArgs {
    /// System file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Function file: CSV with columns `x,value` on `2^j` cells, `j <= J`.
    #[arg(long)]
    pub f: PathBuf,
    #[arg(long, value_enum)]
    pub op: OpKind,
    /// Comma-separated indices, or `@chain.json` holding an array of index arrays.
    #[arg(long)]
    pub g: Option<String>,
    /// Exponent of `M_q` and of the block majorant.
    #[arg(long)]
    pub q: Option<f64>,
    /// Block level for `phi-block` and `haar-block`.
    #[arg(long)]
    pub level: Option<u32>,
    /// Integrability exponent used for the default majorant `q`.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Require the exact interval scan for `mq` (grid level at most 12).
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub lemma: Lemma,
    /// System file; every check except `conv` needs one.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// JSON object, or `@file.json`.
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value = "sng")]
    pub variant: Variant,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Chain lengths, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Active indices for `mon` and `full`; defaults to `n`.
    #[arg(long)]
    pub active: Option<usize>,
    #[arg(long, default_value = "mixed")]
    pub ensemble: Ensemble,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 20)]
    pub sweeps: usize,
    #[arg(long, env = "WEYL_LAB_SEED")]
    pub seed: Option<u64>,
    /// Output CSV; witnesses go to a `.witness.json` file beside it.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV written by `estimate`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}
