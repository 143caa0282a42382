//! `vlorenz`: fit bivariate allocations, evaluate their Lorenz maps, ILFs,
//! α-curves and Gini indices, compare allocations, and draw synthetic
//! samples. Every run writes its outputs plus a manifest that `rerun`
//! replays byte for byte.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

mod artifact;
mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "vlorenz", version, about = "Vector Lorenz maps and Gini indices for bivariate allocations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Fit the vector quantile of a weighted sample (CSV: x1,x2,weight[,implicate]).
    Fit(FitArgs),
    /// Lorenz map on a rank grid.
    Lorenz(LorenzArgs),
    /// Inverse Lorenz function on a share grid.
    Ilf(IlfArgs),
    /// α-Lorenz curves (level sets of the ILF).
    Curves(CurvesArgs),
    /// Gini index and the alternative index.
    Gini(GiniArgs),
    /// Lorenz and weak Lorenz order between two fits.
    Compare(CompareArgs),
    /// Draw a synthetic sample.
    Synth(SynthArgs),
    /// Replay the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct FitArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Stop when every cell area is within tol·min(weight) of its weight.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Separate duplicate points by relative noise of this size instead of merging them.
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fit every implicate in the input (required when there is more than one).
    #[arg(long)]
    pub rii: bool,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct LorenzArgs {
    pub fit: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct IlfArgs {
    pub fit: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 100_000)]
    pub mc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Plain shares.
    Share,
    /// Shares mapped by t = z(1 − ln z), so the identical allocation's curves are right angles at α.
    Identical,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct CurvesArgs {
    pub fit: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    #[arg(long, default_value_t = 100_000)]
    pub mc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Scale::Share)]
    pub scale: Scale,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct GiniArgs {
    pub fit: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Nodes per axis of both the rank grid and the ILF grid.
    #[arg(long, default_value_t = 51)]
    pub grid: usize,
    #[arg(long, default_value_t = 100_000)]
    pub mc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for Lorenz map comparisons.
    #[arg(long, default_value_t = 1e-6)]
    pub slack: f64,
    /// ILF comparisons allow this many Monte Carlo standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub sigmas: f64,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    LognormalPlackett,
    TwoPointX,
    TwoPointXTilde,
    Identical,
    ComonotoneUniform,
    /// X₁ + pX₂ = 1 + p with X₁ uniform on [1 − spread, 1 + spread].
    Egalitarian,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Plackett odds ratio (1 is independence).
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Relative price of the egalitarian family.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vlorenz: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
