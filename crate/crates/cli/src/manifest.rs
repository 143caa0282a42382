//! Run manifests: everything needed to replay a command, and nothing that
//! changes between runs (no timestamps, no host names).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::Command;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub subcommand: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub solver: Option<SolverSettings>,
    pub grid: Option<usize>,
    pub mc_samples: Option<usize>,
    pub alphas: Option<Vec<f64>>,
    pub command: Command,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl RunManifest {
    pub fn new(command: &Command, outputs: Vec<PathBuf>) -> Self {
        let mut m = RunManifest {
            tool: "vlorenz".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema: SCHEMA,
            subcommand: String::new(),
            inputs: Vec::new(),
            outputs,
            seed: None,
            solver: None,
            grid: None,
            mc_samples: None,
            alphas: None,
            command: command.clone(),
        };
        match command {
            Command::Fit(a) => {
                m.subcommand = "fit".into();
                m.inputs = vec![a.input.clone()];
                m.seed = Some(a.seed);
                m.solver = Some(SolverSettings {
                    tolerance: a.tol,
                    max_iterations: a.max_iter,
                });
            }
            Command::Lorenz(a) => {
                m.subcommand = "lorenz".into();
                m.inputs = vec![a.fit.clone()];
                m.grid = Some(a.grid);
            }
            Command::Ilf(a) => {
                m.subcommand = "ilf".into();
                m.inputs = vec![a.fit.clone()];
                m.grid = Some(a.grid);
                m.mc_samples = Some(a.mc);
                m.seed = Some(a.seed);
            }
            Command::Curves(a) => {
                m.subcommand = "curves".into();
                m.inputs = vec![a.fit.clone()];
                m.grid = Some(a.grid);
                m.mc_samples = Some(a.mc);
                m.seed = Some(a.seed);
                m.alphas = Some(a.alpha.clone());
            }
            Command::Gini(a) => {
                m.subcommand = "gini".into();
                m.inputs = vec![a.fit.clone()];
            }
            Command::Compare(a) => {
                m.subcommand = "compare".into();
                m.inputs = vec![a.a.clone(), a.b.clone()];
                m.grid = Some(a.grid);
                m.mc_samples = Some(a.mc);
                m.seed = Some(a.seed);
            }
            Command::Synth(a) => {
                m.subcommand = "synth".into();
                m.seed = Some(a.seed);
            }
            Command::Rerun(a) => {
                m.subcommand = "rerun".into();
                m.inputs = vec![a.manifest.clone()];
            }
        }
        m
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if m.tool != "vlorenz" || m.schema != SCHEMA {
            return Err(CliError::Data(format!(
                "{}: not a vlorenz manifest (schema {SCHEMA})",
                path.display()
            )));
        }
        Ok(m)
    }
}
