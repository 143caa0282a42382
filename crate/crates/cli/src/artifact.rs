//! On-disk form of a fitted allocation.
//!
//! The artifact stores sites, weights and dual weights, which determine the
//! power diagram; cell vertex lists are written for plotting and ignored on
//! load, where the diagram is rebuilt from the duals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use vlorenz::ot_solver::TransportFit;
use vlorenz::{Execution, Point};

use crate::error::{CliError, Result};

pub const FORMAT: &str = "vlorenz-fit";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct FitArtifact {
    pub format: String,
    pub version: u32,
    pub fits: Vec<FitRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitRecord {
    pub implicate: Option<u32>,
    /// Weighted means of the raw data, before normalization.
    pub means: Point,
    pub residual: f64,
    pub iterations: usize,
    pub sites: Vec<Point>,
    pub weights: Vec<f64>,
    pub duals: Vec<f64>,
    pub cells: Vec<Vec<Point>>,
}

impl FitRecord {
    pub fn new(fit: &TransportFit, implicate: Option<u32>, means: Point) -> Self {
        FitRecord {
            implicate,
            means,
            residual: fit.residual(),
            iterations: fit.iterations(),
            sites: fit.sites().to_vec(),
            weights: fit.weights().to_vec(),
            duals: fit.duals().to_vec(),
            cells: fit.cells().iter().map(|c| c.vertices().to_vec()).collect(),
        }
    }

    pub fn rebuild(&self) -> Result<TransportFit> {
        TransportFit::from_parts(&self.sites, &self.weights, &self.duals, self.iterations, Execution::default())
            .map_err(|e| CliError::Data(format!("fit artifact does not rebuild: {e}")))
    }
}

pub fn read(path: &Path) -> Result<Vec<TransportFit>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let artifact: FitArtifact = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if artifact.format != FORMAT || artifact.version != VERSION {
        return Err(CliError::Data(format!(
            "{}: not a {FORMAT} v{VERSION} artifact",
            path.display()
        )));
    }
    if artifact.fits.is_empty() {
        return Err(CliError::Data(format!("{}: artifact holds no fits", path.display())));
    }
    artifact.fits.iter().map(FitRecord::rebuild).collect()
}
