use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evaluator::RowFill;
use crate::matrix::FeatureMatrix;
use crate::support::Support;

/// Master value `eta` and exact objective `cost` of one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub eta: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Cutting-plane iterations (master solves).
    pub iterations: usize,
    /// Cuts in the final pool.
    pub cuts: usize,
    pub stochastic_cuts: usize,
    /// Exact objective evaluations, excluding cache hits.
    pub exact_evaluations: usize,
    pub exact_eval_seconds: f64,
    pub master_seconds: f64,
    pub master_nodes: u64,
    pub empty_rows: usize,
    /// Row sample doublings after failed certification.
    pub certification_retries: usize,
    /// Column and row sample sizes of the last stochastic cut, if any.
    pub f: Option<usize>,
    pub g: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub support: Support,
    pub fill: RowFill,
    pub objective_trace: Vec<TracePoint>,
    pub elapsed_seconds: f64,
    pub exact_certified: bool,
    pub diagnostics: Diagnostics,
}

/// On-disk form of a [`CompletionResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub support: Vec<usize>,
    pub objective_trace: Vec<TracePoint>,
    pub elapsed_seconds: f64,
    pub exact_certified: bool,
    pub diagnostics: Diagnostics,
}

impl CompletionResult {
    pub fn final_eta(&self) -> f64 {
        self.objective_trace.last().map_or(0.0, |t| t.eta)
    }

    pub fn final_cost(&self) -> f64 {
        self.objective_trace.last().map_or(f64::NAN, |t| t.cost)
    }

    pub fn predict(&self, features: &FeatureMatrix, i: usize, j: usize) -> f64 {
        self.fill.predict(features, i, j)
    }

    pub fn to_file(&self) -> ResultFile {
        ResultFile {
            support: self.support.indices().to_vec(),
            objective_trace: self.objective_trace.clone(),
            elapsed_seconds: self.elapsed_seconds,
            exact_certified: self.exact_certified,
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &self.to_file())?;
        writeln!(w)?;
        Ok(())
    }
}
