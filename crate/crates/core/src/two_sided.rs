//! Reduction of two-sided completion to sparse linear regression.
//!
//! With row features `U` (n x p1) and column features `B` (m x p2), the
//! completion `X = U L Bᵀ` is linear in the p1 x p2 coefficient matrix `L`:
//! `X_ij = Σ_{q,l} L_ql u_iq b_jl`. Each observed entry becomes one
//! regression sample whose features are the products `u_iq b_jl`, and
//! selecting `k` features becomes a cardinality constraint on `vec(L)`.
//! Coefficient `(q, l)` is stored at flat index `q * p2 + l`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, MaskedMatrix};

/// Default bound on `|Ω| * p1 * p2`.
pub const DEFAULT_ELEMENT_CAP: usize = 1 << 25;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRegressionInstance {
    /// Row-major, one row per observed entry.
    pub design: Vec<f64>,
    pub targets: Vec<f64>,
    /// Observed entry behind each design row, in row-major order.
    pub entries: Vec<(usize, usize)>,
    pub sparsity: usize,
    pub gamma: f64,
    pub p1: usize,
    pub p2: usize,
}

impl SparseRegressionInstance {
    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_coefficients(&self) -> usize {
        self.p1 * self.p2
    }

    pub fn flat_index(&self, q: usize, l: usize) -> usize {
        debug_assert!(q < self.p1 && l < self.p2);
        q * self.p2 + l
    }

    pub fn pair(&self, flat: usize) -> (usize, usize) {
        (flat / self.p2, flat % self.p2)
    }

    pub fn design_row(&self, r: usize) -> &[f64] {
        let w = self.n_coefficients();
        &self.design[r * w..(r + 1) * w]
    }

    /// `design · vec(L)` for a flat coefficient vector.
    pub fn apply(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.n_coefficients() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                self.n_coefficients(),
                coefficients.len()
            )));
        }
        Ok((0..self.n_samples())
            .map(|r| self.design_row(r).iter().zip(coefficients).map(|(d, c)| d * c).sum())
            .collect())
    }

    /// CSV with one sample per line, target last.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.n_coefficients())
            .map(|f| {
                let (q, l) = self.pair(f);
                format!("d_{q}_{l}")
            })
            .collect();
        header.push("target".into());
        w.write_record(&header)?;
        for r in 0..self.n_samples() {
            let mut record: Vec<String> = self.design_row(r).iter().map(f64::to_string).collect();
            record.push(self.targets[r].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar listing `flat,q,l` per design column plus the problem sizes.
    pub fn write_index_map(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# p1={} p2={} k={} gamma={}", self.p1, self.p2, self.sparsity, self.gamma)?;
        writeln!(w, "flat,q,l")?;
        for f in 0..self.n_coefficients() {
            let (q, l) = self.pair(f);
            writeln!(w, "{f},{q},{l}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the dense regression instance over the observed entries of `a`.
pub fn reduce_two_sided(
    a: &MaskedMatrix,
    row_features: &FeatureMatrix,
    col_features: &FeatureMatrix,
    k: usize,
    gamma: f64,
    element_cap: usize,
) -> Result<SparseRegressionInstance> {
    if row_features.n_rows() != a.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows but row features have {}",
            a.n_rows(),
            row_features.n_rows()
        )));
    }
    if col_features.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns but column features have {}",
            a.n_cols(),
            col_features.n_rows()
        )));
    }
    let (p1, p2) = (row_features.n_features(), col_features.n_features());
    let width = p1 * p2;
    if k == 0 || k > width {
        return Err(Error::InvalidConfig(format!("k = {k} must lie in [1, p1 * p2 = {width}]")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    let elements = a.nnz().saturating_mul(width);
    if elements > element_cap {
        return Err(Error::TooLarge {
            elements,
            cap: element_cap,
        });
    }
    let mut design = Vec::with_capacity(elements);
    let mut targets = Vec::with_capacity(a.nnz());
    let mut entries = Vec::with_capacity(a.nnz());
    for (i, j, v) in a.entries() {
        let u = row_features.row(i);
        let b = col_features.row(j);
        for &uq in u {
            design.extend(b.iter().map(|&bl| uq * bl));
        }
        targets.push(v);
        entries.push((i, j));
    }
    Ok(SparseRegressionInstance {
        design,
        targets,
        entries,
        sparsity: k,
        gamma,
        p1,
        p2,
    })
}
