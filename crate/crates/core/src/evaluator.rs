//! Exact evaluation of the selection objective
//!
//! ```text
//! c(s) = 1/(nm) Σ_i ā_i (I_m + γ W_i (Σ_j s_j b^j b^jᵀ) W_i)^{-1} ā_iᵀ
//! ```
//!
//! and its gradient with respect to the indicator `s`. Each row reduces to a
//! `k x k` ridge system through the matrix inversion lemma:
//!
//! ```text
//! γ_i(s) = ā_iᵀ - V (I_k/γ + Vᵀ W_i V)^{-1} Vᵀ ā_iᵀ
//! ∂c/∂s_j = 1/(nm) Σ_i -γ ((b^j)ᵀ W_i γ_i(s))²
//! ```
//!
//! where `V` holds the selected columns of `B`. Rows are processed in fixed
//! blocks whose partial sums are combined in block order, so results do not
//! depend on the number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, cholesky_solve, dot};
use crate::matrix::{FeatureMatrix, MaskedMatrix, Row};
use crate::support::Support;

/// Rows per reduction block. Fixed so that summation order is independent
/// of scheduling.
pub(crate) const ROW_BLOCK: usize = 64;

/// One outer-approximation constraint `η >= value + gradientᵀ (s - anchor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub anchor: Support,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub stochastic: bool,
}

impl Cut {
    /// Value of the linearization at `s`.
    pub fn evaluate(&self, s: &Support) -> f64 {
        let at_s: f64 = s.indices().iter().map(|&j| self.gradient[j]).sum();
        let at_anchor: f64 = self.anchor.indices().iter().map(|&j| self.gradient[j]).sum();
        self.value + (at_s - at_anchor)
    }
}

/// Scratch buffers reused across rows of one block.
#[derive(Default)]
pub(crate) struct RowScratch {
    gram: Vec<f64>,
    coef: Vec<f64>,
    v: Vec<f64>,
    residual: Vec<f64>,
    weighted: Vec<f64>,
    pub(crate) cols: Vec<usize>,
    pub(crate) vals: Vec<f64>,
}

/// Partial sums over a block of rows.
pub(crate) struct Partial {
    pub quad: f64,
    pub grad: Vec<f64>,
}

impl Partial {
    fn new(p: usize, with_gradient: bool) -> Self {
        Self {
            quad: 0.0,
            grad: if with_gradient { vec![0.0; p] } else { Vec::new() },
        }
    }

    fn absorb(&mut self, other: &Partial) {
        self.quad += other.quad;
        for (g, o) in self.grad.iter_mut().zip(&other.grad) {
            *g += o;
        }
    }
}

/// Solves the ridge system of one row restricted to `cols`. On return
/// `scratch.coef` holds `u = (I/γ + VᵀWV)^{-1} Vᵀ ā` and `scratch.v` holds the
/// gathered `|cols| x k` block of `V`.
fn solve_row_system(
    row_index: usize,
    cols: &[usize],
    vals: &[f64],
    features: &FeatureMatrix,
    support: &Support,
    gamma: f64,
    scratch: &mut RowScratch,
) -> Result<()> {
    let k = support.k();
    let idx = support.indices();
    scratch.gram.clear();
    scratch.gram.resize(k * k, 0.0);
    scratch.coef.clear();
    scratch.coef.resize(k, 0.0);
    scratch.v.clear();
    scratch.v.reserve(cols.len() * k);
    let ridge = 1.0 / gamma;
    for a in 0..k {
        scratch.gram[a * k + a] = ridge;
    }
    for (&c, &y) in cols.iter().zip(vals) {
        let brow = features.row(c);
        let start = scratch.v.len();
        scratch.v.extend(idx.iter().map(|&j| brow[j]));
        let v = &scratch.v[start..];
        for a in 0..k {
            scratch.coef[a] += y * v[a];
            for b in 0..=a {
                scratch.gram[a * k + b] += v[a] * v[b];
            }
        }
    }
    if !cholesky_in_place(&mut scratch.gram, k) {
        return Err(Error::NumericalFailure { row: row_index });
    }
    cholesky_solve(&scratch.gram, k, &mut scratch.coef);
    if scratch.coef.iter().any(|u| !u.is_finite()) {
        return Err(Error::NumericalFailure { row: row_index });
    }
    Ok(())
}

/// Processes one row's observed slice: returns `ā γ_i` and, if `grad` is
/// nonempty, adds `-γ ((b^j)ᵀ W γ_i)²` to each component.
fn accumulate_row(
    row_index: usize,
    cols: &[usize],
    vals: &[f64],
    features: &FeatureMatrix,
    support: &Support,
    gamma: f64,
    scratch: &mut RowScratch,
    grad: &mut [f64],
) -> Result<f64> {
    if cols.is_empty() {
        return Ok(0.0);
    }
    solve_row_system(row_index, cols, vals, features, support, gamma, scratch)?;
    let k = support.k();
    scratch.residual.clear();
    let mut quad = 0.0;
    for (e, &y) in vals.iter().enumerate() {
        let r = y - dot(&scratch.v[e * k..(e + 1) * k], &scratch.coef);
        quad += y * r;
        scratch.residual.push(r);
    }
    if !quad.is_finite() {
        return Err(Error::NumericalFailure { row: row_index });
    }
    if !grad.is_empty() {
        let p = features.n_features();
        scratch.weighted.clear();
        scratch.weighted.resize(p, 0.0);
        for (&c, &r) in cols.iter().zip(&scratch.residual) {
            for (w, b) in scratch.weighted.iter_mut().zip(features.row(c)) {
                *w += r * b;
            }
        }
        for (g, w) in grad.iter_mut().zip(&scratch.weighted) {
            *g -= gamma * w * w;
        }
    }
    Ok(quad)
}

/// Accumulates row contributions over `n_items` work items in fixed blocks.
/// `observe(item, scratch)` returns the row index and fills
/// `scratch.cols`/`scratch.vals` with the observed slice to use.
pub(crate) fn reduce_rows<F>(
    n_items: usize,
    features: &FeatureMatrix,
    support: &Support,
    gamma: f64,
    with_gradient: bool,
    observe: F,
) -> Result<Partial>
where
    F: Fn(usize, &mut RowScratch) -> usize + Sync,
{
    let p = features.n_features();
    let n_blocks = n_items.div_ceil(ROW_BLOCK);
    let blocks: Vec<Partial> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut partial = Partial::new(p, with_gradient);
            let mut scratch = RowScratch::default();
            let hi = ((b + 1) * ROW_BLOCK).min(n_items);
            for item in b * ROW_BLOCK..hi {
                let row_index = observe(item, &mut scratch);
                let cols = std::mem::take(&mut scratch.cols);
                let vals = std::mem::take(&mut scratch.vals);
                let quad = accumulate_row(
                    row_index,
                    &cols,
                    &vals,
                    features,
                    support,
                    gamma,
                    &mut scratch,
                    &mut partial.grad,
                );
                scratch.cols = cols;
                scratch.vals = vals;
                partial.quad += quad?;
            }
            Ok(partial)
        })
        .collect::<Result<_>>()?;
    let mut total = Partial::new(p, with_gradient);
    for b in &blocks {
        total.absorb(b);
    }
    Ok(total)
}

fn check_inputs(a: &MaskedMatrix, b: &FeatureMatrix, s: &Support, gamma: f64) -> Result<()> {
    if a.n_cols() != b.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns but feature matrix has {} rows",
            a.n_cols(),
            b.n_rows()
        )));
    }
    if let Some(&last) = s.indices().last() {
        if last >= b.n_features() {
            return Err(Error::InvalidSupport(format!(
                "index {last} out of range for {} features",
                b.n_features()
            )));
        }
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

fn exact_partial(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    s: &Support,
    gamma: f64,
    with_gradient: bool,
) -> Result<Partial> {
    check_inputs(a, b, s, gamma)?;
    reduce_rows(a.n_rows(), b, s, gamma, with_gradient, |i, scratch| {
        let row = a.row(i);
        scratch.cols.clear();
        scratch.cols.extend_from_slice(row.cols);
        scratch.vals.clear();
        scratch.vals.extend_from_slice(row.vals);
        i
    })
}

/// `γ_i(s)` at the observed positions of `row`.
pub fn row_gamma(
    row: Row<'_>,
    features: &FeatureMatrix,
    support: &Support,
    gamma: f64,
) -> Result<Vec<f64>> {
    if row.is_empty() {
        return Ok(Vec::new());
    }
    let mut scratch = RowScratch::default();
    solve_row_system(row.index, row.cols, row.vals, features, support, gamma, &mut scratch)?;
    let k = support.k();
    Ok(row
        .vals
        .iter()
        .enumerate()
        .map(|(e, &y)| y - dot(&scratch.v[e * k..(e + 1) * k], &scratch.coef))
        .collect())
}

/// The objective `c(s)`.
pub fn cost(a: &MaskedMatrix, b: &FeatureMatrix, s: &Support, gamma: f64) -> Result<f64> {
    let total = exact_partial(a, b, s, gamma, false)?;
    Ok(total.quad / (a.n_rows() as f64 * a.n_cols() as f64))
}

/// The gradient `∇c(s)`; every component is nonpositive.
pub fn cost_gradient(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    s: &Support,
    gamma: f64,
) -> Result<Vec<f64>> {
    Ok(make_cut(a, b, s, gamma)?.gradient)
}

/// Value and gradient at `s` in one pass over the rows.
pub fn make_cut(a: &MaskedMatrix, b: &FeatureMatrix, s: &Support, gamma: f64) -> Result<Cut> {
    let total = exact_partial(a, b, s, gamma, true)?;
    let scale = a.n_rows() as f64 * a.n_cols() as f64;
    Ok(Cut {
        anchor: s.clone(),
        value: total.quad / scale,
        gradient: total.grad.iter().map(|g| g / scale).collect(),
        stochastic: false,
    })
}

/// Per-row ridge coefficients for a fixed support.
#[derive(Debug, Clone, PartialEq)]
pub struct RowFill {
    pub support: Support,
    n_rows: usize,
    coefficients: Vec<f64>,
}

impl RowFill {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Coefficients `u_i` of row `i`, one per selected feature.
    pub fn coefficients(&self, i: usize) -> &[f64] {
        let k = self.support.k();
        &self.coefficients[i * k..(i + 1) * k]
    }

    /// Completed entry `x_ij = Σ_l u_il B[j, s_l]`.
    pub fn predict(&self, features: &FeatureMatrix, i: usize, j: usize) -> f64 {
        let brow = features.row(j);
        self.coefficients(i)
            .iter()
            .zip(self.support.indices())
            .map(|(u, &l)| u * brow[l])
            .sum()
    }

    /// The whole completed row `x_i`.
    pub fn complete_row(&self, features: &FeatureMatrix, i: usize) -> Vec<f64> {
        (0..features.n_rows()).map(|j| self.predict(features, i, j)).collect()
    }
}

/// Refits every row on the selected features:
/// `u_iᵀ = (I_k/γ + VᵀW_iV)^{-1} Vᵀ ā_iᵀ`.
pub fn fill_rows(a: &MaskedMatrix, b: &FeatureMatrix, s: &Support, gamma: f64) -> Result<RowFill> {
    check_inputs(a, b, s, gamma)?;
    let k = s.k();
    let per_row: Vec<Vec<f64>> = (0..a.n_rows())
        .into_par_iter()
        .map_init(RowScratch::default, |scratch, i| {
            let row = a.row(i);
            if row.is_empty() {
                return Ok(vec![0.0; k]);
            }
            solve_row_system(i, row.cols, row.vals, b, s, gamma, scratch)?;
            Ok(scratch.coef.clone())
        })
        .collect::<Result<_>>()?;
    Ok(RowFill {
        support: s.clone(),
        n_rows: a.n_rows(),
        coefficients: per_row.concat(),
    })
}
