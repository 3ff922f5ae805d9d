//! Row and column subsampling for stochastic cuts.
//!
//! A plan draws a row sample `G` of size `g` and, independently for every
//! sampled row, a column sample `F_i` of size `f`, all without replacement.
//! The stochastic estimate of the objective and its gradient is then
//!
//! ```text
//! c̃(s)  = 1/g Σ_{i∈G} 1/f ā_{F_i} γ^F_i(s)
//! ∇c̃(s) = 1/g Σ_{i∈G} -γ (B_{F_i}ᵀ W_i γ^F_i(s))² / f
//! ```
//!
//! with `γ^F_i` the ridge residual computed on the columns `F_i` only.
//!
//! Randomness is counter based: every draw comes from a ChaCha stream keyed
//! by `(seed, iteration)` and indexed by the row it belongs to, so plans can
//! be generated in parallel and reproduced exactly.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluator::{reduce_rows, Cut};
use crate::matrix::{FeatureMatrix, MaskedMatrix};
use crate::support::Support;

/// Independent key spaces for the different consumers of randomness.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Domain {
    Plan = 1,
    WarmStart = 2,
    Synthetic = 3,
}

/// A ChaCha8 generator keyed by `(seed, domain, counter)` on stream `stream`.
pub(crate) fn keyed_rng(seed: u64, domain: Domain, counter: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&counter.to_le_bytes());
    key[24..].copy_from_slice(b"optcmplt");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Sample sizes `(f, g)`:
///
/// ```text
/// g = min(g0, n)
/// f = min(ceil(c k sqrt(mn) ln(sqrt(mn)) / (alpha g)), m)
/// ```
///
/// both clamped to at least 1. `alpha` is the observed density.
pub fn sample_sizes(
    n: usize,
    m: usize,
    alpha: f64,
    k: usize,
    g0: usize,
    c_const: f64,
) -> Result<(usize, usize)> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidDensity(alpha));
    }
    let g = g0.min(n).max(1);
    let root = (m as f64 * n as f64).sqrt();
    let raw = (c_const * k as f64 * root * root.ln() / (alpha * g as f64)).ceil();
    let f = if raw >= m as f64 { m } else { raw.max(1.0) as usize };
    Ok((f.max(1), g))
}

/// Columns drawn for one sampled row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSample {
    /// Every column (`f = m`).
    All,
    /// Sorted distinct column indices.
    Subset(Vec<usize>),
}

/// Row sample `G` with one column sample `F_i` per sampled row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    pub f: usize,
    pub g: usize,
    /// Sorted distinct row indices.
    pub rows: Vec<usize>,
    /// `columns[t]` belongs to `rows[t]`.
    pub columns: Vec<ColumnSample>,
}

impl SamplePlan {
    /// The deterministic plan that samples everything.
    pub fn full(n: usize, m: usize) -> Self {
        Self {
            f: m,
            g: n,
            rows: (0..n).collect(),
            columns: vec![ColumnSample::All; n],
        }
    }

    pub fn column_indices(&self, t: usize, m: usize) -> Vec<usize> {
        match &self.columns[t] {
            ColumnSample::All => (0..m).collect(),
            ColumnSample::Subset(c) => c.clone(),
        }
    }
}

/// Draws `G` and each `F_i` uniformly without replacement. The plan depends
/// only on `(seed, iteration)`; `F_i` depends additionally on the row `i`.
pub fn draw_plan(n: usize, m: usize, f: usize, g: usize, seed: u64, iteration: u64) -> Result<SamplePlan> {
    draw_plan_keyed(n, m, f, g, seed, Domain::Plan, iteration)
}

pub(crate) fn draw_plan_keyed(
    n: usize,
    m: usize,
    f: usize,
    g: usize,
    seed: u64,
    domain: Domain,
    iteration: u64,
) -> Result<SamplePlan> {
    if g == 0 || g > n || f == 0 || f > m {
        return Err(Error::InvalidConfig(format!(
            "sample sizes (f = {f}, g = {g}) must lie in [1, m = {m}] x [1, n = {n}]"
        )));
    }
    let rows: Vec<usize> = if g == n {
        (0..n).collect()
    } else {
        let mut rng = keyed_rng(seed, domain, iteration, 0);
        let mut r = index::sample(&mut rng, n, g).into_vec();
        r.sort_unstable();
        r
    };
    let columns = if f == m {
        vec![ColumnSample::All; g]
    } else {
        rows.par_iter()
            .map(|&i| {
                let mut rng = keyed_rng(seed, domain, iteration, i as u64 + 1);
                let mut c = index::sample(&mut rng, m, f).into_vec();
                c.sort_unstable();
                ColumnSample::Subset(c)
            })
            .collect()
    };
    Ok(SamplePlan { f, g, rows, columns })
}

fn stochastic_partial(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    s: &Support,
    gamma: f64,
    plan: &SamplePlan,
    with_gradient: bool,
) -> Result<crate::evaluator::Partial> {
    if a.n_cols() != b.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns but feature matrix has {} rows",
            a.n_cols(),
            b.n_rows()
        )));
    }
    if plan.rows.len() != plan.columns.len() || plan.rows.iter().any(|&i| i >= a.n_rows()) {
        return Err(Error::InvalidConfig("sample plan does not fit the matrix".into()));
    }
    reduce_rows(plan.rows.len(), b, s, gamma, with_gradient, |t, scratch| {
        let i = plan.rows[t];
        let row = a.row(i);
        scratch.cols.clear();
        scratch.vals.clear();
        match &plan.columns[t] {
            ColumnSample::All => {
                scratch.cols.extend_from_slice(row.cols);
                scratch.vals.extend_from_slice(row.vals);
            }
            ColumnSample::Subset(sample) => {
                // merge of two sorted index lists
                let (mut x, mut y) = (0, 0);
                while x < row.cols.len() && y < sample.len() {
                    match row.cols[x].cmp(&sample[y]) {
                        std::cmp::Ordering::Less => x += 1,
                        std::cmp::Ordering::Greater => y += 1,
                        std::cmp::Ordering::Equal => {
                            scratch.cols.push(row.cols[x]);
                            scratch.vals.push(row.vals[x]);
                            x += 1;
                            y += 1;
                        }
                    }
                }
            }
        }
        i
    })
}

/// Stochastic value and gradient at `s` under `plan`.
pub fn stochastic_cost_gradient(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    s: &Support,
    gamma: f64,
    plan: &SamplePlan,
) -> Result<Cut> {
    let total = stochastic_partial(a, b, s, gamma, plan, true)?;
    let scale = plan.g as f64 * plan.f as f64;
    Ok(Cut {
        anchor: s.clone(),
        value: total.quad / scale,
        gradient: total.grad.iter().map(|g| g / scale).collect(),
        stochastic: true,
    })
}

/// Stochastic value only.
pub fn stochastic_cost(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    s: &Support,
    gamma: f64,
    plan: &SamplePlan,
) -> Result<f64> {
    let total = stochastic_partial(a, b, s, gamma, plan, false)?;
    Ok(total.quad / (plan.g as f64 * plan.f as f64))
}
