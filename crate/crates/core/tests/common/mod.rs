//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use optcomplete::evaluator::Cut;
use optcomplete::{FeatureMatrix, MaskedMatrix, Support};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random masked matrix with roughly `density` observed entries (at least
/// one) and standard-uniform-ish features.
pub fn random_problem(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    p: usize,
    density: f64,
) -> (MaskedMatrix, FeatureMatrix) {
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if rng.random::<f64>() < density {
                triplets.push((i, j, rng.random_range(-2.0..2.0)));
            }
        }
    }
    if triplets.is_empty() {
        triplets.push((0, 0, 1.0));
    }
    let a = MaskedMatrix::from_triplets(n, m, triplets).unwrap();
    let b = FeatureMatrix::from_row_major(m, p, (0..m * p).map(|_| rng.random_range(-1.0..1.0)).collect())
        .unwrap();
    (a, b)
}

/// Objective at a real weight vector `s`, via the m x m inverse
/// `(I + γ W (Σ s_j b_j b_jᵀ) W)^{-1}` for every row.
pub fn dense_cost(a: &MaskedMatrix, b: &FeatureMatrix, weights: &[f64], gamma: f64) -> f64 {
    let (n, m, p) = (a.n_rows(), a.n_cols(), b.n_features());
    let bm = DMatrix::from_fn(m, p, |r, c| b.get(r, c));
    let kernel = &bm * DMatrix::from_diagonal(&DVector::from_column_slice(weights)) * bm.transpose();
    let mut total = 0.0;
    for i in 0..n {
        let row = a.row(i);
        let mut w = DMatrix::<f64>::zeros(m, m);
        let mut abar = DVector::<f64>::zeros(m);
        for (&j, &v) in row.cols.iter().zip(row.vals) {
            w[(j, j)] = 1.0;
            abar[j] = v;
        }
        let mat = DMatrix::<f64>::identity(m, m) + gamma * &w * &kernel * &w;
        let inv = mat.try_inverse().expect("I + PSD is invertible");
        total += abar.dot(&(inv * &abar));
    }
    total / (n as f64 * m as f64)
}

pub fn indicator(s: &Support, p: usize) -> Vec<f64> {
    let mut w = vec![0.0; p];
    for &j in s.indices() {
        w[j] = 1.0;
    }
    w
}

/// All k-subsets of 0..p in lexicographic order.
pub fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > p {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < p - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for t in i + 1..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

/// Minimizer of `value` over all k-subsets; ties go to the first in
/// lexicographic order.
pub fn brute_force(p: usize, k: usize, mut value: impl FnMut(&Support) -> f64) -> (Support, f64) {
    let mut best: Option<(Support, f64)> = None;
    for idx in combinations(p, k) {
        let s = Support::new(idx, p).unwrap();
        let v = value(&s);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((s, v));
        }
    }
    best.unwrap()
}

/// Piecewise-linear model value recomputed from scratch.
pub fn model_value(cuts: &[Cut], s: &Support) -> f64 {
    cuts.iter()
        .map(|c| {
            let at_s: f64 = s.indices().iter().map(|&j| c.gradient[j]).sum();
            let at_anchor: f64 = c.anchor.indices().iter().map(|&j| c.gradient[j]).sum();
            c.value + (at_s - at_anchor)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn random_cuts(rng: &mut ChaCha8Rng, p: usize, k: usize, count: usize) -> Vec<Cut> {
    (0..count)
        .map(|_| {
            let mut idx: Vec<usize> = rand::seq::index::sample(rng, p, k).into_vec();
            idx.sort_unstable();
            Cut {
                anchor: Support::new(idx, p).unwrap(),
                value: rng.random_range(0.0..2.0),
                gradient: (0..p).map(|_| -rng.random_range(0.0..1.0)).collect(),
                stochastic: false,
            }
        })
        .collect()
}
