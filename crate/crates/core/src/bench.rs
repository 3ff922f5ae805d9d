//! Planted synthetic instances and the benchmark harness.
//!
//! An instance draws `U` (n x k), `V` (k x m) and a confounder `Z`
//! ((p-k) x m) with Uniform[0,1] entries, observes `A = UV + E` with
//! Gaussian `E`, hides each entry independently with probability `mu`, and
//! hides the columns of `Vᵀ` among those of `Zᵀ` in a shuffled feature
//! matrix. Errors are scored against the noiseless signal `UV` on the
//! hidden entries.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::drivers::Algorithm;
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, MaskedMatrix};
use crate::result::CompletionResult;
use crate::sampler::{keyed_rng, Domain};
use crate::support::Support;

/// Truth values at or below this magnitude are not scored.
pub const MAPE_GUARD: f64 = 1e-12;

pub const DEFAULT_GAMMA_GRID: [f64; 5] = [1e-2, 1e-1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub k: usize,
    /// Fraction of entries hidden.
    pub mu: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::InvalidConfig("n, m and k must be positive".into()));
        }
        if self.k > self.p {
            return Err(Error::InvalidConfig(format!("k = {} exceeds p = {}", self.k, self.p)));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(Error::InvalidConfig(format!("mu must lie in [0, 1), got {}", self.mu)));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_sd must be nonnegative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub spec: SyntheticSpec,
    pub masked: MaskedMatrix,
    pub features: FeatureMatrix,
    pub true_support: Support,
    /// `U`, row-major n x k.
    row_factors: Vec<f64>,
    /// `V`, row-major k x m.
    col_factors: Vec<f64>,
}

impl SyntheticInstance {
    /// Noiseless value `(UV)_ij`.
    pub fn signal(&self, i: usize, j: usize) -> f64 {
        let (k, m) = (self.spec.k, self.spec.m);
        (0..k)
            .map(|t| self.row_factors[i * k + t] * self.col_factors[t * m + j])
            .sum()
    }

    pub fn signal_row(&self, i: usize) -> Vec<f64> {
        (0..self.spec.m).map(|j| self.signal(i, j)).collect()
    }

    /// Hidden entries `(i, j)` of row `i`.
    pub fn hidden_in_row(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let observed = self.masked.row(i).cols;
        let mut next = 0;
        (0..self.spec.m).filter(move |&j| {
            if next < observed.len() && observed[next] == j {
                next += 1;
                false
            } else {
                true
            }
        })
    }
}

/// Draws a planted instance; identical specs give identical instances.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let SyntheticSpec { n, m, p, k, mu, noise_sd, seed } = *spec;
    let mut rng = keyed_rng(seed, Domain::Synthetic, 0, 0);
    let row_factors: Vec<f64> = (0..n * k).map(|_| rng.random::<f64>()).collect();
    let col_factors: Vec<f64> = (0..k * m).map(|_| rng.random::<f64>()).collect();
    let confounders: Vec<f64> = (0..(p - k) * m).map(|_| rng.random::<f64>()).collect();
    let mut position: Vec<usize> = (0..p).collect();
    position.shuffle(&mut rng);

    let mut features = vec![0.0; m * p];
    for j in 0..m {
        for t in 0..k {
            features[j * p + position[t]] = col_factors[t * m + j];
        }
        for t in 0..p - k {
            features[j * p + position[k + t]] = confounders[t * m + j];
        }
    }
    let features = FeatureMatrix::from_row_major(m, p, features)?;
    let true_support = Support::from_unsorted(position[..k].to_vec(), p)?;

    let noise = Normal::new(0.0, noise_sd)
        .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = keyed_rng(seed, Domain::Synthetic, 1, i as u64 + 1);
            let u = &row_factors[i * k..(i + 1) * k];
            let mut row = Vec::with_capacity(((1.0 - mu) * m as f64) as usize + 1);
            for j in 0..m {
                let hidden = rng.random::<f64>() < mu;
                let e = noise.sample(&mut rng);
                if !hidden {
                    let signal: f64 = (0..k).map(|t| u[t] * col_factors[t * m + j]).sum();
                    row.push((j, signal + e));
                }
            }
            row
        })
        .collect();
    let masked = MaskedMatrix::from_sorted_rows(m, rows);
    Ok(SyntheticInstance {
        spec: spec.clone(),
        masked,
        features,
        true_support,
        row_factors,
        col_factors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapeReport {
    pub percent: f64,
    pub scored: usize,
    /// Entries dropped because the truth is numerically zero.
    pub skipped: usize,
}

/// Mean absolute percentage error over `(predicted, truth)` pairs.
pub fn mape(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<MapeReport> {
    let (mut total, mut scored, mut skipped) = (0.0, 0usize, 0usize);
    for (x, a) in pairs {
        if a.abs() <= MAPE_GUARD {
            skipped += 1;
            continue;
        }
        total += ((x - a) / a).abs();
        scored += 1;
    }
    if scored == 0 {
        return Err(Error::InvalidConfig("no scorable entries for MAPE".into()));
    }
    Ok(MapeReport {
        percent: 100.0 * total / scored as f64,
        scored,
        skipped,
    })
}

/// MAPE of a completion against the noiseless signal on the hidden entries.
pub fn score_hidden(instance: &SyntheticInstance, result: &CompletionResult) -> Result<MapeReport> {
    let per_row: Vec<(f64, usize, usize)> = (0..instance.spec.n)
        .into_par_iter()
        .map(|i| {
            let predicted = result.fill.complete_row(&instance.features, i);
            let (mut total, mut scored, mut skipped) = (0.0, 0, 0);
            for j in instance.hidden_in_row(i) {
                let a = instance.signal(i, j);
                if a.abs() <= MAPE_GUARD {
                    skipped += 1;
                } else {
                    total += ((predicted[j] - a) / a).abs();
                    scored += 1;
                }
            }
            (total, scored, skipped)
        })
        .collect();
    let (total, scored, skipped) = per_row
        .iter()
        .fold((0.0, 0, 0), |acc, r| (acc.0 + r.0, acc.1 + r.1, acc.2 + r.2));
    if scored == 0 {
        return Err(Error::InvalidConfig("no hidden entries to score".into()));
    }
    Ok(MapeReport {
        percent: 100.0 * total / scored as f64,
        scored,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSelection {
    pub gamma: f64,
    /// Validation MAPE per grid point, `None` where the driver failed.
    pub scores: Vec<Option<f64>>,
}

/// Fits on `train` for every grid value and keeps the one with the lowest
/// validation MAPE, preferring the smaller value on ties.
pub fn select_gamma(
    train: &MaskedMatrix,
    val: &MaskedMatrix,
    features: &FeatureMatrix,
    config: &ProblemConfig,
    grid: &[f64],
    algorithm: Algorithm,
) -> Result<GammaSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("gamma grid is empty".into()));
    }
    let scores: Vec<Option<f64>> = grid
        .iter()
        .map(|&gamma| {
            let config = ProblemConfig {
                gamma,
                ..config.clone()
            };
            let result = algorithm.run(train, features, &config).ok()?;
            let pairs = val
                .entries()
                .map(|(i, j, v)| (result.predict(features, i, j), v));
            mape(pairs).ok().map(|r| r.percent)
        })
        .collect();
    let best = grid
        .iter()
        .zip(&scores)
        .filter_map(|(&g, s)| s.map(|s| (g, s)))
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)))
        .ok_or(Error::AllGridPointsFailed)?;
    Ok(GammaSelection {
        gamma: best.0,
        scores,
    })
}

/// One synthetic configuration of a suite; the seed is supplied per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub k: usize,
    pub mu: f64,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
}

fn default_noise_sd() -> f64 {
    0.1
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_grid() -> Vec<f64> {
    DEFAULT_GAMMA_GRID.to_vec()
}

fn default_validation_fraction() -> f64 {
    0.2
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Stochastic, Algorithm::Exact]
}

/// Benchmark suite, read from a TOML file with one `[[spec]]` section per
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Fixed ridge weight; when absent it is selected per run on a
    /// validation split of the observed entries.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_grid")]
    pub gamma_grid: Vec<f64>,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub g0: Option<usize>,
    #[serde(default)]
    pub c_const: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Iteration budget per driver call, including the gamma search.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub workers: usize,
    pub spec: Vec<SuiteSpec>,
}

impl Suite {
    pub fn new(spec: Vec<SuiteSpec>) -> Self {
        Self {
            seeds: default_seeds(),
            gamma: None,
            gamma_grid: default_grid(),
            validation_fraction: default_validation_fraction(),
            algorithms: default_algorithms(),
            g0: None,
            c_const: None,
            tolerance: None,
            max_iterations: None,
            workers: 0,
            spec,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn config(&self, k: usize, gamma: f64, seed: u64) -> ProblemConfig {
        let mut config = ProblemConfig::new(k, gamma);
        config.seed = seed;
        config.workers = self.workers;
        if let Some(g0) = self.g0 {
            config.g0 = g0;
        }
        if let Some(c) = self.c_const {
            config.c_const = c;
        }
        if let Some(t) = self.tolerance {
            config.tolerance = t;
        }
        if let Some(it) = self.max_iterations {
            config.max_iterations = it;
        }
        config
    }
}

/// Outcome of one driver on one seeded instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub gamma: f64,
    pub seconds: f64,
    pub mape: f64,
    pub recovered: bool,
    pub certified: bool,
}

/// Generates the instance for `seed`, picks gamma, and times the driver.
pub fn run_once(suite: &Suite, spec: &SuiteSpec, algorithm: Algorithm, seed: u64) -> Result<RunRecord> {
    let instance = generate(&SyntheticSpec {
        n: spec.n,
        m: spec.m,
        p: spec.p,
        k: spec.k,
        mu: spec.mu,
        noise_sd: spec.noise_sd,
        seed,
    })?;
    let gamma = match suite.gamma {
        Some(g) => g,
        None => {
            let (train, val) = instance.masked.split_validation(suite.validation_fraction, seed)?;
            select_gamma(
                &train,
                &val,
                &instance.features,
                &suite.config(spec.k, 1.0, seed),
                &suite.gamma_grid,
                algorithm,
            )?
            .gamma
        }
    };
    let config = suite.config(spec.k, gamma, seed);
    let start = Instant::now();
    let result = algorithm.run(&instance.masked, &instance.features, &config)?;
    let seconds = start.elapsed().as_secs_f64();
    let mape = score_hidden(&instance, &result)?.percent;
    Ok(RunRecord {
        seed,
        gamma,
        seconds,
        mape,
        recovered: result.support == instance.true_support,
        certified: result.exact_certified,
    })
}

/// One row of the benchmark report.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub spec: SuiteSpec,
    pub algorithm: Algorithm,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<(u64, String)>,
}

impl BenchRow {
    pub fn time_median(&self) -> Option<f64> {
        median(self.runs.iter().map(|r| r.seconds).collect())
    }

    pub fn mape_median(&self) -> Option<f64> {
        median(self.runs.iter().map(|r| r.mape).collect())
    }

    /// Fraction of all seeds, failed ones included, that recovered the
    /// planted support.
    pub fn recovery_rate(&self) -> Option<f64> {
        let total = self.runs.len() + self.failures.len();
        if self.runs.is_empty() {
            return None;
        }
        Some(self.runs.iter().filter(|r| r.recovered).count() as f64 / total as f64)
    }
}

pub fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let h = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[h]
    } else {
        0.5 * (values[h - 1] + values[h])
    })
}

pub const REPORT_HEADER: [&str; 9] = [
    "n",
    "m",
    "p",
    "k",
    "mu",
    "algorithm",
    "T_median",
    "MAPE_median",
    "recovery_rate",
];

/// Runs every spec under every algorithm and seed, one at a time, and
/// writes the CSV report. Failed runs are kept in the returned rows; a
/// statistic with no successful run is written as `N/A`.
pub fn run_benchmark(suite: &Suite, out: &Path) -> Result<Vec<BenchRow>> {
    if suite.spec.is_empty() {
        return Err(Error::InvalidConfig("suite has no specs".into()));
    }
    if suite.seeds.is_empty() || suite.algorithms.is_empty() {
        return Err(Error::InvalidConfig("suite needs at least one seed and algorithm".into()));
    }
    let mut rows = Vec::new();
    for spec in &suite.spec {
        for &algorithm in &suite.algorithms {
            let mut row = BenchRow {
                spec: spec.clone(),
                algorithm,
                runs: Vec::new(),
                failures: Vec::new(),
            };
            for &seed in &suite.seeds {
                match run_once(suite, spec, algorithm, seed) {
                    Ok(r) => row.runs.push(r),
                    Err(e) => row.failures.push((seed, e.to_string())),
                }
            }
            rows.push(row);
        }
    }
    write_report(&rows, out)?;
    Ok(rows)
}

pub fn write_report(rows: &[BenchRow], out: &Path) -> Result<()> {
    let cell = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), |x| x.to_string());
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(REPORT_HEADER)?;
    for row in rows {
        let s = &row.spec;
        w.write_record([
            s.n.to_string(),
            s.m.to_string(),
            s.p.to_string(),
            s.k.to_string(),
            s.mu.to_string(),
            row.algorithm.label().to_string(),
            cell(row.time_median()),
            cell(row.mape_median()),
            cell(row.recovery_rate()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mu: f64) -> SyntheticSpec {
        SyntheticSpec {
            n: 12,
            m: 9,
            p: 5,
            k: 2,
            mu,
            noise_sd: 0.0,
            seed: 4,
        }
    }

    #[test]
    fn unmasked_instance_is_full() {
        let inst = generate(&spec(0.0)).unwrap();
        assert_eq!(inst.masked.nnz(), 12 * 9);
        assert_eq!(inst.hidden_in_row(0).count(), 0);
    }

    #[test]
    fn planted_columns_sit_at_true_support() {
        let inst = generate(&spec(0.3)).unwrap();
        assert_eq!(inst.features.n_features(), 5);
        assert_eq!(inst.true_support.k(), 2);
        // Noiseless observations lie in the span of the planted columns.
        for (i, j, v) in inst.masked.entries() {
            assert!((v - inst.signal(i, j)).abs() < 1e-15);
        }
        let cols: Vec<Vec<f64>> = inst
            .true_support
            .indices()
            .iter()
            .map(|&c| inst.features.column(c))
            .collect();
        for j in 0..9 {
            let mut planted: Vec<f64> = (0..2).map(|t| inst.col_factors[t * 9 + j]).collect();
            let mut found: Vec<f64> = cols.iter().map(|c| c[j]).collect();
            planted.sort_by(f64::total_cmp);
            found.sort_by(f64::total_cmp);
            assert_eq!(planted, found);
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate(&spec(0.5)).unwrap();
        let b = generate(&spec(0.5)).unwrap();
        assert_eq!(a.masked, b.masked);
        assert_eq!(a.features, b.features);
        assert_eq!(a.true_support, b.true_support);
        let c = generate(&SyntheticSpec { seed: 5, ..spec(0.5) }).unwrap();
        assert_ne!(a.masked, c.masked);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate(&SyntheticSpec { mu: 1.0, ..spec(0.0) }).is_err());
        assert!(generate(&SyntheticSpec { k: 6, ..spec(0.0) }).is_err());
        assert!(generate(&SyntheticSpec { noise_sd: -1.0, ..spec(0.0) }).is_err());
    }

    #[test]
    fn mape_hand_cases() {
        let r = mape([(1.1, 1.0), (1.9, 2.0), (4.4, 4.0)]).unwrap();
        assert!((r.percent - 25.0 / 3.0).abs() < 1e-12);
        assert_eq!(mape([(2.0, 1.0), (6.0, 3.0)]).unwrap().percent, 100.0);
        assert_eq!(mape([(1.0, 1.0)]).unwrap().percent, 0.0);
    }

    #[test]
    fn mape_skips_zero_truth() {
        let r = mape([(1.0, 0.0), (2.0, 1.0)]).unwrap();
        assert_eq!((r.scored, r.skipped), (1, 1));
        assert!(mape([(1.0, 0.0)]).is_err());
        assert!(mape(std::iter::empty()).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }

    #[test]
    fn suite_parses_with_defaults() {
        let suite = Suite::from_toml(
            "gamma = 10.0\n\n[[spec]]\nn = 20\nm = 20\np = 4\nk = 2\nmu = 0.5\n",
        )
        .unwrap();
        assert_eq!(suite.seeds, (0..10).collect::<Vec<_>>());
        assert_eq!(suite.spec.len(), 1);
        assert_eq!(suite.spec[0].noise_sd, 0.1);
        assert!(Suite::from_toml("[[spec]]\nn = 1\n").is_err());
        assert!(Suite::from_toml("bogus = 1\n[[spec]]\nn=1\nm=1\np=1\nk=1\nmu=0\n").is_err());
    }

    #[test]
    fn single_point_grid_returns_it() {
        let inst = generate(&SyntheticSpec {
            n: 20,
            m: 15,
            p: 4,
            k: 2,
            mu: 0.3,
            noise_sd: 0.0,
            seed: 1,
        })
        .unwrap();
        let (train, val) = inst.masked.split_validation(0.2, 0).unwrap();
        let sel = select_gamma(
            &train,
            &val,
            &inst.features,
            &ProblemConfig::new(2, 1.0),
            &[3.0],
            Algorithm::Exact,
        )
        .unwrap();
        assert_eq!(sel.gamma, 3.0);
        assert_eq!(sel.scores.len(), 1);
    }

    #[test]
    fn one_spec_suite_gives_two_rows() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report.csv");
        let mut suite = Suite::new(vec![SuiteSpec {
            n: 30,
            m: 30,
            p: 5,
            k: 2,
            mu: 0.5,
            noise_sd: 0.0,
        }]);
        suite.seeds = vec![0, 1];
        suite.gamma = Some(100.0);
        let rows = run_benchmark(&suite, &out).unwrap();
        assert_eq!(rows.len(), 2);
        let text = std::fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], REPORT_HEADER.join(","));
        assert!(lines[1].contains("OptComplete") && lines[2].contains("CutPlanes"));
    }
}
