//! The two cutting-plane drivers.
//!
//! [`cutplanes`] adds one exact cut per iteration and stops once the master
//! value reaches the objective at the master's support, which certifies
//! optimality since the exact cuts under-estimate the convex objective.
//!
//! [`optcomplete`] builds each cut from a fresh row/column sample instead.
//! Its stopping test still uses the exact objective at the current support.
//! Stochastic cuts need not under-estimate the objective, so the driver can
//! stall on a support it has already cut at while the master value sits
//! below the objective; it then adds the exact cut at that support,
//! re-solves, and continues with twice the row sample, a bounded number of
//! times.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::config::{ProblemConfig, WarmStartKind};
use crate::error::{Error, Result};
use crate::evaluator::{cost, fill_rows, make_cut, Cut};
use crate::master::{solve_master_from, MasterProblem};
use crate::matrix::{FeatureMatrix, MaskedMatrix};
use crate::result::{CompletionResult, Diagnostics, TracePoint};
use crate::sampler::{
    draw_plan_keyed, keyed_rng, sample_sizes, stochastic_cost, stochastic_cost_gradient, Domain,
};
use crate::support::Support;

/// Row and column sample caps of the greedy warm start.
const WARM_START_ROWS: usize = 50;
const WARM_START_COLS: usize = 200;

fn validate(a: &MaskedMatrix, b: &FeatureMatrix, config: &ProblemConfig) -> Result<()> {
    config.validate(b.n_features())?;
    if a.nnz() == 0 {
        return Err(Error::NoObservedEntries);
    }
    if a.n_cols() != b.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns but feature matrix has {} rows",
            a.n_cols(),
            b.n_rows()
        )));
    }
    Ok(())
}

/// Runs `f` on a dedicated pool when `workers > 0`.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Initial support.
///
/// `Greedy` starts empty and repeatedly adds the feature that most lowers
/// the stochastic objective on one fixed plan of at most 50 rows and 200
/// columns. `Random` draws a uniform `k`-subset.
pub fn warm_start(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    config: &ProblemConfig,
    kind: WarmStartKind,
) -> Result<Support> {
    validate(a, b, config)?;
    let (p, k) = (b.n_features(), config.k);
    if k == p {
        return Ok(Support::first(k));
    }
    match kind {
        WarmStartKind::Random => {
            let mut rng = keyed_rng(config.seed, Domain::WarmStart, 0, 0);
            let mut idx = index::sample(&mut rng, p, k).into_vec();
            idx.sort_unstable();
            Ok(Support::from_sorted_unchecked(idx))
        }
        WarmStartKind::Greedy => {
            let (n, m) = (a.n_rows(), a.n_cols());
            let plan = draw_plan_keyed(
                n,
                m,
                WARM_START_COLS.min(m),
                WARM_START_ROWS.min(n),
                config.seed,
                Domain::WarmStart,
                1,
            )?;
            let mut chosen: Vec<usize> = Vec::with_capacity(k);
            for _ in 0..k {
                let mut best: Option<(f64, usize)> = None;
                for j in (0..p).filter(|j| !chosen.contains(j)) {
                    let mut trial = chosen.clone();
                    trial.push(j);
                    trial.sort_unstable();
                    let s = Support::from_sorted_unchecked(trial);
                    let value = stochastic_cost(a, b, &s, config.gamma, &plan)?;
                    if best.is_none_or(|(v, _)| value < v) {
                        best = Some((value, j));
                    }
                }
                chosen.push(best.expect("a free feature remains while |chosen| < k").1);
            }
            chosen.sort_unstable();
            Ok(Support::from_sorted_unchecked(chosen))
        }
    }
}

/// Exact objective values and cuts seen so far.
struct ExactCache<'a> {
    a: &'a MaskedMatrix,
    b: &'a FeatureMatrix,
    gamma: f64,
    costs: HashMap<Support, f64>,
    cuts: HashMap<Support, Cut>,
    evaluations: usize,
    seconds: f64,
}

impl<'a> ExactCache<'a> {
    fn new(a: &'a MaskedMatrix, b: &'a FeatureMatrix, gamma: f64) -> Self {
        Self {
            a,
            b,
            gamma,
            costs: HashMap::new(),
            cuts: HashMap::new(),
            evaluations: 0,
            seconds: 0.0,
        }
    }

    fn cost(&mut self, s: &Support) -> Result<f64> {
        if let Some(&c) = self.costs.get(s) {
            return Ok(c);
        }
        let t = Instant::now();
        let c = cost(self.a, self.b, s, self.gamma)?;
        self.seconds += t.elapsed().as_secs_f64();
        self.evaluations += 1;
        self.costs.insert(s.clone(), c);
        Ok(c)
    }

    fn cut(&mut self, s: &Support) -> Result<Cut> {
        if let Some(c) = self.cuts.get(s) {
            return Ok(c.clone());
        }
        let t = Instant::now();
        let cut = make_cut(self.a, self.b, s, self.gamma)?;
        self.seconds += t.elapsed().as_secs_f64();
        self.evaluations += 1;
        self.costs.insert(s.clone(), cut.value);
        self.cuts.insert(s.clone(), cut.clone());
        Ok(cut)
    }

    /// Support with the smallest known objective, ties lexicographic.
    fn best(&self) -> Support {
        self.costs
            .iter()
            .min_by(|x, y| x.1.total_cmp(y.1).then_with(|| x.0.cmp(y.0)))
            .map(|(s, _)| s.clone())
            .expect("at least one support was evaluated")
    }
}

struct MasterStats {
    nodes: u64,
    seconds: f64,
}

fn solve(pool: &MasterProblem, incumbent: &Support, stats: &mut MasterStats) -> Result<(Support, f64)> {
    let t = Instant::now();
    let sol = solve_master_from(pool, Some(incumbent))?;
    stats.seconds += t.elapsed().as_secs_f64();
    stats.nodes += sol.nodes;
    Ok((sol.support, sol.eta))
}

/// Exact cutting planes.
pub fn cutplanes(a: &MaskedMatrix, b: &FeatureMatrix, config: &ProblemConfig) -> Result<CompletionResult> {
    validate(a, b, config)?;
    with_workers(config.workers, || cutplanes_inner(a, b, config))?
}

fn cutplanes_inner(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    config: &ProblemConfig,
) -> Result<CompletionResult> {
    let start = Instant::now();
    let mut s = warm_start(a, b, config, config.warm_start.unwrap_or(WarmStartKind::Greedy))?;
    let mut cache = ExactCache::new(a, b, config.gamma);
    let mut pool = MasterProblem::new(b.n_features(), config.k)?;
    let mut stats = MasterStats {
        nodes: 0,
        seconds: 0.0,
    };
    let mut diagnostics = Diagnostics {
        empty_rows: a.empty_rows(),
        ..Diagnostics::default()
    };
    let mut eta = 0.0;
    let mut cut = cache.cut(&s)?;
    let mut trace = vec![TracePoint {
        eta,
        cost: cut.value,
    }];
    let mut certified = false;
    loop {
        if config.is_certified(eta, cut.value) {
            certified = true;
            break;
        }
        if diagnostics.iterations >= config.max_iterations {
            diagnostics.warnings.push(format!(
                "stopped after {} iterations without certifying optimality",
                config.max_iterations
            ));
            break;
        }
        pool.push(cut)?;
        (s, eta) = solve(&pool, &s, &mut stats)?;
        diagnostics.iterations += 1;
        cut = cache.cut(&s)?;
        trace.push(TracePoint {
            eta,
            cost: cut.value,
        });
    }
    if !certified {
        s = cache.best();
    }
    diagnostics.cuts = pool.cuts().len();
    finish(a, b, config, s, trace, certified, diagnostics, cache, stats, start)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    config: &ProblemConfig,
    support: Support,
    objective_trace: Vec<TracePoint>,
    exact_certified: bool,
    mut diagnostics: Diagnostics,
    cache: ExactCache<'_>,
    stats: MasterStats,
    start: Instant,
) -> Result<CompletionResult> {
    if diagnostics.empty_rows > 0 {
        diagnostics
            .warnings
            .push(format!("{} rows have no observed entries", diagnostics.empty_rows));
    }
    diagnostics.exact_evaluations = cache.evaluations;
    diagnostics.exact_eval_seconds = cache.seconds;
    diagnostics.master_nodes = stats.nodes;
    diagnostics.master_seconds = stats.seconds;
    let fill = fill_rows(a, b, &support, config.gamma)?;
    Ok(CompletionResult {
        support,
        fill,
        objective_trace,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        exact_certified,
        diagnostics,
    })
}

/// Stochastic cutting planes.
pub fn optcomplete(a: &MaskedMatrix, b: &FeatureMatrix, config: &ProblemConfig) -> Result<CompletionResult> {
    validate(a, b, config)?;
    with_workers(config.workers, || optcomplete_inner(a, b, config))?
}

fn optcomplete_inner(
    a: &MaskedMatrix,
    b: &FeatureMatrix,
    config: &ProblemConfig,
) -> Result<CompletionResult> {
    let start = Instant::now();
    let (n, m) = (a.n_rows(), a.n_cols());
    let (f, mut g) = sample_sizes(n, m, a.density(), config.k, config.g0, config.c_const)?;
    let mut s = warm_start(a, b, config, config.warm_start.unwrap_or(WarmStartKind::Random))?;
    let mut cache = ExactCache::new(a, b, config.gamma);
    let mut pool = MasterProblem::new(b.n_features(), config.k)?;
    let mut stats = MasterStats {
        nodes: 0,
        seconds: 0.0,
    };
    let mut diagnostics = Diagnostics {
        empty_rows: a.empty_rows(),
        ..Diagnostics::default()
    };
    let mut anchors: HashSet<Support> = HashSet::new();
    let mut eta = 0.0;
    let mut trace = vec![TracePoint {
        eta,
        cost: cache.cost(&s)?,
    }];
    let mut plans_drawn: u64 = 0;
    let mut stalled = false;
    let mut certified = false;
    loop {
        let current = cache.cost(&s)?;
        if config.is_certified(eta, current) {
            certified = true;
            break;
        }
        if diagnostics.iterations >= config.max_iterations {
            diagnostics.warnings.push(format!(
                "stopped after {} iterations without certifying optimality",
                config.max_iterations
            ));
            break;
        }
        if stalled {
            // The master keeps returning a support it has already cut at,
            // yet sits below the exact objective there.
            if diagnostics.certification_retries >= config.max_certification_retries {
                diagnostics.warnings.push(format!(
                    "certification failed after {} row-sample doublings",
                    diagnostics.certification_retries
                ));
                break;
            }
            pool.push(cache.cut(&s)?)?;
            diagnostics.certification_retries += 1;
            g = (2 * g).min(n);
        } else {
            let plan = draw_plan_keyed(n, m, f, g, config.seed, Domain::Plan, plans_drawn)?;
            plans_drawn += 1;
            pool.push(stochastic_cost_gradient(a, b, &s, config.gamma, &plan)?)?;
            diagnostics.stochastic_cuts += 1;
            anchors.insert(s.clone());
        }
        (s, eta) = solve(&pool, &s, &mut stats)?;
        diagnostics.iterations += 1;
        stalled = anchors.contains(&s);
        trace.push(TracePoint {
            eta,
            cost: cache.cost(&s)?,
        });
    }
    if !certified {
        s = cache.best();
    }
    diagnostics.cuts = pool.cuts().len();
    diagnostics.f = Some(f);
    diagnostics.g = Some(g);
    finish(a, b, config, s, trace, certified, diagnostics, cache, stats, start)
}

/// Driver selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// [`cutplanes`]
    Exact,
    /// [`optcomplete`]
    Stochastic,
}

impl Algorithm {
    pub fn run(self, a: &MaskedMatrix, b: &FeatureMatrix, config: &ProblemConfig) -> Result<CompletionResult> {
        match self {
            Algorithm::Exact => cutplanes(a, b, config),
            Algorithm::Stochastic => optcomplete(a, b, config),
        }
    }

    /// Report label.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Exact => "CutPlanes",
            Algorithm::Stochastic => "OptComplete",
        }
    }
}
