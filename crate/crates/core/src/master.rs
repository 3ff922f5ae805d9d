//! Exact solver for the cutting-plane master problem
//!
//! ```text
//! min η  s.t.  η >= value_i + gradient_iᵀ (s - anchor_i)  for every cut i,
//!              s ∈ {0,1}^p, Σ s = k
//! ```
//!
//! by depth-first branch and bound. A node fixes some indices in or out; its
//! bound is the largest, over cuts, of that cut's minimum over the node's
//! completions, which a greedy pick of the smallest gradient entries attains.
//! Since `min_s max_i ≥ max_i min_s`, the bound is valid without any LP.
//! Ties between supports of equal value go to the lexicographically smallest
//! index sequence.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::evaluator::Cut;
use crate::support::Support;

/// The pool of cuts over `S_k^p`.
#[derive(Debug, Clone)]
pub struct MasterProblem {
    p: usize,
    k: usize,
    cuts: Vec<Cut>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub support: Support,
    pub eta: f64,
    /// Branch-and-bound nodes visited.
    pub nodes: u64,
}

impl MasterProblem {
    pub fn new(p: usize, k: usize) -> Result<Self> {
        if k == 0 || k > p {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= k <= p, got k = {k}, p = {p}"
            )));
        }
        Ok(Self {
            p,
            k,
            cuts: Vec::new(),
        })
    }

    pub fn with_cuts(p: usize, k: usize, cuts: Vec<Cut>) -> Result<Self> {
        let mut problem = Self::new(p, k)?;
        for cut in cuts {
            problem.push(cut)?;
        }
        Ok(problem)
    }

    pub fn push(&mut self, cut: Cut) -> Result<()> {
        if cut.gradient.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "cut gradient has length {}, expected {}",
                cut.gradient.len(),
                self.p
            )));
        }
        if cut.anchor.indices().last().is_some_and(|&j| j >= self.p) {
            return Err(Error::InvalidSupport("cut anchor out of range".into()));
        }
        self.cuts.push(cut);
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    /// `max_i cut_i(s)`, the piecewise-linear model at `s`.
    pub fn evaluate(&self, s: &Support) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.evaluate(s))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

const FREE: u8 = 0;
const IN: u8 = 1;
const OUT: u8 = 2;

struct Search<'a> {
    problem: &'a MasterProblem,
    /// Per cut: `value - Σ_{anchor} gradient`.
    offsets: Vec<f64>,
    /// Per cut: feature indices sorted by (gradient, index).
    orders: Vec<Vec<usize>>,
    status: Vec<u8>,
    /// Indices fixed in, in the order they were fixed.
    in_list: Vec<usize>,
    n_in: usize,
    n_free: usize,
    best: Option<(f64, Support)>,
    nodes: u64,
    scratch: Vec<usize>,
    /// Cut attaining the last computed bound.
    binding: usize,
    /// Cut scanned first by the next bound computation.
    hint: usize,
}

impl<'a> Search<'a> {
    fn new(problem: &'a MasterProblem) -> Self {
        let p = problem.p;
        let offsets = problem
            .cuts
            .iter()
            .map(|c| {
                let at_anchor: f64 = c.anchor.indices().iter().map(|&j| c.gradient[j]).sum();
                c.value - at_anchor
            })
            .collect();
        let orders = problem
            .cuts
            .iter()
            .map(|c| {
                let mut o: Vec<usize> = (0..p).collect();
                o.sort_by(|&x, &y| {
                    c.gradient[x]
                        .partial_cmp(&c.gradient[y])
                        .unwrap_or(Ordering::Equal)
                        .then(x.cmp(&y))
                });
                o
            })
            .collect();
        Self {
            problem,
            offsets,
            orders,
            status: vec![FREE; p],
            in_list: Vec::with_capacity(problem.k),
            n_in: 0,
            n_free: p,
            best: None,
            nodes: 0,
            scratch: Vec::with_capacity(p),
            binding: 0,
            hint: 0,
        }
    }

    fn set(&mut self, j: usize, state: u8) {
        match self.status[j] {
            IN => {
                self.n_in -= 1;
                let at = self.in_list.iter().rposition(|&x| x == j).expect("fixed-in index is listed");
                self.in_list.remove(at);
            }
            FREE => self.n_free -= 1,
            _ => {}
        }
        match state {
            IN => {
                self.n_in += 1;
                self.in_list.push(j);
            }
            FREE => self.n_free += 1,
            _ => {}
        }
        self.status[j] = state;
    }

    fn feasible(&self) -> bool {
        self.n_in <= self.problem.k && self.n_in + self.n_free >= self.problem.k
    }

    fn is_leaf(&self) -> bool {
        self.n_in == self.problem.k || self.n_in + self.n_free == self.problem.k
    }

    /// The unique support of a leaf node.
    fn leaf_support(&self) -> Support {
        let take_free = self.n_in < self.problem.k;
        Support::from_sorted_unchecked(
            (0..self.problem.p)
                .filter(|&j| self.status[j] == IN || (take_free && self.status[j] == FREE))
                .collect(),
        )
    }

    /// Lexicographically smallest completion of the current node.
    fn lexmin_support(&mut self) -> Support {
        let mut need = self.problem.k - self.n_in;
        self.scratch.clear();
        for j in 0..self.problem.p {
            match self.status[j] {
                IN => self.scratch.push(j),
                FREE if need > 0 => {
                    self.scratch.push(j);
                    need -= 1;
                }
                _ => {}
            }
        }
        Support::from_sorted_unchecked(self.scratch.clone())
    }

    /// Max over cuts of the cut's minimum over the node; the exact model
    /// value at leaves. Assumes the node is feasible. Stops early with a
    /// value above `cutoff` once one is found, which suffices for pruning.
    fn bound(&mut self, cutoff: f64) -> f64 {
        let leaf = self.is_leaf();
        let leaf_support = if leaf { Some(self.leaf_support()) } else { None };
        let need = self.problem.k - self.n_in;
        let n_cuts = self.problem.cuts.len();
        let mut bound = f64::NEG_INFINITY;
        for t in 0..n_cuts {
            // the cut that decided the previous bound goes first
            let ci = (self.hint + t) % n_cuts;
            let cut = &self.problem.cuts[ci];
            let value = match &leaf_support {
                Some(s) => cut.evaluate(s),
                None => {
                    let mut chosen: f64 = self.in_list.iter().map(|&j| cut.gradient[j]).sum();
                    let mut left = need;
                    for &j in &self.orders[ci] {
                        if left == 0 {
                            break;
                        }
                        if self.status[j] == FREE {
                            chosen += cut.gradient[j];
                            left -= 1;
                        }
                    }
                    self.offsets[ci] + chosen
                }
            };
            if value > bound {
                bound = value;
                self.binding = ci;
                if bound > cutoff {
                    break;
                }
            }
        }
        self.hint = self.binding;
        bound
    }

    fn cutoff(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }

    fn offer(&mut self, value: f64, support: Support) {
        let better = match &self.best {
            None => true,
            Some((v, s)) => value < *v || (value == *v && support < *s),
        };
        if better {
            self.best = Some((value, support));
        }
    }

    fn prunable(&mut self, bound: f64) -> bool {
        let Some((v, _)) = &self.best else {
            return false;
        };
        let v = *v;
        if bound > v {
            return true;
        }
        if bound == v {
            let lexmin = self.lexmin_support();
            return self.best.as_ref().is_some_and(|(_, s)| lexmin >= *s);
        }
        false
    }

    /// Branches on the free index the binding cut would add first.
    fn explore(&mut self, bound: f64, binding: usize) {
        self.nodes += 1;
        if self.is_leaf() {
            let s = self.leaf_support();
            self.offer(bound, s);
            return;
        }
        if self.prunable(bound) {
            return;
        }
        let j = *self.orders[binding]
            .iter()
            .find(|&&j| self.status[j] == FREE)
            .expect("interior node has a free index");

        let mut children: Vec<(f64, u8, usize)> = Vec::with_capacity(2);
        for state in [IN, OUT] {
            self.set(j, state);
            if self.feasible() {
                let cutoff = self.cutoff();
                let b = self.bound(cutoff);
                children.push((b, state, self.binding));
            }
            self.set(j, FREE);
        }
        // lower bound first; `IN` wins ties by insertion order
        children.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        for (child_bound, state, child_binding) in children {
            self.set(j, state);
            if !self.prunable(child_bound) {
                self.explore(child_bound, child_binding);
            }
            self.set(j, FREE);
        }
    }
}

/// Greedy minimizer of a single cut: the `k` smallest gradient entries.
fn greedy_support(cut: &Cut, k: usize) -> Support {
    let mut o: Vec<usize> = (0..cut.gradient.len()).collect();
    o.sort_by(|&x, &y| {
        cut.gradient[x]
            .partial_cmp(&cut.gradient[y])
            .unwrap_or(Ordering::Equal)
            .then(x.cmp(&y))
    });
    o.truncate(k);
    o.sort_unstable();
    Support::from_sorted_unchecked(o)
}

/// Solves the master problem to global optimality.
pub fn solve_master(problem: &MasterProblem) -> Result<MasterSolution> {
    solve_master_from(problem, None)
}

/// As [`solve_master`], seeding the incumbent with `incumbent` when given.
/// The returned optimum does not depend on the incumbent.
pub fn solve_master_from(
    problem: &MasterProblem,
    incumbent: Option<&Support>,
) -> Result<MasterSolution> {
    if problem.cuts.is_empty() {
        return Err(Error::InvalidConfig("master problem has no cuts".into()));
    }
    let mut search = Search::new(problem);
    if let Some(s) = incumbent {
        if s.k() == problem.k && s.indices().iter().all(|&j| j < problem.p) {
            search.offer(problem.evaluate(s), s.clone());
        }
    }
    for cut in &problem.cuts {
        let s = greedy_support(cut, problem.k);
        search.offer(problem.evaluate(&s), s);
    }
    let root = search.bound(f64::INFINITY);
    let binding = search.binding;
    search.explore(root, binding);
    let nodes = search.nodes;
    let (eta, support) = search.best.expect("root search always yields a leaf");
    Ok(MasterSolution {
        support,
        eta,
        nodes,
    })
}

/// Lower bound on the master objective over supports containing `fixed_in`
/// and avoiding `fixed_out`. `None` when no such support of size `k` exists.
pub fn node_lower_bound(
    problem: &MasterProblem,
    fixed_in: &[usize],
    fixed_out: &[usize],
) -> Result<Option<f64>> {
    if problem.cuts.is_empty() {
        return Err(Error::InvalidConfig("master problem has no cuts".into()));
    }
    let mut search = Search::new(problem);
    for &j in fixed_in {
        if j >= problem.p || search.status[j] != FREE {
            return Err(Error::InvalidSupport(format!("bad fixed-in index {j}")));
        }
        search.set(j, IN);
    }
    for &j in fixed_out {
        if j >= problem.p || search.status[j] != FREE {
            return Err(Error::InvalidSupport(format!("bad fixed-out index {j}")));
        }
        search.set(j, OUT);
    }
    if !search.feasible() {
        return Ok(None);
    }
    Ok(Some(search.bound(f64::INFINITY)))
}
