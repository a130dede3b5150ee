//! Binary quadratic programs with one-hot groups and convex aggregate costs.
//!
//! The objective is
//!
//! ```text
//! sum_v linear[v] * z_v  +  sum_t scale_t * (sum_{v in t} z_v + offset_t)^2
//! ```
//!
//! subject to exactly one `z_v = 1` per group. [`solve`] is a best-first
//! branch-and-bound seeded with a greedy + local-search incumbent;
//! [`brute_force`] enumerates every assignment and serves as the test oracle.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::clock::Clock;

/// `scale * (sum of member variables + offset)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTerm {
    pub vars: Vec<usize>,
    pub offset: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinaryQuadraticProgram {
    /// One-hot groups of variable ids.
    pub groups: Vec<Vec<usize>>,
    /// Per-variable linear cost.
    pub linear: Vec<f64>,
    pub quad: Vec<QuadTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The search tree was exhausted.
    Optimal,
    /// Best assignment found before the budget ran out.
    Incumbent,
    /// No search happened; each group took its cheapest linear cost.
    Fallback,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Incumbent => "incumbent",
            SolveStatus::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Selected variable id per group, in group order.
    pub chosen: Vec<usize>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Branch-and-bound nodes expanded.
    pub nodes: u64,
    /// Objective of every incumbent accepted, in order.
    pub incumbents: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MiqpError {
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("variable {0} belongs to more than one group")]
    SharedVariable(usize),
    #[error("variable {0} belongs to no group")]
    Ungrouped(usize),
    #[error("quadratic term {term} references unknown variable {var}")]
    UnknownVariable { term: usize, var: usize },
    #[error("quadratic term {term} lists variable {var} twice")]
    DuplicateInTerm { term: usize, var: usize },
    #[error("quadratic term {0} has a negative or non-finite scale")]
    BadScale(usize),
    #[error("enumeration of {0} assignments exceeds the brute-force guard")]
    TooLarge(f64),
}

/// Budget for [`solve`]. The node and work limits keep results independent of
/// machine speed; the time budget only bounds latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLimits {
    /// Seconds of clock time.
    pub time_budget: f64,
    /// Branch-and-bound expansions.
    pub node_limit: u64,
    /// Variable marginal evaluations spent on bounds.
    pub work_limit: u64,
}

impl SolveLimits {
    pub const UNBOUNDED: SolveLimits = SolveLimits {
        time_budget: f64::INFINITY,
        node_limit: u64::MAX,
        work_limit: u64::MAX,
    };
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            time_budget: 0.5,
            node_limit: 20_000,
            work_limit: 4_000_000,
        }
    }
}

pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

fn quad(scale: f64, offset: f64, count: u32) -> f64 {
    let x = count as f64 + offset;
    scale * x * x
}

/// Cost of moving a term's count from `count` to `count + 1`.
fn marginal(scale: f64, offset: f64, count: u32) -> f64 {
    // (c+1+o)^2 - (c+o)^2 = 2(c+o) + 1
    scale * (2.0 * (count as f64 + offset) + 1.0)
}

impl BinaryQuadraticProgram {
    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn validate(&self) -> Result<(), MiqpError> {
        let mut owner = vec![usize::MAX; self.linear.len()];
        for (g, vars) in self.groups.iter().enumerate() {
            if vars.is_empty() {
                return Err(MiqpError::EmptyGroup(g));
            }
            for &v in vars {
                if v >= owner.len() {
                    return Err(MiqpError::Ungrouped(v));
                }
                if owner[v] != usize::MAX {
                    return Err(MiqpError::SharedVariable(v));
                }
                owner[v] = g;
            }
        }
        if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(MiqpError::Ungrouped(v));
        }
        for (t, term) in self.quad.iter().enumerate() {
            if !(term.scale >= 0.0) || !term.scale.is_finite() {
                return Err(MiqpError::BadScale(t));
            }
            let mut seen = vec![false; self.linear.len()];
            for &v in &term.vars {
                if v >= self.linear.len() {
                    return Err(MiqpError::UnknownVariable { term: t, var: v });
                }
                if seen[v] {
                    return Err(MiqpError::DuplicateInTerm { term: t, var: v });
                }
                seen[v] = true;
            }
        }
        Ok(())
    }

    /// Terms touched by each variable.
    fn var_terms(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.linear.len()];
        for (t, term) in self.quad.iter().enumerate() {
            for &v in &term.vars {
                out[v].push(t);
            }
        }
        out
    }

    /// Objective of a complete assignment (`chosen[g]` is a variable of group
    /// `g`).
    pub fn evaluate(&self, chosen: &[usize]) -> f64 {
        let mut counts = vec![0u32; self.quad.len()];
        let mut total = 0.0;
        for &v in chosen {
            total += self.linear[v];
        }
        for (t, term) in self.quad.iter().enumerate() {
            for &v in &term.vars {
                if chosen.contains(&v) {
                    counts[t] += 1;
                }
            }
        }
        for (t, term) in self.quad.iter().enumerate() {
            total += quad(term.scale, term.offset, counts[t]);
        }
        total
    }

    /// Per-group argmin of the linear cost, lowest id on ties.
    pub fn min_linear(&self) -> Vec<usize> {
        self.groups
            .iter()
            .map(|vars| {
                let mut best = vars[0];
                for &v in vars {
                    if self.linear[v] < self.linear[best]
                        || (self.linear[v] == self.linear[best] && v < best)
                    {
                        best = v;
                    }
                }
                best
            })
            .collect()
    }
}

/// Solver working state shared by the heuristics and the tree search.
struct Model<'a> {
    p: &'a BinaryQuadraticProgram,
    var_terms: Vec<Vec<usize>>,
}

impl<'a> Model<'a> {
    fn new(p: &'a BinaryQuadraticProgram) -> Self {
        Model {
            p,
            var_terms: p.var_terms(),
        }
    }

    fn var_marginal(&self, v: usize, counts: &[u32]) -> f64 {
        let mut m = self.p.linear[v];
        for &t in &self.var_terms[v] {
            let term = &self.p.quad[t];
            m += marginal(term.scale, term.offset, counts[t]);
        }
        m
    }

    fn add(&self, v: usize, counts: &mut [u32]) {
        for &t in &self.var_terms[v] {
            counts[t] += 1;
        }
    }

    fn remove(&self, v: usize, counts: &mut [u32]) {
        for &t in &self.var_terms[v] {
            counts[t] -= 1;
        }
    }

    /// Cheapest variable of `group` given `counts`, lowest id on ties.
    fn best_in_group(&self, group: usize, counts: &[u32]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for &v in &self.p.groups[group] {
            let m = self.var_marginal(v, counts);
            if m < best.1 || (m == best.1 && v < best.0) {
                best = (v, m);
            }
        }
        best
    }

    /// Groups by decreasing spread of their root marginals.
    fn branch_order(&self) -> Vec<usize> {
        let zero = vec![0u32; self.p.quad.len()];
        let mut spread: Vec<(usize, f64)> = self
            .p
            .groups
            .iter()
            .enumerate()
            .map(|(g, vars)| {
                let (lo, hi) = vars.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &v| {
                    let m = self.var_marginal(v, &zero);
                    (acc.0.min(m), acc.1.max(m))
                });
                (g, hi - lo)
            })
            .collect();
        spread.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        spread.into_iter().map(|(g, _)| g).collect()
    }

    /// Admissible bound: fixed cost at the current counts plus, for every
    /// open group, its cheapest first-unit marginal. Marginals of a convex
    /// term only grow with the count, so each open group pays at least that.
    fn bound(&self, counts: &[u32], fixed_linear: f64, open: &[usize]) -> f64 {
        let mut total = fixed_linear;
        for (t, term) in self.p.quad.iter().enumerate() {
            total += quad(term.scale, term.offset, counts[t]);
        }
        for &g in open {
            total += self.best_in_group(g, counts).1;
        }
        total
    }
}

/// Lower bound used by the tree search for a partial assignment
/// (`fixed[g] = Some(var)` for fixed groups).
pub fn lower_bound(p: &BinaryQuadraticProgram, fixed: &[Option<usize>]) -> f64 {
    let model = Model::new(p);
    let mut counts = vec![0u32; p.quad.len()];
    let mut linear = 0.0;
    let mut open = Vec::new();
    for (g, f) in fixed.iter().enumerate() {
        match f {
            Some(v) => {
                model.add(*v, &mut counts);
                linear += p.linear[*v];
            }
            None => open.push(g),
        }
    }
    model.bound(&counts, linear, &open)
}

fn lex_less(a: &[usize], b: &[usize]) -> bool {
    a.cmp(b) == Ordering::Less
}

struct Incumbent {
    chosen: Vec<usize>,
    objective: f64,
    trace: Vec<f64>,
}

impl Incumbent {
    fn offer(&mut self, chosen: &[usize], objective: f64) -> bool {
        let better = objective < self.objective
            || (objective == self.objective && lex_less(chosen, &self.chosen));
        if better {
            self.chosen.clear();
            self.chosen.extend_from_slice(chosen);
            self.objective = objective;
            self.trace.push(objective);
        }
        better
    }
}

#[derive(Debug)]
struct TreeNode {
    bound: f64,
    depth: usize,
    seq: u64,
    /// Chosen variables for `order[..depth]`.
    path: Vec<usize>,
}

impl PartialEq for TreeNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for TreeNode {}

impl Ord for TreeNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap: smallest bound first, deeper first, then oldest
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for TreeNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const LOCAL_SEARCH_PASSES: usize = 50;
const MAX_OPEN_NODES: usize = 200_000;
const CLOCK_STRIDE: u64 = 32;

fn prune_tolerance(objective: f64) -> f64 {
    1e-9 * objective.abs().max(1.0)
}

/// Solves `p` within `limits`. Exhausting the tree proves optimality;
/// otherwise the best incumbent is returned.
pub fn solve(
    p: &BinaryQuadraticProgram,
    limits: &SolveLimits,
    clock: &dyn Clock,
) -> Result<Assignment, MiqpError> {
    p.validate()?;
    let t0 = clock.now();
    let n_groups = p.groups.len();
    if n_groups == 0 {
        return Ok(Assignment {
            chosen: Vec::new(),
            objective: p.evaluate(&[]),
            status: SolveStatus::Optimal,
            nodes: 0,
            incumbents: Vec::new(),
        });
    }
    if !(limits.time_budget > 0.0) || limits.node_limit == 0 {
        let chosen = p.min_linear();
        return Ok(Assignment {
            objective: p.evaluate(&chosen),
            chosen,
            status: SolveStatus::Fallback,
            nodes: 0,
            incumbents: Vec::new(),
        });
    }
    if p.quad.iter().all(|t| t.scale == 0.0) {
        // separable: the per-group argmin with lowest ids is the
        // lexicographically smallest optimum
        let chosen = p.min_linear();
        let objective = p.evaluate(&chosen);
        return Ok(Assignment {
            chosen,
            objective,
            status: SolveStatus::Optimal,
            nodes: 0,
            incumbents: vec![objective],
        });
    }
    let out_of_time = |now: f64| now - t0 > limits.time_budget;

    let model = Model::new(p);
    let order = model.branch_order();
    let mut counts = vec![0u32; p.quad.len()];

    // greedy construction in branch order
    let mut chosen = vec![usize::MAX; n_groups];
    for &g in &order {
        let (v, _) = model.best_in_group(g, &counts);
        chosen[g] = v;
        model.add(v, &mut counts);
    }

    // best-response local search
    for _ in 0..LOCAL_SEARCH_PASSES {
        let mut moved = false;
        for &g in &order {
            let cur = chosen[g];
            model.remove(cur, &mut counts);
            let cur_m = model.var_marginal(cur, &counts);
            let (v, m) = model.best_in_group(g, &counts);
            let pick = if m < cur_m { v } else { cur };
            model.add(pick, &mut counts);
            if pick != cur {
                chosen[g] = pick;
                moved = true;
            }
        }
        if !moved || out_of_time(clock.now()) {
            break;
        }
    }

    let mut inc = Incumbent {
        objective: p.evaluate(&chosen),
        chosen,
        trace: Vec::new(),
    };
    inc.trace.push(inc.objective);

    let greedy_only = SolveStatus::Incumbent;
    if out_of_time(clock.now()) {
        return Ok(finish(inc, greedy_only, 0));
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(TreeNode {
        bound: model.bound(&vec![0u32; p.quad.len()], 0.0, &order),
        depth: 0,
        seq,
        path: Vec::new(),
    });
    let mut expanded = 0u64;
    let per_bound = (p.num_vars() as u64).max(1);
    let mut work = per_bound;
    let mut leaf = vec![0usize; n_groups];
    let status = loop {
        let Some(node) = heap.pop() else {
            break SolveStatus::Optimal;
        };
        if node.bound > inc.objective + prune_tolerance(inc.objective) {
            break SolveStatus::Optimal;
        }
        if expanded >= limits.node_limit || work > limits.work_limit {
            break SolveStatus::Incumbent;
        }
        expanded += 1;
        if expanded % CLOCK_STRIDE == 0 && out_of_time(clock.now()) {
            break SolveStatus::Incumbent;
        }

        counts.iter_mut().for_each(|c| *c = 0);
        let mut fixed_linear = 0.0;
        for &v in &node.path {
            model.add(v, &mut counts);
            fixed_linear += p.linear[v];
        }
        let g = order[node.depth];
        let open = &order[node.depth + 1..];
        for &v in &p.groups[g] {
            model.add(v, &mut counts);
            let lin = fixed_linear + p.linear[v];
            let mut path = node.path.clone();
            path.push(v);
            if open.is_empty() {
                for (k, &gg) in order.iter().enumerate() {
                    leaf[gg] = path[k];
                }
                let obj = p.evaluate(&leaf);
                inc.offer(&leaf, obj);
            } else {
                let bound = model.bound(&counts, lin, open);
                work += per_bound;
                if bound <= inc.objective + prune_tolerance(inc.objective) {
                    seq += 1;
                    heap.push(TreeNode {
                        bound,
                        depth: node.depth + 1,
                        seq,
                        path,
                    });
                }
            }
            model.remove(v, &mut counts);
        }
        if heap.len() > MAX_OPEN_NODES {
            break SolveStatus::Incumbent;
        }
    };
    Ok(finish(inc, status, expanded))
}

fn finish(inc: Incumbent, status: SolveStatus, nodes: u64) -> Assignment {
    Assignment {
        chosen: inc.chosen,
        objective: inc.objective,
        status,
        nodes,
        incumbents: inc.trace,
    }
}

/// Exhaustive enumeration in lexicographic order of the chosen vector; the
/// first assignment reaching the minimum wins.
pub fn brute_force(p: &BinaryQuadraticProgram) -> Result<Assignment, MiqpError> {
    p.validate()?;
    let size: f64 = p.groups.iter().map(|g| g.len() as f64).product();
    if size > BRUTE_FORCE_LIMIT {
        return Err(MiqpError::TooLarge(size));
    }
    let n = p.groups.len();
    let mut idx = vec![0usize; n];
    let mut chosen: Vec<usize> = p.groups.iter().map(|g| g[0]).collect();
    let mut best_chosen = chosen.clone();
    let mut best = p.evaluate(&chosen);
    let mut trace = vec![best];
    loop {
        // odometer, last group fastest
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(Assignment {
                    chosen: best_chosen,
                    objective: best,
                    status: SolveStatus::Optimal,
                    nodes: size as u64,
                    incumbents: trace,
                });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < p.groups[k].len() {
                chosen[k] = p.groups[k][idx[k]];
                break;
            }
            idx[k] = 0;
            chosen[k] = p.groups[k][0];
        }
        let obj = p.evaluate(&chosen);
        if obj < best {
            best = obj;
            best_chosen.clone_from(&chosen);
            trace.push(obj);
        }
    }
}
