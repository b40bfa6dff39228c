//! LP-based branch-and-bound over the binary variables.
//!
//! Nodes are explored best-bound first, except that after branching the
//! search dives into the child matching the rounding direction of the
//! branching variable.  With several workers, batches of open nodes are
//! solved concurrently and merged back in a fixed order, so results do not
//! depend on thread timing.
//!
//! In rational mode each node is first solved in floating point, and a
//! weak-duality bound certified in exact arithmetic decides pruning and
//! branching.  The exact simplex only runs where that is not enough.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::scalar::Scalar;
use super::simplex::{Arithmetic, Basis, InnerResult, LpProblem, LpStatus};
use super::{MilpModel, MilpSolution, SolveStats, SolveStatus, VarKind};

#[derive(Debug, Clone)]
pub struct BbConfig {
    pub time_limit: Option<Duration>,
    /// Relative optimality gap at which the search stops.
    pub gap_limit: f64,
    pub node_limit: Option<u64>,
    pub workers: usize,
    pub arithmetic: Arithmetic,
}

impl Default for BbConfig {
    fn default() -> Self {
        BbConfig { time_limit: None, gap_limit: 1e-6, node_limit: None, workers: 1, arithmetic: Arithmetic::Double }
    }
}

/// One point of the bound/incumbent trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSample {
    pub elapsed: Duration,
    pub nodes: u64,
    pub bound: Option<f64>,
    pub incumbent: Option<f64>,
}

struct Node {
    fixings: Vec<(usize, bool)>,
    bound: f64,
    basis: Option<Arc<Basis>>,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

pub fn solve_bb(model: &MilpModel, cfg: &BbConfig) -> MilpSolution {
    match cfg.arithmetic {
        Arithmetic::Rational => Search::<BigRational>::new(model, cfg).run(),
        Arithmetic::Double => Search::<f64>::new(model, cfg).run(),
    }
}

struct Search<'a, T> {
    model: &'a MilpModel,
    cfg: &'a BbConfig,
    lp: LpProblem<T>,
    binaries: Vec<usize>,
    /// Every objective term is an integer multiple of a binary, so node
    /// bounds may be rounded down.
    integral_objective: bool,
    start: Instant,
    incumbent: Option<(f64, Vec<T>)>,
    heap: BinaryHeap<Node>,
    seq: u64,
    stats: SolveStats,
    log: Vec<BoundSample>,
    warnings: Vec<String>,
    incomplete: bool,
}

enum NodeLp<T> {
    Solved(InnerResult<T>),
    Decided(Outcome<T>, u64),
}

enum Outcome<T> {
    Pruned,
    Integral(f64, Vec<T>),
    Branch { var: usize, up_first: bool, bound: f64, basis: Arc<Basis> },
    Unbounded,
}

impl<'a, T: Scalar> Search<'a, T> {
    fn new(model: &'a MilpModel, cfg: &'a BbConfig) -> Self {
        let lp = LpProblem::<T>::from_model(model);
        let binaries = model.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.id).collect();
        let integral_objective = model
            .objective
            .iter()
            .all(|(c, v)| c.is_integer() && model.variables[*v].kind == VarKind::Binary);
        Search {
            model,
            cfg,
            lp,
            binaries,
            integral_objective,
            start: Instant::now(),
            incumbent: None,
            heap: BinaryHeap::new(),
            seq: 0,
            stats: SolveStats::default(),
            log: Vec::new(),
            warnings: Vec::new(),
            incomplete: false,
        }
    }

    fn prune_threshold(&self) -> Option<f64> {
        self.incumbent
            .as_ref()
            .map(|(v, _)| v + self.cfg.gap_limit.max(0.0) * v.abs().max(1.0))
    }

    fn bounds_for(&self, fixings: &[(usize, bool)]) -> (Vec<Option<T>>, Vec<Option<T>>) {
        let n = self.lp.n_struct;
        let mut lo = self.lp.lower[..n].to_vec();
        let mut hi = self.lp.upper[..n].to_vec();
        for &(v, up) in fixings {
            let val = if up { T::unit() } else { T::nil() };
            lo[v] = Some(val.clone());
            hi[v] = Some(val);
        }
        (lo, hi)
    }

    fn solve_node(&self, node: &Node, threshold: Option<f64>) -> NodeLp<T> {
        let (lo, hi) = self.bounds_for(&node.fixings);
        let limit = self.lp.default_iteration_limit();
        let Some(shadow) = self.lp.solve_shadow(&lo, &hi, node.basis.as_deref(), limit) else {
            return NodeLp::Solved(self.lp.solve_from(&lo, &hi, node.basis.as_deref(), limit));
        };
        // An exact solve is skipped when a bound certified from the
        // floating-point duals already prunes the node, or when the node
        // branches anyway and that bound can stand in for the LP value.
        if shadow.status == LpStatus::Optimal {
            if let Some(bound) = self.lp.safe_bound(&lo, &hi, &shadow.duals) {
                let bound = self.node_bound(&bound);
                if threshold.is_some_and(|t| bound <= t) {
                    return NodeLp::Decided(Outcome::Pruned, shadow.iterations);
                }
                if let Some(var) = self.most_fractional(shadow.x.iter().map(|v| {
                    let d = v - v.floor();
                    let dist = d.min(1.0 - d);
                    if dist <= 1e-6 { 0.0 } else { dist }
                })) {
                    let up_first = shadow.x[var] >= 0.5;
                    let branch = Outcome::Branch { var, up_first, bound, basis: Arc::new(shadow.basis) };
                    return NodeLp::Decided(branch, shadow.iterations);
                }
            }
        }
        let warm = if shadow.status == LpStatus::IterationLimit { node.basis.as_deref() } else { Some(&shadow.basis) };
        let mut r = self.lp.solve_from(&lo, &hi, warm, limit);
        r.iterations += shadow.iterations;
        NodeLp::Solved(r)
    }

    /// The binary with the largest fractionality score, ties by smallest id.
    fn most_fractional(&self, score: impl Iterator<Item = f64>) -> Option<usize> {
        let score: Vec<f64> = score.collect();
        let mut best: Option<(usize, f64)> = None;
        for &b in &self.binaries {
            let f = score[b];
            if f > 0.0 && best.is_none_or(|(_, bf)| f > bf) {
                best = Some((b, f));
            }
        }
        best.map(|(b, _)| b)
    }

    fn fractional_part(x: &T) -> f64 {
        let f = x.approx();
        if T::EXACT {
            let b = x.to_big();
            if b.is_integer() {
                return 0.0;
            }
            let d = f - f.floor();
            return d.min(1.0 - d).max(f64::MIN_POSITIVE);
        }
        let d = f - f.floor();
        let dist = d.min(1.0 - d);
        if dist <= 1e-6 {
            0.0
        } else {
            dist
        }
    }

    fn classify(&self, r: InnerResult<T>, threshold: Option<f64>) -> (Outcome<T>, u64) {
        let iters = r.iterations;
        match r.status {
            LpStatus::Infeasible => return (Outcome::Pruned, iters),
            LpStatus::Unbounded => return (Outcome::Unbounded, iters),
            LpStatus::IterationLimit => return (Outcome::Pruned, iters),
            LpStatus::Optimal => {}
        }
        let obj = r.objective.approx();
        let bound = self.node_bound(&r.objective);
        if threshold.is_some_and(|t| bound <= t) {
            return (Outcome::Pruned, iters);
        }
        match self.most_fractional(r.x.iter().map(Self::fractional_part)) {
            None => (Outcome::Integral(obj, r.x), iters),
            Some(var) => {
                let up_first = r.x[var].approx() >= 0.5;
                (Outcome::Branch { var, up_first, bound, basis: Arc::new(r.basis) }, iters)
            }
        }
    }

    fn node_bound(&self, objective: &T) -> f64 {
        if !self.integral_objective {
            return objective.approx();
        }
        if T::EXACT {
            objective.to_big().floor().approx()
        } else {
            (objective.approx() + 1e-6).floor()
        }
    }

    fn global_bound(&self, extra: &[&Node]) -> Option<f64> {
        let open = self.heap.peek().map(|n| n.bound).into_iter().chain(extra.iter().map(|n| n.bound));
        let best = open.fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b))));
        match (best, &self.incumbent) {
            (Some(b), Some((v, _))) => Some(b.max(*v)),
            (Some(b), None) => Some(b),
            (None, Some((v, _))) => Some(*v),
            (None, None) => None,
        }
    }

    fn sample(&mut self, extra: &[&Node]) {
        let s = BoundSample {
            elapsed: self.start.elapsed(),
            nodes: self.stats.nodes,
            bound: self.global_bound(extra),
            incumbent: self.incumbent.as_ref().map(|(v, _)| *v),
        };
        self.log.push(s);
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn run(mut self) -> MilpSolution {
        if self.lp.presolve_infeasible {
            return self.finish(SolveStatus::Infeasible, None);
        }
        let root = Node { fixings: Vec::new(), bound: f64::INFINITY, basis: None, seq: 0 };
        let mut dive: Option<Node> = Some(root);
        let workers = self.cfg.workers.max(1);
        let mut stop: Option<SolveStatus> = None;

        loop {
            if let Some(limit) = self.cfg.time_limit {
                if self.start.elapsed() >= limit {
                    stop = Some(SolveStatus::TimeLimit);
                    break;
                }
            }
            if let Some(limit) = self.cfg.node_limit {
                if self.stats.nodes >= limit {
                    stop = Some(SolveStatus::Feasible { gap: None });
                    break;
                }
            }
            let threshold = self.prune_threshold();
            let mut batch: Vec<Node> = Vec::new();
            if let Some(n) = dive.take() {
                batch.push(n);
            }
            while batch.len() < workers {
                match self.heap.pop() {
                    Some(n) => batch.push(n),
                    None => break,
                }
            }
            batch.retain(|n| !threshold.is_some_and(|t| n.bound <= t));
            if batch.is_empty() {
                if self.heap.is_empty() {
                    break;
                }
                continue;
            }
            let mut bound_now = self.global_bound(&batch.iter().collect::<Vec<_>>());
            if let (Some(b), Some((inc, _))) = (bound_now, &self.incumbent) {
                if b - inc <= self.cfg.gap_limit.max(0.0) * inc.abs().max(1.0) {
                    break;
                }
            }

            let results: Vec<NodeLp<T>> = if batch.len() == 1 {
                vec![self.solve_node(&batch[0], threshold)]
            } else {
                let this = &self;
                std::thread::scope(|s| {
                    let handles: Vec<_> = batch.iter().map(|n| s.spawn(move || this.solve_node(n, threshold))).collect();
                    handles.into_iter().map(|h| h.join().expect("LP worker panicked")).collect()
                })
            };

            let mut children_to_dive: Vec<Node> = Vec::new();
            for (node, r) in batch.into_iter().zip(results) {
                self.stats.nodes += 1;
                let (outcome, iters) = match r {
                    NodeLp::Solved(r) => {
                        if r.status == LpStatus::IterationLimit {
                            self.incomplete = true;
                            self.warnings.push("an LP hit its iteration limit; its subtree was dropped".into());
                        }
                        self.classify(r, self.prune_threshold())
                    }
                    NodeLp::Decided(Outcome::Branch { bound, .. }, iters)
                        if self.prune_threshold().is_some_and(|t| bound <= t) =>
                    {
                        (Outcome::Pruned, iters)
                    }
                    NodeLp::Decided(outcome, iters) => (outcome, iters),
                };
                self.stats.lp_iterations += iters;
                match outcome {
                    Outcome::Pruned => {}
                    Outcome::Unbounded => {
                        if node.fixings.is_empty() {
                            return self.finish(SolveStatus::Unbounded, None);
                        }
                        self.incomplete = true;
                    }
                    Outcome::Integral(obj, x) => {
                        if self.incumbent.as_ref().is_none_or(|(v, _)| obj > *v) {
                            self.incumbent = Some((obj, x));
                            bound_now = None;
                            self.sample(&[]);
                        }
                    }
                    Outcome::Branch { var, up_first, bound, basis } => {
                        let mk = |this: &mut Self, up: bool| {
                            let mut f = node.fixings.clone();
                            f.push((var, up));
                            Node { fixings: f, bound, basis: Some(basis.clone()), seq: this.next_seq() }
                        };
                        let first = mk(&mut self, up_first);
                        let second = mk(&mut self, !up_first);
                        self.heap.push(second);
                        children_to_dive.push(first);
                    }
                }
            }
            // Dive into the first child; the rest wait in the heap.
            let mut it = children_to_dive.into_iter();
            dive = it.next();
            for n in it {
                self.heap.push(n);
            }
            if self.stats.nodes % 64 == 0 || bound_now.is_none() {
                let extra: Vec<&Node> = dive.iter().collect();
                self.sample(&extra);
            }
            if dive.is_none() && self.heap.is_empty() {
                break;
            }
        }

        if let Some(n) = dive.take() {
            self.heap.push(n);
        }
        let bound = self.global_bound(&[]);
        let status = match stop {
            Some(s) => match (s, &self.incumbent) {
                (SolveStatus::Feasible { .. }, Some((v, _))) => {
                    let gap = bound.map(|b| ((b - v) / v.abs().max(1.0)).max(0.0));
                    SolveStatus::Feasible { gap }
                }
                (s, _) => s,
            },
            None => match &self.incumbent {
                None if self.incomplete => SolveStatus::Feasible { gap: None },
                None => SolveStatus::Infeasible,
                Some(_) if self.incomplete => SolveStatus::Feasible { gap: None },
                Some(_) => SolveStatus::Optimal,
            },
        };
        self.finish(status, bound)
    }

    /// Converts the incumbent to exact values.  In floating point the
    /// binaries are rounded and the continuous part is re-solved exactly.
    fn polish(&self, x: &[T]) -> Vec<BigRational> {
        let rounded: Vec<BigRational> = self
            .model
            .variables
            .iter()
            .map(|v| {
                if v.kind == VarKind::Binary {
                    if x[v.id].approx() >= 0.5 {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                } else {
                    x[v.id].to_big()
                }
            })
            .collect();
        if T::EXACT || self.binaries.len() == self.model.variables.len() {
            return rounded;
        }
        let exact = LpProblem::<BigRational>::from_model(self.model);
        let n = exact.n_struct;
        let mut lo = exact.lower[..n].to_vec();
        let mut hi = exact.upper[..n].to_vec();
        for &b in &self.binaries {
            lo[b] = Some(rounded[b].clone());
            hi[b] = Some(rounded[b].clone());
        }
        let r = exact.solve(&lo, &hi, None, exact.default_iteration_limit());
        if r.status == LpStatus::Optimal {
            r.x
        } else {
            rounded
        }
    }

    fn finish(mut self, status: SolveStatus, bound: Option<f64>) -> MilpSolution {
        self.stats.wall_time = self.start.elapsed();
        self.sample(&[]);
        let values = match &self.incumbent {
            Some((_, x)) => self.polish(x),
            None => Vec::new(),
        };
        let objective = if values.is_empty() { None } else { Some(self.model.objective_value(&values)) };
        let bound = match (&status, &objective) {
            (SolveStatus::Optimal, Some(o)) => Some(o.clone()),
            _ => bound.filter(|b| b.is_finite()).and_then(|b| BigRational::from_float(b)),
        };
        MilpSolution {
            status,
            values,
            objective,
            bound,
            stats: self.stats,
            warnings: self.warnings,
            log: self.log,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{int, Sense};

    fn knapsack() -> MilpModel {
        let mut m = MilpModel::new();
        let vals = [10, 6, 4];
        let wts = [5, 4, 3];
        let xs: Vec<_> = (0..3).map(|i| m.add_binary(format!("x{}", i + 1))).collect();
        m.add_constraint("cap", xs.iter().zip(wts).map(|(&x, w)| (int(w), x)), Sense::Le, int(8));
        m.set_objective(xs.iter().zip(vals).map(|(&x, v)| (int(v), x)));
        m
    }

    #[test]
    fn knapsack_both_arithmetics() {
        for arithmetic in [Arithmetic::Rational, Arithmetic::Double] {
            let s = solve_bb(&knapsack(), &BbConfig { arithmetic, ..BbConfig::default() });
            assert_eq!(s.status, SolveStatus::Optimal);
            assert_eq!(s.objective, Some(int(14)));
            assert_eq!(s.values, vec![int(1), int(0), int(1)]);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let m = knapsack();
        let a = solve_bb(&m, &BbConfig::default());
        let b = solve_bb(&m, &BbConfig { workers: 4, ..BbConfig::default() });
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn infeasible_model() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        let y = m.add_binary("y");
        m.add_constraint("c", vec![(int(1), x), (int(1), y)], Sense::Ge, int(3));
        m.set_objective(vec![(int(1), x)]);
        assert_eq!(solve_bb(&m, &BbConfig::default()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn mixed_model_values_are_exact() {
        // max y, y <= 1/3 + x, x binary, x <= 0
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        let y = m.add_continuous("y", Some(int(0)), None);
        m.add_constraint("c", vec![(int(3), y), (int(-3), x)], Sense::Le, int(1));
        m.add_constraint("off", vec![(int(1), x)], Sense::Le, int(0));
        m.set_objective(vec![(int(1), y)]);
        let s = solve_bb(&m, &BbConfig::default());
        assert_eq!(s.objective, Some(BigRational::new(1.into(), 3.into())));
    }
}
