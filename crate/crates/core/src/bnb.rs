//! Branch-and-bound driver: node queue, pruning, simultaneous pruning,
//! branching and termination.

use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::cmp::Ordering;
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use crate::bounding::{solve_lower_bound, solve_upper_bound};
use crate::error::{Error, Result};
use crate::problem::{dot, Exploration, Node, Problem, SolveResult, SolverOptions, SparseVector, Status};
use crate::relaxation::{CoordStatus, CoordTerms};

/// Incumbent updates must improve by more than this amount.
const INCUMBENT_IMPROVEMENT: f64 = 1e-12;

/// `true` when `node_lower > incumbent - rel_tol * max(1, |incumbent|)`.
pub fn pruning_test(node_lower: f64, incumbent: f64, rel_tol: f64) -> bool {
    if node_lower.is_nan() {
        return false;
    }
    if incumbent == f64::INFINITY {
        return node_lower == f64::INFINITY;
    }
    node_lower > incumbent - rel_tol * incumbent.abs().max(1.0)
}

/// `(max(|p| , 1))`-relative gap between an upper and a lower bound.
pub fn relative_gap(upper: f64, lower: f64) -> f64 {
    if upper == lower {
        return 0.0;
    }
    if !upper.is_finite() || !lower.is_finite() {
        return f64::INFINITY;
    }
    ((upper - lower) / upper.abs().max(1.0)).max(0.0)
}

/// A coordinate fixed by simultaneous pruning, with the status it is fixed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fixation {
    pub index: usize,
    pub status: CoordStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimultaneousPruning {
    Fixations(Vec<Fixation>),
    /// Both children of some coordinate are pruned; the whole node is.
    /// `bound` is the smaller of the two child bounds.
    NodePruned { bound: f64 },
}

/// Dual bounds of the two children `nu + (i, 0)` and `nu + (i, 1)` obtained by
/// swapping the conjugate term of free coordinate `i` (correlation `v = a_i^T u`).
pub fn child_bounds(problem: &Problem, i: usize, v: f64, dual_value: f64) -> (f64, f64) {
    let terms = CoordTerms::of(problem, i);
    let free = terms.relaxed_term_conjugate(CoordStatus::Free, v);
    let zero = terms.relaxed_term_conjugate(CoordStatus::Zero, v);
    let nonzero = terms.relaxed_term_conjugate(CoordStatus::NonZero, v);
    (dual_value + free - zero, dual_value + free - nonzero)
}

/// Tests every child of the node at the dual point `u` against the incumbent.
pub fn simultaneous_prune(
    problem: &Problem,
    node: &Node,
    u: &[f64],
    dual_value: f64,
    incumbent: f64,
    rel_tol: f64,
) -> SimultaneousPruning {
    let corr: Vec<f64> = (0..problem.n()).map(|i| dot(problem.column(i), u)).collect();
    simultaneous_prune_corr(problem, node, &corr, dual_value, incumbent, rel_tol)
}

/// Same as [`simultaneous_prune`] with the correlations `a_i^T u` precomputed.
pub(crate) fn simultaneous_prune_corr(
    problem: &Problem,
    node: &Node,
    corr: &[f64],
    dual_value: f64,
    incumbent: f64,
    rel_tol: f64,
) -> SimultaneousPruning {
    if !dual_value.is_finite() {
        return SimultaneousPruning::Fixations(Vec::new());
    }
    let mut fixations = Vec::new();
    for i in 0..problem.n() {
        if node.status(i) != CoordStatus::Free {
            continue;
        }
        let (d0, d1) = child_bounds(problem, i, corr[i], dual_value);
        match (pruning_test(d0, incumbent, rel_tol), pruning_test(d1, incumbent, rel_tol)) {
            (true, true) => return SimultaneousPruning::NodePruned { bound: d0.min(d1) },
            (true, false) => fixations.push(Fixation {
                index: i,
                status: CoordStatus::NonZero,
            }),
            (false, true) => fixations.push(Fixation {
                index: i,
                status: CoordStatus::Zero,
            }),
            (false, false) => {}
        }
    }
    SimultaneousPruning::Fixations(fixations)
}

/// Splits the node on the free coordinate of largest `|x_j|` (smallest index on ties).
pub fn branch(node: &Node, x: &[f64]) -> Option<(Node, Node, usize)> {
    let mut best: Option<(usize, f64)> = None;
    for j in node.free() {
        let mag = x[j].abs();
        if best.map_or(true, |(_, b)| mag > b) {
            best = Some((j, mag));
        }
    }
    let (i, _) = best?;
    let mut child0 = node.clone();
    child0.x_warm = x.to_vec();
    child0.fix_zero(i);
    child0.depth += 1;
    let mut child1 = node.clone();
    child1.x_warm = x.to_vec();
    child1.fix_nonzero(i);
    child1.depth += 1;
    Some((child0, child1, i))
}

struct Keyed {
    bound: f64,
    seq: u64,
    node: Node,
}

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    // max-heap: smaller bound first, then earlier insertion
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Open nodes ordered by the exploration strategy.
pub struct NodeQueue {
    strategy: Exploration,
    heap: BinaryHeap<Keyed>,
    fifo: VecDeque<Node>,
    seq: u64,
}

impl NodeQueue {
    pub fn new(strategy: Exploration) -> Self {
        Self {
            strategy,
            heap: BinaryHeap::new(),
            fifo: VecDeque::new(),
            seq: 0,
        }
    }

    pub fn push(&mut self, node: Node) {
        self.seq += 1;
        match self.strategy {
            Exploration::BestFirst => self.heap.push(Keyed {
                bound: node.lower_bound,
                seq: self.seq,
                node,
            }),
            _ => self.fifo.push_back(node),
        }
    }

    /// Next node to explore; `None` when the queue is exhausted.
    pub fn select_next(&mut self) -> Option<Node> {
        match self.strategy {
            Exploration::BestFirst => self.heap.pop().map(|k| k.node),
            Exploration::DepthFirst => self.fifo.pop_back(),
            Exploration::BreadthFirst => self.fifo.pop_front(),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len() + self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest lower bound among open nodes (`+inf` when empty).
    pub fn min_lower_bound(&self) -> f64 {
        match self.strategy {
            Exploration::BestFirst => self.heap.peek().map_or(f64::INFINITY, |k| k.bound),
            _ => self
                .fifo
                .iter()
                .map(|n| n.lower_bound)
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Per-node progress report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Progress {
    pub node_count: u64,
    pub global_lower: f64,
    pub incumbent_value: f64,
    pub queue_size: usize,
}

#[derive(Clone, Debug)]
struct Incumbent {
    x: Vec<f64>,
    value: f64,
}

impl Incumbent {
    fn offer(&mut self, problem: &Problem, x: &[f64]) -> bool {
        let value = problem.objective(x);
        if value < self.value - INCUMBENT_IMPROVEMENT {
            self.x = x.to_vec();
            self.value = value;
            true
        } else {
            false
        }
    }
}

enum NodeOutcome {
    /// The region holds no point better than the incumbent; carries its certified bound.
    Pruned(f64),
    /// Every coordinate is fixed; the upper-bound solve resolved the region.
    Leaf,
    Branched(Node, Node),
}

struct Processed {
    candidates: Vec<Vec<f64>>,
    outcome: NodeOutcome,
}

fn process_node(problem: &Problem, opts: &SolverOptions, mut node: Node, incumbent: f64) -> Processed {
    let mut candidates = Vec::new();
    let (x_ub, ub) = solve_upper_bound(problem, &node, opts);
    let incumbent = incumbent.min(ub);
    candidates.push(x_ub);

    let lb = solve_lower_bound(problem, &node, opts, incumbent);
    let bound = lb.lower_bound.max(node.lower_bound);
    if lb.pruned || pruning_test(bound, incumbent, opts.rel_gap_tol) {
        return Processed {
            candidates,
            outcome: NodeOutcome::Pruned(bound),
        };
    }
    let fixed_nonzero = lb.fixations.iter().any(|f| f.status == CoordStatus::NonZero);
    node.x_warm = lb.x.clone();
    node.workset = lb.workset.clone();
    node.lower_bound = bound;
    for f in &lb.fixations {
        match f.status {
            CoordStatus::Zero => node.fix_zero(f.index),
            CoordStatus::NonZero => node.fix_nonzero(f.index),
            CoordStatus::Free => {}
        }
    }
    if !node.has_free() {
        if fixed_nonzero || !lb.fixations.is_empty() {
            let (x_leaf, _) = solve_upper_bound(problem, &node, opts);
            candidates.push(x_leaf);
        }
        return Processed {
            candidates,
            outcome: NodeOutcome::Leaf,
        };
    }
    let x = node.x_warm.clone();
    match branch(&node, &x) {
        Some((c0, c1, _)) => Processed {
            candidates,
            outcome: NodeOutcome::Branched(c0, c1),
        },
        None => Processed {
            candidates,
            outcome: NodeOutcome::Leaf,
        },
    }
}

struct Shared {
    queue: NodeQueue,
    incumbent: Incumbent,
    closed_lower: f64,
    in_flight: BTreeMap<u64, f64>,
    next_ticket: u64,
    node_count: u64,
    active: usize,
    done: bool,
    status: Status,
}

impl Shared {
    fn global_lower(&self) -> f64 {
        let open = self.queue.min_lower_bound();
        let flying = self.in_flight.values().copied().fold(f64::INFINITY, f64::min);
        open.min(flying).min(self.closed_lower).min(self.incumbent.value)
    }
}

/// Solves the problem to global optimality (or until a limit fires).
pub fn solve(problem: &Problem, opts: &SolverOptions) -> Result<SolveResult> {
    solve_with(problem, opts, None, None)
}

/// Solver entry point with an optional starting incumbent and a progress callback.
pub fn solve_with(
    problem: &Problem,
    opts: &SolverOptions,
    initial: Option<&[f64]>,
    progress: Option<&(dyn Fn(&Progress) + Sync)>,
) -> Result<SolveResult> {
    opts.validate()?;
    let n = problem.n();
    let start = Instant::now();
    // zero is always feasible
    let zero = vec![0.0; n];
    let mut incumbent = Incumbent {
        value: problem.objective(&zero),
        x: zero,
    };
    if let Some(x0) = initial {
        if x0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial point has length {} but the problem has {n} coordinates",
                x0.len()
            )));
        }
        incumbent.offer(problem, x0);
    }
    let mut queue = NodeQueue::new(opts.exploration);
    queue.push(Node::root(n));
    let shared = Mutex::new(Shared {
        queue,
        incumbent,
        closed_lower: f64::INFINITY,
        in_flight: BTreeMap::new(),
        next_ticket: 0,
        node_count: 0,
        active: 0,
        done: false,
        status: Status::Optimal,
    });
    let wake = Condvar::new();

    let worker = || loop {
        let (node, ticket, incumbent_value) = {
            let mut s = shared.lock().expect("solver state poisoned");
            loop {
                if s.done {
                    return;
                }
                if let Some(limit) = opts.node_limit {
                    if s.node_count >= limit && !s.queue.is_empty() {
                        s.status = Status::NodeLimit;
                        s.done = true;
                        wake.notify_all();
                        return;
                    }
                }
                if let Some(limit) = opts.time_limit {
                    if start.elapsed() >= limit && !s.queue.is_empty() {
                        s.status = Status::TimeLimit;
                        s.done = true;
                        wake.notify_all();
                        return;
                    }
                }
                if let Some(node) = s.queue.select_next() {
                    if pruning_test(node.lower_bound, s.incumbent.value, opts.rel_gap_tol) {
                        s.closed_lower = s.closed_lower.min(node.lower_bound);
                        continue;
                    }
                    s.node_count += 1;
                    s.active += 1;
                    s.next_ticket += 1;
                    let ticket = s.next_ticket;
                    s.in_flight.insert(ticket, node.lower_bound);
                    let inc = s.incumbent.value;
                    break (node, ticket, inc);
                }
                if s.active == 0 {
                    s.done = true;
                    wake.notify_all();
                    return;
                }
                s = wake.wait(s).expect("solver state poisoned");
            }
        };

        let processed = process_node(problem, opts, node, incumbent_value);

        let mut s = shared.lock().expect("solver state poisoned");
        for x in &processed.candidates {
            s.incumbent.offer(problem, x);
        }
        s.in_flight.remove(&ticket);
        match processed.outcome {
            NodeOutcome::Pruned(bound) => s.closed_lower = s.closed_lower.min(bound),
            NodeOutcome::Leaf => {}
            NodeOutcome::Branched(c0, c1) => {
                s.queue.push(c0);
                s.queue.push(c1);
            }
        }
        s.active -= 1;
        let global_lower = s.global_lower();
        if let Some(cb) = progress {
            cb(&Progress {
                node_count: s.node_count,
                global_lower,
                incumbent_value: s.incumbent.value,
                queue_size: s.queue.len(),
            });
        }
        if s.active == 0 && s.queue.is_empty() {
            s.done = true;
        } else if relative_gap(s.incumbent.value, global_lower) <= opts.rel_gap_tol {
            s.done = true;
        }
        wake.notify_all();
    };

    if opts.workers <= 1 {
        worker();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..opts.workers {
                scope.spawn(&worker);
            }
        });
    }

    let s = shared.into_inner().expect("solver state poisoned");
    let global_lower = s.global_lower();
    let rel_gap = relative_gap(s.incumbent.value, global_lower);
    let status = match s.status {
        Status::Optimal if rel_gap <= opts.rel_gap_tol || s.queue.is_empty() => Status::Optimal,
        other => other,
    };
    Ok(SolveResult {
        status,
        x_opt: SparseVector::from_dense(&s.incumbent.x),
        objective: s.incumbent.value,
        lower_bound: global_lower,
        rel_gap,
        node_count: s.node_count,
        solve_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pruning_test_examples() {
        assert!(pruning_test(f64::INFINITY, 5.0, 1e-8));
        assert!(!pruning_test(4.0, 5.0, 1e-8));
        assert!(pruning_test(5.0 + 1e-6, 5.0, 1e-8));
        assert!(!pruning_test(5.0 - 1e-6, 5.0, 1e-8));
        assert!(!pruning_test(1e300, f64::INFINITY, 1e-8));
    }

    #[test]
    fn branch_picks_largest_magnitude() {
        let node = Node::root(3);
        let (c0, c1, i) = branch(&node, &[0.1, -0.9, 0.5]).unwrap();
        assert_eq!(i, 1);
        assert_eq!(c0.x_warm[1], 0.0);
        assert_eq!(c0.nu0(), vec![1]);
        assert_eq!(c1.nu1(), vec![1]);
        assert_eq!(c1.x_warm, vec![0.1, -0.9, 0.5]);
        let (_, _, i) = branch(&Node::root(2), &[0.5, 0.5]).unwrap();
        assert_eq!(i, 0);
        let full = Node::from_sets(2, &[0], &[1]).unwrap();
        assert!(branch(&full, &[0.0, 1.0]).is_none());
    }

    fn with_bound(b: f64) -> Node {
        let mut n = Node::root(1);
        n.lower_bound = b;
        n
    }

    #[test]
    fn best_first_order() {
        let mut q = NodeQueue::new(Exploration::BestFirst);
        for b in [3.0, 1.0, 2.0] {
            q.push(with_bound(b));
        }
        assert_eq!(q.min_lower_bound(), 1.0);
        assert_eq!(q.select_next().unwrap().lower_bound, 1.0);
        let mut q = NodeQueue::new(Exploration::BestFirst);
        let mut a = with_bound(1.0);
        a.depth = 7;
        q.push(a);
        q.push(with_bound(1.0));
        assert_eq!(q.select_next().unwrap().depth, 7);
    }

    #[test]
    fn depth_and_breadth_first_ignore_bounds() {
        let mut q = NodeQueue::new(Exploration::DepthFirst);
        for b in [3.0, 1.0, 2.0] {
            q.push(with_bound(b));
        }
        assert_eq!(q.select_next().unwrap().lower_bound, 2.0);
        assert_eq!(q.min_lower_bound(), 1.0);
        let mut q = NodeQueue::new(Exploration::BreadthFirst);
        for b in [3.0, 1.0, 2.0] {
            q.push(with_bound(b));
        }
        assert_eq!(q.select_next().unwrap().lower_bound, 3.0);
        assert!(NodeQueue::new(Exploration::BestFirst).select_next().is_none());
    }

    #[test]
    fn relative_gap_definition() {
        assert_eq!(relative_gap(2.0, 1.0), 0.5);
        assert_eq!(relative_gap(0.5, 0.25), 0.25);
        assert_eq!(relative_gap(1.0, f64::NEG_INFINITY), f64::INFINITY);
        assert_eq!(relative_gap(1.0, 1.0 + 1e-9), 0.0);
    }
}
