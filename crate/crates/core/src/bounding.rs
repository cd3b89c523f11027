//! Node bounding: a working-set coordinate-descent solver for the convex
//! node relaxation and for the support-restricted upper-bound problem,
//! together with Fenchel dual certificates and gap-safe screening.

use crate::bnb::{pruning_test, simultaneous_prune_corr, Fixation, SimultaneousPruning};
use nalgebra::{DMatrix, DVector};

use crate::interval::Interval;
use crate::problem::{axpy, dot, Node, Problem, SolverOptions};
use crate::relaxation::{CoordStatus, CoordTerms};

/// Working-set size used to seed a node that has none.
pub const INITIAL_WORKSET: usize = 100;
const REFRESH_EVERY: usize = 50;
const MAX_SWEEPS: usize = 20_000;
const CHECK_EVERY: usize = 4;
const LOOSE_TOL: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const ANDERSON_DEPTH: usize = 5;

/// Primal/dual iterate of the coordinate-descent solver.
#[derive(Clone, Debug)]
pub struct BoundingState {
    pub x: Vec<f64>,
    /// `A x`, maintained incrementally.
    pub ax: Vec<f64>,
    /// `grad f(A x)`.
    pub grad: Vec<f64>,
    /// Current dual point.
    pub u: Vec<f64>,
    pub workset: Vec<usize>,
    in_workset: Vec<bool>,
    pub gap: f64,
    pub dual_value: f64,
    steps: Vec<f64>,
    sweeps: usize,
}

impl BoundingState {
    /// Starts from `x` (entries of fixed-zero coordinates are cleared) and the given working set.
    pub fn new(problem: &Problem, statuses: &[CoordStatus], x: &[f64], workset: &[usize]) -> Self {
        let n = problem.n();
        let mut x = x.to_vec();
        for (xi, s) in x.iter_mut().zip(statuses) {
            if *s == CoordStatus::Zero {
                *xi = 0.0;
            }
        }
        let mut state = Self {
            ax: problem.data().apply(&x),
            grad: vec![0.0; problem.m()],
            u: vec![0.0; problem.m()],
            x,
            workset: Vec::new(),
            in_workset: vec![false; n],
            gap: f64::INFINITY,
            dual_value: f64::NEG_INFINITY,
            steps: vec![0.0; n],
            sweeps: 0,
        };
        state.refresh_gradient(problem);
        for i in 0..n {
            state.steps[i] = initial_step(problem, i);
        }
        state.extend_workset(workset.iter().copied().filter(|&i| statuses[i] != CoordStatus::Zero));
        state
    }

    pub fn in_workset(&self, i: usize) -> bool {
        self.in_workset[i]
    }

    fn extend_workset(&mut self, idx: impl IntoIterator<Item = usize>) {
        for i in idx {
            if !self.in_workset[i] {
                self.in_workset[i] = true;
                self.workset.push(i);
            }
        }
    }

    fn remove_from_workset(&mut self, problem: &Problem, i: usize) {
        if self.in_workset[i] {
            self.in_workset[i] = false;
            self.workset.retain(|&j| j != i);
        }
        self.set_coordinate(problem, i, 0.0);
    }

    fn refresh_gradient(&mut self, problem: &Problem) {
        problem.loss().gradient(&self.ax, &mut self.grad);
    }

    fn refresh_product(&mut self, problem: &Problem) {
        self.ax = problem.data().apply(&self.x);
        self.refresh_gradient(problem);
    }

    fn set_coordinate(&mut self, problem: &Problem, i: usize, value: f64) {
        let delta = value - self.x[i];
        if delta != 0.0 {
            axpy(delta, problem.column(i), &mut self.ax);
            self.x[i] = value;
            self.refresh_gradient(problem);
        }
    }
}

fn initial_step(problem: &Problem, i: usize) -> f64 {
    let norm_sq = problem.col_norm_sq(i);
    match problem.loss().lipschitz() {
        Some(l) if l > 0.0 => 1.0 / (l * norm_sq),
        _ => 1.0 / norm_sq,
    }
}

/// Objective of the node relaxation: `f(Ax) + sum_i relaxed_i(x_i)`.
pub fn relaxation_objective(problem: &Problem, statuses: &[CoordStatus], x: &[f64], ax: &[f64]) -> f64 {
    let mut total = problem.loss().value(ax);
    for (i, (&xi, &s)) in x.iter().zip(statuses).enumerate() {
        if xi != 0.0 || s == CoordStatus::NonZero {
            total += CoordTerms::of(problem, i).relaxed_term(s, xi);
        }
    }
    total
}

/// Fenchel dual value `-f*(-u) - sum_i relaxed_i*(a_i^T u)` of the node relaxation.
pub fn dual_bound(problem: &Problem, node: &Node, u: &[f64]) -> f64 {
    dual_bound_statuses(problem, node.statuses(), u)
}

pub(crate) fn dual_bound_statuses(problem: &Problem, statuses: &[CoordStatus], u: &[f64]) -> f64 {
    let neg_u: Vec<f64> = u.iter().map(|v| -v).collect();
    let fc = problem.loss().conjugate(&neg_u);
    if fc == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut total = -fc;
    for (i, &s) in statuses.iter().enumerate() {
        if s == CoordStatus::Zero {
            continue;
        }
        let v = dot(problem.column(i), u);
        total -= CoordTerms::of(problem, i).relaxed_term_conjugate(s, v);
    }
    total
}

/// `max(0, relaxation objective at x - dual value at u)`.
pub fn relaxation_gap(problem: &Problem, node: &Node, x: &[f64], u: &[f64]) -> f64 {
    let ax = problem.data().apply(x);
    let primal = relaxation_objective(problem, node.statuses(), x, &ax);
    let dual = dual_bound(problem, node, u);
    let gap = primal - dual;
    if gap.is_nan() {
        f64::INFINITY
    } else {
        gap.max(0.0)
    }
}

/// Dual certificate built from `u = -grad f(Ax)`, scaled into the domain of
/// the conjugate terms when needed. Coordinates in `restrict` (when given)
/// are the only ones treated as active; the others are held at zero.
struct DualEval {
    u: Vec<f64>,
    /// `a_i^T u` for the scaled point (0 for skipped coordinates).
    corr: Vec<f64>,
    value: f64,
}

fn evaluate_dual(
    problem: &Problem,
    statuses: &[CoordStatus],
    grad: &[f64],
    restrict: Option<&[bool]>,
) -> DualEval {
    let n = problem.n();
    let active = |i: usize| statuses[i] != CoordStatus::Zero && restrict.map_or(true, |r| r[i]);
    let mut corr = vec![0.0; n];
    let mut scale: f64 = 1.0;
    for i in 0..n {
        if !active(i) {
            continue;
        }
        let v = -dot(problem.column(i), grad);
        corr[i] = v;
        let dom = CoordTerms::of(problem, i).relaxed_conjugate_domain(statuses[i]);
        if v > dom.hi() {
            scale = scale.min(dom.hi() / v);
        } else if v < dom.lo() {
            scale = scale.min(dom.lo() / v);
        }
    }
    let scale = scale.max(0.0);
    let u: Vec<f64> = grad.iter().map(|g| -scale * g).collect();
    let neg_u: Vec<f64> = u.iter().map(|v| -v).collect();
    let fc = problem.loss().conjugate(&neg_u);
    let mut value = if fc == f64::INFINITY { f64::NEG_INFINITY } else { -fc };
    for i in 0..n {
        let s = statuses[i];
        let terms = CoordTerms::of(problem, i);
        if active(i) {
            let dom = terms.relaxed_conjugate_domain(s);
            let v = (scale * corr[i]).clamp(dom.lo(), dom.hi());
            corr[i] = v;
            value -= terms.relaxed_term_conjugate(s, v);
        } else {
            corr[i] = 0.0;
            // coordinate held at zero: its term is the constant relaxed(0)
            value += terms.relaxed_at_zero(s);
        }
    }
    DualEval { u, corr, value }
}

/// One sweep of proximal coordinate descent over the working set.
pub fn coordinate_descent_pass(state: &mut BoundingState, problem: &Problem, statuses: &[CoordStatus]) {
    let lipschitz = problem.loss().lipschitz();
    for k in 0..state.workset.len() {
        let i = state.workset[k];
        let s = statuses[i];
        if s == CoordStatus::Zero {
            continue;
        }
        let terms = CoordTerms::of(problem, i);
        let col = problem.column(i);
        if problem.col_norm_sq(i) == 0.0 {
            // the loss does not depend on x_i; the relaxed term is minimised at 0
            state.set_coordinate(problem, i, 0.0);
            continue;
        }
        let gi = dot(col, &state.grad);
        let xi = state.x[i];
        match lipschitz {
            Some(_) => {
                let eta = state.steps[i];
                let new = terms.relaxed_term_prox(s, xi - eta * gi, eta);
                state.set_coordinate(problem, i, new);
            }
            None => backtracking_step(state, problem, &terms, s, i, gi),
        }
    }
    state.sweeps += 1;
    if state.sweeps % REFRESH_EVERY == 0 {
        state.refresh_product(problem);
    }
}

/// Coordinate step for losses without a global gradient Lipschitz constant:
/// halve the step until the average curvature along the move is at most
/// `1 / (2 eta)` (a gradient-only test, exact enough for tiny moves).
fn backtracking_step(
    state: &mut BoundingState,
    problem: &Problem,
    terms: &CoordTerms,
    s: CoordStatus,
    i: usize,
    gi: f64,
) {
    let col = problem.column(i);
    let xi = state.x[i];
    let mut eta = 2.0 * state.steps[i];
    let mut trial = state.ax.clone();
    let mut g1 = vec![0.0; trial.len()];
    for _ in 0..MAX_BACKTRACKS {
        let new = terms.relaxed_term_prox(s, xi - eta * gi, eta);
        let delta = new - xi;
        if delta == 0.0 {
            return;
        }
        trial.copy_from_slice(&state.ax);
        axpy(delta, col, &mut trial);
        if problem.loss().value(&trial).is_finite() {
            problem.loss().gradient(&trial, &mut g1);
            let gi1 = dot(col, &g1);
            if (gi1 - gi) * delta <= delta * delta / (2.0 * eta) {
                state.steps[i] = eta;
                state.x[i] = new;
                std::mem::swap(&mut state.ax, &mut trial);
                std::mem::swap(&mut state.grad, &mut g1);
                return;
            }
        }
        eta *= 0.5;
    }
    state.steps[i] = eta;
}

/// Runs coordinate descent on the working set and returns the best
/// restricted dual value. Stops when the restricted duality gap is below
/// `tol`. Given a pruning `cutoff`, it also stops
/// - at the looser `LOOSE_TOL` once the primal value is under the cutoff:
///   the primal value bounds the relaxation from above, so the node cannot be
///   pruned and more accuracy would only refine a bound that is not decisive;
/// - as soon as the full dual clears the cutoff.
fn solve_restricted(
    state: &mut BoundingState,
    problem: &Problem,
    statuses: &[CoordStatus],
    tol: f64,
    cutoff: Option<f64>,
) -> f64 {
    let mut best_restricted = f64::NEG_INFINITY;
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(ANDERSON_DEPTH + 1);
    for sweep in 0..MAX_SWEEPS {
        coordinate_descent_pass(state, problem, statuses);
        history.push(state.workset.iter().map(|&i| state.x[i]).collect());
        if history.len() == ANDERSON_DEPTH + 1 {
            anderson_step(state, problem, statuses, &history);
            history.clear();
        }
        if sweep % CHECK_EVERY != CHECK_EVERY - 1 && sweep + 1 < MAX_SWEEPS {
            continue;
        }
        let primal = relaxation_objective(problem, statuses, &state.x, &state.ax);
        let dual = evaluate_dual(problem, statuses, &state.grad, Some(&state.in_workset)).value;
        best_restricted = best_restricted.max(dual);
        let gap = primal - best_restricted;
        let scale = primal.abs().max(1.0);
        if gap <= tol * scale {
            break;
        }
        let Some(cutoff) = cutoff else {
            continue;
        };
        if primal < cutoff && gap <= LOOSE_TOL.max(tol) * scale {
            break;
        }
        // the full dual only subtracts more nonnegative terms, so it can clear
        // the cutoff only once the restricted one has
        if dual > cutoff && evaluate_dual(problem, statuses, &state.grad, None).value > cutoff {
            break;
        }
    }
    best_restricted
}

/// Anderson extrapolation over the last coordinate-descent iterates,
/// kept only when it lowers the relaxation objective.
fn anderson_step(state: &mut BoundingState, problem: &Problem, statuses: &[CoordStatus], history: &[Vec<f64>]) {
    let k = history.len() - 1;
    let diffs: Vec<Vec<f64>> = history
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect())
        .collect();
    let gram = DMatrix::from_fn(k, k, |r, c| dot(&diffs[r], &diffs[c]));
    let trace = gram.trace();
    if !(trace > 0.0) || !trace.is_finite() {
        return;
    }
    let reg = gram + DMatrix::identity(k, k) * (1e-10 * trace);
    let Some(chol) = reg.cholesky() else {
        return;
    };
    let z = chol.solve(&DVector::from_element(k, 1.0));
    let total: f64 = z.iter().sum();
    if !(total.abs() > 0.0) || !total.is_finite() {
        return;
    }
    let ws = &state.workset;
    let extrapolated: Vec<f64> = (0..ws.len())
        .map(|j| (0..k).map(|r| z[r] / total * history[r + 1][j]).sum())
        .collect();
    let mut x_try = state.x.clone();
    let mut ax_try = state.ax.clone();
    for (j, &i) in ws.iter().enumerate() {
        let delta = extrapolated[j] - state.x[i];
        if delta != 0.0 {
            axpy(delta, problem.column(i), &mut ax_try);
            x_try[i] = extrapolated[j];
        }
    }
    let current = relaxation_objective(problem, statuses, &state.x, &state.ax);
    let trial = relaxation_objective(problem, statuses, &x_try, &ax_try);
    if trial < current {
        state.x = x_try;
        state.ax = ax_try;
        state.refresh_gradient(problem);
    }
}

/// Indices outside the working set whose optimality condition
/// `a_i^T u in d relaxed_i(x_i)` fails. Fixed-zero and screened coordinates
/// are never inspected.
pub fn violation_set(
    problem: &Problem,
    node: &Node,
    x: &[f64],
    u: &[f64],
    workset: &[usize],
    screened: &[usize],
) -> Vec<usize> {
    let mut skip = vec![false; problem.n()];
    for &i in workset.iter().chain(screened) {
        skip[i] = true;
    }
    (0..problem.n())
        .filter(|&i| !skip[i] && node.status(i) != CoordStatus::Zero)
        .filter(|&i| {
            let v = dot(problem.column(i), u);
            !CoordTerms::of(problem, i)
                .relaxed_term_subdiff(node.status(i), x[i])
                .contains(v)
        })
        .collect()
}

/// Coordinates certified to vanish at every solution of the node relaxation,
/// split into fixed-nonzero and free coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Screened {
    pub zero_forced_nu1: Vec<usize>,
    pub zero_forced_free: Vec<usize>,
}

impl Screened {
    pub fn all(&self) -> impl Iterator<Item = usize> + '_ {
        self.zero_forced_nu1.iter().chain(&self.zero_forced_free).copied()
    }
}

const GAP_FLOOR: f64 = 1e-12;

/// Gap-safe sphere test. The dual optimum lies in the ball of center
/// `c = (u - grad f(Ax)) / 2` and radius
/// `r = sqrt(L gap - |u + grad f(Ax)|^2 / 4)`; coordinate `i` is screened when
/// the image interval `a_i^T c +/- r |a_i|` sits in the interior of the
/// relaxed term's subdifferential at zero.
pub fn screening(problem: &Problem, node: &Node, x: &[f64], u: &[f64]) -> Screened {
    let Some(lipschitz) = problem.loss().lipschitz() else {
        return Screened::default();
    };
    let ax = problem.data().apply(x);
    let mut grad = vec![0.0; problem.m()];
    problem.loss().gradient(&ax, &mut grad);
    let primal = relaxation_objective(problem, node.statuses(), x, &ax);
    let dual = dual_bound(problem, node, u);
    screen_with(problem, node.statuses(), u, &grad, primal - dual, lipschitz, |_| true)
}

fn screen_with(
    problem: &Problem,
    statuses: &[CoordStatus],
    u: &[f64],
    grad: &[f64],
    gap: f64,
    lipschitz: f64,
    consider: impl Fn(usize) -> bool,
) -> Screened {
    let mut out = Screened::default();
    if !gap.is_finite() {
        return out;
    }
    // a computed gap of zero is only zero up to rounding; without a floor a
    // coordinate sitting on the kink of its relaxed term can be screened
    let scale = u.iter().chain(grad).fold(1.0f64, |a, v| a.max(v.abs()));
    let gap = gap.max(GAP_FLOOR * scale * scale);
    let center: Vec<f64> = u.iter().zip(grad).map(|(ui, gi)| 0.5 * (ui - gi)).collect();
    let spread: f64 = u.iter().zip(grad).map(|(ui, gi)| (ui + gi).powi(2)).sum();
    let radius = (lipschitz * gap - 0.25 * spread).max(0.0).sqrt();
    for (i, &s) in statuses.iter().enumerate() {
        if s == CoordStatus::Zero || !consider(i) {
            continue;
        }
        let ci = dot(problem.column(i), &center);
        let ri = radius * problem.col_norm_sq(i).sqrt();
        let ball = Interval::new(ci - ri, ci + ri);
        let zero_subdiff = CoordTerms::of(problem, i).relaxed_term_subdiff(s, 0.0);
        if zero_subdiff.contains_open(&ball) {
            match s {
                CoordStatus::NonZero => out.zero_forced_nu1.push(i),
                CoordStatus::Free => out.zero_forced_free.push(i),
                CoordStatus::Zero => {}
            }
        }
    }
    out
}

/// Outcome of bounding a node from below.
#[derive(Clone, Debug)]
pub struct LowerBoundOutcome {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub lower_bound: f64,
    pub pruned: bool,
    pub fixations: Vec<Fixation>,
    pub workset: Vec<usize>,
    pub screened: Vec<usize>,
    pub outer_iterations: usize,
}

/// Seed working set: the `INITIAL_WORKSET` coordinates with the largest
/// `|a_i^T grad f(Ax)|`, plus any coordinate that is already nonzero.
fn seed_workset(problem: &Problem, node: &Node, state: &BoundingState) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = (0..problem.n())
        .filter(|&i| node.status(i) != CoordStatus::Zero)
        .map(|i| (dot(problem.column(i), &state.grad).abs(), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut ws: Vec<usize> = scored.iter().take(INITIAL_WORKSET).map(|&(_, i)| i).collect();
    ws.extend((0..problem.n()).filter(|&i| state.x[i] != 0.0));
    ws
}

/// Lower-bounds the node by the working-set method. The returned bound is the
/// best dual value seen; the node is reported pruned as soon as a certificate
/// exceeds the incumbent.
pub fn solve_lower_bound(
    problem: &Problem,
    node: &Node,
    opts: &SolverOptions,
    incumbent: f64,
) -> LowerBoundOutcome {
    let statuses = node.statuses();
    let n = problem.n();
    let mut state = BoundingState::new(problem, statuses, &node.x_warm, &node.workset);
    let mut initial: Vec<usize> = node.nu1();
    if node.workset.is_empty() {
        initial.extend(seed_workset(problem, node, &state));
    }
    state.extend_workset(initial);

    let lipschitz = problem.loss().lipschitz().filter(|_| opts.enable_screening);
    let mut screened = vec![false; n];
    let mut screened_list = Vec::new();
    let mut fixed: Vec<Option<Fixation>> = vec![None; n];
    let mut best = f64::NEG_INFINITY;
    let mut best_u = state.u.clone();
    let mut pruned = false;
    let mut outer = 0;
    let cutoff = if incumbent == f64::INFINITY {
        f64::INFINITY
    } else {
        incumbent - opts.rel_gap_tol * incumbent.abs().max(1.0)
    };

    loop {
        outer += 1;
        solve_restricted(&mut state, problem, statuses, opts.inner_tol, Some(cutoff));
        let dual = evaluate_dual(problem, statuses, &state.grad, None);
        state.dual_value = dual.value;
        state.u = dual.u.clone();
        if dual.value > best {
            best = dual.value;
            best_u = dual.u.clone();
        }
        if pruning_test(best, incumbent, opts.rel_gap_tol) {
            pruned = true;
            break;
        }
        if opts.enable_simultaneous_pruning && incumbent.is_finite() {
            match simultaneous_prune_corr(problem, node, &dual.corr, dual.value, incumbent, opts.rel_gap_tol) {
                SimultaneousPruning::NodePruned { bound } => {
                    best = best.max(bound);
                    pruned = true;
                    break;
                }
                SimultaneousPruning::Fixations(list) => {
                    for f in list {
                        fixed[f.index].get_or_insert(f);
                    }
                }
            }
        }
        let primal = relaxation_objective(problem, statuses, &state.x, &state.ax);
        state.gap = (primal - dual.value).max(0.0);
        if let Some(l) = lipschitz {
            let found = screen_with(
                problem,
                statuses,
                &dual.u,
                &state.grad,
                primal - dual.value,
                l,
                |i| !screened[i],
            );
            for i in found.all() {
                screened[i] = true;
                screened_list.push(i);
                state.remove_from_workset(problem, i);
            }
        }
        let neg_grad: Vec<f64> = state.grad.iter().map(|g| -g).collect();
        let violations = violation_set(problem, node, &state.x, &neg_grad, &state.workset, &screened_list);
        if violations.is_empty() || outer > n + 1 {
            break;
        }
        state.extend_workset(violations);
    }

    let mut fixations: Vec<Fixation> = fixed.into_iter().flatten().collect();
    fixations.sort_by_key(|f| f.index);
    LowerBoundOutcome {
        x: state.x,
        u: best_u,
        lower_bound: best,
        pruned,
        fixations,
        workset: state.workset,
        screened: screened_list,
        outer_iterations: outer,
    }
}

/// Solves the convex problem restricted to the support `nu1` (all other
/// coordinates held at zero) and returns the point with its exact
/// nonconvex objective, which is always a valid upper bound.
pub fn solve_upper_bound(problem: &Problem, node: &Node, opts: &SolverOptions) -> (Vec<f64>, f64) {
    let support = node.nu1();
    let n = problem.n();
    if support.is_empty() {
        let x = vec![0.0; n];
        let value = problem.objective(&x);
        return (x, value);
    }
    let mut statuses = vec![CoordStatus::Zero; n];
    for &i in &support {
        statuses[i] = CoordStatus::NonZero;
    }
    let mut state = BoundingState::new(problem, &statuses, &node.x_warm, &support);
    solve_restricted(&mut state, problem, &statuses, opts.inner_tol, None);
    let value = problem.objective(&state.x);
    (state.x, value)
}

/// Solves the node relaxation with a fixed working set of all non-fixed-zero
/// coordinates, without screening or pruning. Intended for verification.
pub fn solve_relaxation(problem: &Problem, node: &Node, tol: f64) -> (Vec<f64>, f64) {
    let all: Vec<usize> = (0..problem.n()).filter(|&i| node.status(i) != CoordStatus::Zero).collect();
    let mut state = BoundingState::new(problem, node.statuses(), &node.x_warm, &all);
    let dual = solve_restricted(&mut state, problem, node.statuses(), tol, None);
    (state.x, dual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::NativeLoss;
    use crate::penalties::NativePenalty;
    use ndarray::{array, Array2};
    use std::sync::Arc;

    fn one_dim() -> Problem {
        Problem::new(
            array![[1.0]],
            Arc::new(NativeLoss::least_squares(vec![1.0]).unwrap()),
            Arc::new(NativePenalty::L2norm { beta: 0.25 }),
            0.05,
        )
        .unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn all_fixed_to_zero_gives_objective_of_zero() {
        let p = one_dim();
        let node = Node::from_sets(1, &[0], &[]).unwrap();
        let out = solve_lower_bound(&p, &node, &opts(), f64::INFINITY);
        assert_eq!(out.x, vec![0.0]);
        assert!((out.lower_bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_bounds() {
        let p = one_dim();
        let root = Node::root(1);
        let out = solve_lower_bound(&p, &root, &opts(), f64::INFINITY);
        // optimum of the l0 problem: 1/6 + 0.05
        let p_star = 1.0 / 6.0 + 0.05;
        assert!(out.lower_bound <= p_star + 1e-12);
        let leaf = Node::from_sets(1, &[], &[0]).unwrap();
        let (x, ub) = solve_upper_bound(&p, &leaf, &opts());
        assert!((ub - p_star).abs() < 1e-6);
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-4);
        let (x0, ub0) = solve_upper_bound(&p, &root, &opts());
        assert_eq!(x0, vec![0.0]);
        assert_eq!(ub0, 0.5);
    }

    #[test]
    fn zero_dual_point_for_least_squares() {
        let p = one_dim();
        assert_eq!(dual_bound(&p, &Node::root(1), &[0.0]), 0.0);
    }

    #[test]
    fn cd_pass_keeps_zero_below_threshold() {
        // gradient at 0 is -a^T y = -0.1; tau = 0.5 for L1norm alpha = 0.5
        let p = Problem::new(
            array![[1.0]],
            Arc::new(NativeLoss::least_squares(vec![0.1]).unwrap()),
            Arc::new(NativePenalty::L1norm { alpha: 0.5 }),
            0.1,
        )
        .unwrap();
        let root = Node::root(1);
        let mut st = BoundingState::new(&p, root.statuses(), &[0.0], &[0]);
        coordinate_descent_pass(&mut st, &p, root.statuses());
        assert_eq!(st.x, vec![0.0]);
    }

    #[test]
    fn cd_pass_solves_orthonormal_least_squares_exactly() {
        let a = Array2::eye(3);
        let y = vec![1.0, -2.0, 0.5];
        let p = Problem::new(
            a,
            Arc::new(NativeLoss::least_squares(y.clone()).unwrap()),
            Arc::new(NativePenalty::L2norm { beta: 0.5 }),
            0.1,
        )
        .unwrap();
        let node = Node::from_sets(3, &[], &[0, 1, 2]).unwrap();
        let mut st = BoundingState::new(&p, node.statuses(), &[0.0; 3], &[0, 1, 2]);
        coordinate_descent_pass(&mut st, &p, node.statuses());
        for (xi, yi) in st.x.iter().zip(&y) {
            assert!((xi - yi / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn violation_set_uses_tau() {
        let p = Problem::new(
            Array2::eye(2),
            Arc::new(NativeLoss::least_squares(vec![1.0, 0.1]).unwrap()),
            Arc::new(NativePenalty::L1norm { alpha: 0.5 }),
            0.1,
        )
        .unwrap();
        let root = Node::root(2);
        // u = -grad f(0) = y
        let v = violation_set(&p, &root, &[0.0, 0.0], &[1.0, 0.1], &[], &[]);
        assert_eq!(v, vec![0]);
        let v = violation_set(&p, &root, &[0.0, 0.0], &[1.0, 0.1], &[0], &[]);
        assert!(v.is_empty());
    }

    #[test]
    fn zero_radius_screening_is_strict_membership() {
        let p = Problem::new(
            Array2::eye(2),
            Arc::new(NativeLoss::least_squares(vec![0.2, 3.0]).unwrap()),
            Arc::new(NativePenalty::L1norm { alpha: 0.5 }),
            0.1,
        )
        .unwrap();
        let root = Node::root(2);
        // exact relaxation solution: x = (0, 2.5), u = y - x = (0.2, 0.5)
        let x = [0.0, 2.5];
        let u = [0.2, 0.5];
        assert!(relaxation_gap(&p, &root, &x, &u) < 1e-12);
        let s = screening(&p, &root, &x, &u);
        assert_eq!(s.zero_forced_free, vec![0]);
        assert!(s.zero_forced_nu1.is_empty());
    }

    #[test]
    fn relaxation_gap_at_trivial_points() {
        let p = one_dim();
        let g = relaxation_gap(&p, &Node::root(1), &[0.0], &[0.0]);
        assert_eq!(g, 0.5);
    }
}
