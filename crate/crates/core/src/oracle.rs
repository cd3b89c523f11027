//! Reference solver by exhaustive support enumeration, for verification at
//! small dimension.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::problem::{Problem, SolveResult, SparseVector, Status};

/// Hard cap on the dimension the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 20;

const MAX_SWEEPS: usize = 200_000;
const MAX_BACKTRACKS: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub max_dim: usize,
    pub inner_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_dim: 12,
            inner_tol: 1e-10,
        }
    }
}

impl OracleOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_dim == 0 || self.max_dim > MAX_ORACLE_DIM {
            return Err(Error::InvalidOptions(format!(
                "max_dim must be in [1, {MAX_ORACLE_DIM}], got {}",
                self.max_dim
            )));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidOptions("inner_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Minimizes `f(A_S x_S) + sum_{i in S} h(x_i)` with every coordinate outside
/// `support` held at zero. Uses cyclic proximal coordinate descent with a
/// backtracked step on each coordinate; stops when the largest
/// gradient-mapping component over a sweep drops below `tol`, or when the
/// duality gap drops below `tol * max(1, |objective|)`.
///
/// Returns the minimizer and the convex objective value (without the `l0` term).
pub fn restricted_solve(problem: &Problem, support: &[usize], tol: f64) -> (Vec<f64>, f64) {
    let n = problem.n();
    let loss = problem.loss();
    let pen = problem.penalty();
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; problem.m()];
    let mut grad = vec![0.0; problem.m()];
    let convex_value = |x: &[f64], w: &[f64]| -> f64 {
        loss.value(w) + support.iter().map(|&i| pen.value(i, x[i])).sum::<f64>()
    };
    let mut steps: Vec<f64> = support
        .iter()
        .map(|&i| {
            let nrm = problem.col_norm_sq(i);
            if nrm > 0.0 {
                1.0 / nrm
            } else {
                1.0
            }
        })
        .collect();
    let mut trial = vec![0.0; problem.m()];
    let lipschitz = loss.lipschitz().filter(|l| *l > 0.0);
    for _ in 0..MAX_SWEEPS {
        let mut residual: f64 = 0.0;
        for (k, &i) in support.iter().enumerate() {
            let col = problem.column(i);
            let xi = x[i];
            if problem.col_norm_sq(i) == 0.0 {
                // the loss ignores x_i: minimize h alone
                let p = pen.prox(i, 0.0, 1.0);
                residual = residual.max((p - xi).abs());
                for (t, &a) in w.iter_mut().zip(col) {
                    *t += (p - xi) * a;
                }
                x[i] = p;
                continue;
            }
            loss.gradient(&w, &mut grad);
            let gi: f64 = col.iter().zip(&grad).map(|(a, g)| a * g).sum();
            let p = match lipschitz {
                Some(l) => pen.prox(i, xi - gi / (l * problem.col_norm_sq(i)), 1.0 / (l * problem.col_norm_sq(i))),
                None => match backtrack(problem, i, xi, gi, &w, &mut trial, &mut steps[k]) {
                    Some(p) => p,
                    None => continue,
                },
            };
            let d = p - xi;
            if d != 0.0 {
                let eta = match lipschitz {
                    Some(l) => 1.0 / (l * problem.col_norm_sq(i)),
                    None => steps[k],
                };
                residual = residual.max(d.abs() / eta);
                for (t, &a) in w.iter_mut().zip(col) {
                    *t += d * a;
                }
                x[i] = p;
            }
        }
        if residual <= tol || restricted_gap(problem, support, &x, &w) <= tol * tol * convex_value(&x, &w).abs().max(1.0) {
            break;
        }
    }
    // recompute the product from scratch to avoid drift
    w = problem.data().apply(&x);
    let value = convex_value(&x, &w);
    (x, value)
}

/// Backtracked proximal step on coordinate `i` for losses without a known
/// Lipschitz constant. The step is accepted when the average curvature of
/// the loss along the move is at most `1 / (2 eta)`, which for a convex loss
/// implies the quadratic upper model; the test uses gradients only, so it
/// stays accurate for tiny moves. Returns `None` when no step is accepted.
fn backtrack(
    problem: &Problem,
    i: usize,
    xi: f64,
    gi: f64,
    w: &[f64],
    trial: &mut [f64],
    step: &mut f64,
) -> Option<f64> {
    let loss = problem.loss();
    let col = problem.column(i);
    let mut g1 = vec![0.0; w.len()];
    let mut eta = 2.0 * *step;
    for _ in 0..MAX_BACKTRACKS {
        let p = problem.penalty().prox(i, xi - eta * gi, eta);
        let d = p - xi;
        if d == 0.0 {
            return Some(p);
        }
        for ((t, &base), &a) in trial.iter_mut().zip(w).zip(col) {
            *t = base + d * a;
        }
        if loss.value(trial).is_finite() {
            loss.gradient(trial, &mut g1);
            let gi1: f64 = col.iter().zip(&g1).map(|(a, g)| a * g).sum();
            if (gi1 - gi) * d <= d * d / (2.0 * eta) {
                *step = eta;
                return Some(p);
            }
        }
        eta *= 0.5;
    }
    None
}

/// Duality gap of the restricted problem at `x` (with `w = A x`), using the
/// dual point `-grad f(w)` shrunk into the domain of the conjugate terms.
pub fn restricted_gap(problem: &Problem, support: &[usize], x: &[f64], w: &[f64]) -> f64 {
    let loss = problem.loss();
    let pen = problem.penalty();
    let mut grad = vec![0.0; w.len()];
    loss.gradient(w, &mut grad);
    let corr: Vec<f64> = support
        .iter()
        .map(|&i| -problem.column(i).iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>())
        .collect();
    let mut scale: f64 = 1.0;
    for (&i, &v) in support.iter().zip(&corr) {
        let dom = pen.conjugate_domain(i);
        if v > dom.hi() {
            scale = scale.min(dom.hi() / v);
        } else if v < dom.lo() {
            scale = scale.min(dom.lo() / v);
        }
    }
    let scale = scale.max(0.0);
    let neg_u: Vec<f64> = grad.iter().map(|g| scale * g).collect();
    let mut dual = -loss.conjugate(&neg_u);
    for (&i, &v) in support.iter().zip(&corr) {
        dual -= pen.conjugate(i, scale * v);
    }
    let primal = loss.value(w) + support.iter().map(|&i| pen.value(i, x[i])).sum::<f64>();
    let gap = primal - dual;
    if gap.is_nan() {
        f64::INFINITY
    } else {
        gap
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < n - k + pos {
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact solution of the problem by enumerating all supports in increasing
/// cardinality (lexicographic within a cardinality). Cardinalities `k` with
/// `inf f + lmbd k` above the best value found are skipped.
pub fn brute_force_solve(problem: &Problem, opts: &OracleOptions) -> Result<SolveResult> {
    opts.validate()?;
    let n = problem.n();
    if n > opts.max_dim {
        return Err(Error::DimensionExceeded { n, max: opts.max_dim });
    }
    let start = Instant::now();
    let inf_f = problem.loss().infimum().unwrap_or(0.0);
    let lmbd = problem.lmbd();
    let mut best_x = vec![0.0; n];
    let mut best = problem.objective(&best_x);
    let mut count: u64 = 1;
    for k in 1..=n {
        if inf_f + lmbd * k as f64 > best {
            break;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            count += 1;
            let (x, value) = restricted_solve(problem, &idx, opts.inner_tol);
            let total = value + lmbd * k as f64;
            if total < best {
                let exact = problem.objective(&x);
                best = exact.min(total);
                best_x = x;
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    let objective = problem.objective(&best_x);
    Ok(SolveResult {
        status: Status::Optimal,
        x_opt: SparseVector::from_dense(&best_x),
        objective,
        lower_bound: objective,
        rel_gap: 0.0,
        node_count: count,
        solve_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::NativeLoss;
    use crate::penalties::NativePenalty;
    use ndarray::array;
    use std::sync::Arc;

    #[test]
    fn scalar_l2norm_example() {
        let p = Problem::new(
            array![[1.0]],
            Arc::new(NativeLoss::least_squares(vec![1.0]).unwrap()),
            Arc::new(NativePenalty::L2norm { beta: 0.25 }),
            0.05,
        )
        .unwrap();
        let r = brute_force_solve(&p, &OracleOptions::default()).unwrap();
        assert!((r.objective - (1.0 / 6.0 + 0.05)).abs() < 1e-10);
        let x = r.x_opt.to_dense();
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn large_lambda_gives_empty_support() {
        let p = Problem::new(
            array![[1.0, 0.5], [0.0, 1.0]],
            Arc::new(NativeLoss::least_squares(vec![1.0, -1.0]).unwrap()),
            Arc::new(NativePenalty::L2norm { beta: 0.1 }),
            2.0,
        )
        .unwrap();
        let r = brute_force_solve(&p, &OracleOptions::default()).unwrap();
        assert_eq!(r.x_opt.nnz(), 0);
        assert_eq!(r.objective, 1.0);
    }

    #[test]
    fn dimension_guard() {
        let p = Problem::new(
            ndarray::Array2::eye(3),
            Arc::new(NativeLoss::least_squares(vec![1.0; 3]).unwrap()),
            Arc::new(NativePenalty::L2norm { beta: 0.1 }),
            0.1,
        )
        .unwrap();
        let opts = OracleOptions {
            max_dim: 2,
            ..Default::default()
        };
        assert!(matches!(brute_force_solve(&p, &opts), Err(Error::DimensionExceeded { n: 3, max: 2 })));
        let bad = OracleOptions {
            max_dim: 21,
            ..Default::default()
        };
        assert!(brute_force_solve(&p, &bad).is_err());
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn restricted_solve_meets_first_order_conditions() {
        let p = Problem::new(
            array![[1.0, 0.3], [0.2, 1.0], [0.5, -0.4]],
            Arc::new(NativeLoss::logistic(vec![1.0, -1.0, 1.0]).unwrap()),
            Arc::new(NativePenalty::L1L2norm { alpha: 0.1, beta: 0.2 }),
            0.1,
        )
        .unwrap();
        let (x, _) = restricted_solve(&p, &[0, 1], 1e-12);
        let w = p.data().apply(&x);
        let mut g = vec![0.0; 3];
        p.loss().gradient(&w, &mut g);
        for i in 0..2 {
            let gi: f64 = p.column(i).iter().zip(&g).map(|(a, b)| a * b).sum();
            let sub = p.penalty().subdiff(i, x[i]);
            assert!(sub.distance(-gi) < 1e-9, "coordinate {i}: {:?} vs {}", sub, -gi);
        }
    }
}
