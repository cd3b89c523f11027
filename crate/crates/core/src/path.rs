//! Regularization paths: lambda_max, log-spaced lambda grids solved with warm
//! starts, and BIC model selection.

use std::sync::Arc;

use log::warn;

use crate::bnb::solve_with;
use crate::error::{Error, Result};
use crate::penalties::compute_params;
use crate::problem::{Problem, ProblemData, SolveResult, SolverOptions};

const BISECTION_ITERS: usize = 60;
const BISECTION_RTOL: f64 = 1e-12;
/// The certificate is abandoned beyond this multiple of the fallback value.
const CERTIFICATE_SEARCH_FACTOR: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct PathSpec {
    pub lmbd_ratio_max: f64,
    pub lmbd_ratio_min: f64,
    pub lmbd_num: usize,
    /// Absolute lambda values; replaces the ratio grid when set.
    pub explicit_grid: Option<Vec<f64>>,
}

impl Default for PathSpec {
    fn default() -> Self {
        Self {
            lmbd_ratio_max: 1.0,
            lmbd_ratio_min: 0.01,
            lmbd_num: 20,
            explicit_grid: None,
        }
    }
}

impl PathSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(grid) = &self.explicit_grid {
            if grid.is_empty() {
                return Err(Error::InvalidOptions("explicit lambda grid is empty".into()));
            }
            if let Some(bad) = grid.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
                return Err(Error::NonPositiveLambda(*bad));
            }
            return Ok(());
        }
        if !(self.lmbd_ratio_max > 0.0 && self.lmbd_ratio_max <= 1.0) {
            return Err(Error::InvalidOptions(format!(
                "lmbd_ratio_max must be in (0, 1], got {}",
                self.lmbd_ratio_max
            )));
        }
        if !(self.lmbd_ratio_min > 0.0 && self.lmbd_ratio_min < self.lmbd_ratio_max) {
            return Err(Error::InvalidOptions(format!(
                "lmbd_ratio_min must be in (0, lmbd_ratio_max), got {}",
                self.lmbd_ratio_min
            )));
        }
        if self.lmbd_num == 0 {
            return Err(Error::InvalidOptions("lmbd_num must be at least 1".into()));
        }
        Ok(())
    }

    /// Ratios spaced logarithmically from `lmbd_ratio_max` down to `lmbd_ratio_min`.
    pub fn ratios(&self) -> Vec<f64> {
        let num = self.lmbd_num;
        if num == 1 {
            return vec![self.lmbd_ratio_max];
        }
        let (a, b) = (self.lmbd_ratio_max.ln(), self.lmbd_ratio_min.ln());
        (0..num)
            .map(|t| {
                if t == 0 {
                    self.lmbd_ratio_max
                } else if t == num - 1 {
                    self.lmbd_ratio_min
                } else {
                    (a + (b - a) * t as f64 / (num - 1) as f64).exp()
                }
            })
            .collect()
    }

    /// Grid in solve order (strictly decreasing).
    pub fn grid(&self, lmbd_max: f64) -> Vec<f64> {
        let mut grid = match &self.explicit_grid {
            Some(g) => g.clone(),
            None => self.ratios().into_iter().map(|r| lmbd_max * r).collect(),
        };
        grid.sort_by(|a, b| b.total_cmp(a));
        grid.dedup();
        grid
    }
}

#[derive(Clone, Debug)]
pub struct PathEntry {
    pub lmbd: f64,
    pub result: SolveResult,
}

#[derive(Clone, Debug)]
pub struct PathResult {
    pub lmbd_max: f64,
    /// Entries in solve order, lambda strictly decreasing.
    pub entries: Vec<PathEntry>,
}

/// `-a_i^T grad f(0)` for every column.
fn zero_correlations(data: &ProblemData) -> Result<Vec<f64>> {
    let zero = vec![0.0; data.m()];
    let grad = crate::losses::loss_gradient(data.loss(), &zero)?;
    Ok(data.apply_transpose(&grad).into_iter().map(|v| -v).collect())
}

/// `true` when zero solves the root relaxation at `lmbd`.
fn certificate_holds(data: &ProblemData, corr: &[f64], lmbd: f64) -> Result<bool> {
    for (i, &v) in corr.iter().enumerate() {
        let p = compute_params(data.penalty(), i, lmbd)?;
        if v > p.tau_pos || v < p.tau_neg {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest-known lambda above which the zero vector is optimal.
///
/// First tries a bisection for the root-relaxation certificate
/// `tau_neg(l) <= -a_i^T grad f(0) <= tau_pos(l)`; when it cannot hold, falls
/// back to `f(0) - inf f`.
pub fn lambda_max(data: &ProblemData) -> Result<f64> {
    let corr = zero_correlations(data)?;
    if corr.iter().all(|&v| v == 0.0) {
        warn!("zero is stationary for the loss; every positive lambda gives the zero solution");
        return Ok(f64::MIN_POSITIVE);
    }
    let inf_f = match data.loss().infimum() {
        Some(v) => v,
        None => {
            warn!("loss does not declare its infimum; using 0");
            0.0
        }
    };
    let f0 = data.loss().value(&vec![0.0; data.m()]);
    let fallback = (f0 - inf_f).max(f64::MIN_POSITIVE);

    let limit = CERTIFICATE_SEARCH_FACTOR * fallback;
    let mut hi = fallback;
    let mut lo = 0.0;
    while !certificate_holds(data, &corr, hi)? {
        if hi > limit {
            return Ok(fallback);
        }
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= BISECTION_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if certificate_holds(data, &corr, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Solves the problem on the lambda grid, largest lambda first, seeding each
/// solve with the previous solution as incumbent.
pub fn fit_path(data: &Arc<ProblemData>, spec: &PathSpec, opts: &SolverOptions) -> Result<PathResult> {
    spec.validate()?;
    let lmbd_max = lambda_max(data)?;
    let mut entries: Vec<PathEntry> = Vec::new();
    for lmbd in spec.grid(lmbd_max) {
        let problem = Problem::from_data(Arc::clone(data), lmbd)?;
        let warm = entries.last().map(|e| e.result.x_opt.to_dense());
        let result = solve_with(&problem, opts, warm.as_deref(), None)?;
        entries.push(PathEntry { lmbd, result });
    }
    Ok(PathResult { lmbd_max, entries })
}

/// Bayesian information criterion `2 m f(Ax) + log(m) |x|_0`.
pub fn bic(data: &ProblemData, x: &[f64]) -> f64 {
    let m = data.m() as f64;
    let w = data.apply(x);
    let nnz = x.iter().filter(|v| **v != 0.0).count() as f64;
    2.0 * m * data.loss().value(&w) + m.ln() * nnz
}

/// Entry of lowest BIC; ties go to the larger lambda.
pub fn select_by_bic<'a>(path: &'a PathResult, data: &ProblemData) -> Option<(f64, &'a PathEntry)> {
    let mut order: Vec<&PathEntry> = path.entries.iter().collect();
    order.sort_by(|a, b| b.lmbd.total_cmp(&a.lmbd));
    let mut best: Option<(f64, &PathEntry)> = None;
    for e in order {
        let score = bic(data, &e.result.x_opt.to_dense());
        if best.map_or(true, |(s, _)| score < s) {
            best = Some((score, e));
        }
    }
    best.map(|(_, e)| (e.lmbd, e))
}
