//! Problem instances, solver options, search-tree nodes and results.

use std::sync::Arc;
use std::time::Duration;

use ndarray::{Array2, ArrayView2, ShapeBuilder};

use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::penalties::{compute_params, Penalty, PenaltyParams};
use crate::relaxation::CoordStatus;

/// The data part of an instance: design matrix, loss and penalty.
/// The l0 weight is attached separately by [`Problem`].
#[derive(Debug)]
pub struct ProblemData {
    // column-major so that columns are contiguous slices
    cols: Vec<f64>,
    m: usize,
    n: usize,
    col_norms_sq: Vec<f64>,
    loss: Arc<dyn Loss>,
    penalty: Arc<dyn Penalty>,
    symmetric: bool,
}

impl ProblemData {
    /// Validates dimensions and the basic function assumptions.
    pub fn new(a: Array2<f64>, loss: Arc<dyn Loss>, penalty: Arc<dyn Penalty>) -> Result<Self> {
        let (m, n) = a.dim();
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch(format!("matrix is {m}x{n}")));
        }
        if loss.dim() != m {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {m} rows but the loss expects vectors of length {}",
                loss.dim()
            )));
        }
        if let Some(((row, col), _)) = a.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteMatrix { row, col });
        }
        let zeros = vec![0.0; m];
        if !loss.value(&zeros).is_finite() {
            return Err(Error::InvalidLoss("the origin is outside the loss domain".into()));
        }
        for i in 0..n {
            let h0 = penalty.value(i, 0.0);
            if h0 != 0.0 {
                return Err(Error::InvalidPenalty(format!(
                    "h(0) must be 0, got {h0} at coordinate {i}"
                )));
            }
        }
        let cols: Vec<f64> = a.t().iter().copied().collect();
        let col_norms_sq = cols.chunks_exact(m).map(|c| dot(c, c)).collect();
        let symmetric = penalty.is_symmetric();
        Ok(Self {
            cols,
            m,
            n,
            col_norms_sq,
            loss,
            penalty,
            symmetric,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.m, self.n).f(), &self.cols).expect("column-major storage")
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let start = i * self.m();
        &self.cols[start..start + self.m]
    }

    pub fn col_norm_sq(&self, i: usize) -> f64 {
        self.col_norms_sq[i]
    }

    pub fn loss(&self) -> &dyn Loss {
        self.loss.as_ref()
    }

    pub fn penalty(&self) -> &dyn Penalty {
        self.penalty.as_ref()
    }

    /// Whether the penalty is even, selecting the symmetric parameter path.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.m()];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.column(i), &mut w);
            }
        }
        w
    }

    /// `A^T u`.
    pub fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| dot(self.column(i), u)).collect()
    }
}

/// Four partial sums so the loop vectorizes.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// A validated instance `min_x f(Ax) + lmbd |x|_0 + sum_i h(x_i)`.
#[derive(Clone, Debug)]
pub struct Problem {
    data: Arc<ProblemData>,
    lmbd: f64,
    params: Arc<Vec<PenaltyParams>>,
}

impl Problem {
    pub fn new(
        a: Array2<f64>,
        loss: Arc<dyn Loss>,
        penalty: Arc<dyn Penalty>,
        lmbd: f64,
    ) -> Result<Self> {
        Self::from_data(Arc::new(ProblemData::new(a, loss, penalty)?), lmbd)
    }

    pub fn from_data(data: Arc<ProblemData>, lmbd: f64) -> Result<Self> {
        if !(lmbd > 0.0 && lmbd.is_finite()) {
            return Err(Error::NonPositiveLambda(lmbd));
        }
        let params = (0..data.n())
            .map(|i| compute_params(data.penalty(), i, lmbd))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            data,
            lmbd,
            params: Arc::new(params),
        })
    }

    /// Same data, different l0 weight.
    pub fn with_lambda(&self, lmbd: f64) -> Result<Self> {
        Self::from_data(Arc::clone(&self.data), lmbd)
    }

    pub fn data(&self) -> &Arc<ProblemData> {
        &self.data
    }

    pub fn lmbd(&self) -> f64 {
        self.lmbd
    }

    pub fn m(&self) -> usize {
        self.data.m()
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        self.data.column(i)
    }

    pub fn col_norm_sq(&self, i: usize) -> f64 {
        self.data.col_norm_sq(i)
    }

    pub fn loss(&self) -> &dyn Loss {
        self.data.loss()
    }

    pub fn penalty(&self) -> &dyn Penalty {
        self.data.penalty()
    }

    pub fn params(&self, i: usize) -> &PenaltyParams {
        &self.params[i]
    }

    pub fn is_symmetric(&self) -> bool {
        self.data.is_symmetric()
    }

    /// Exact objective `f(Ax) + lmbd |x|_0 + sum_i h(x_i)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let w = self.data.apply(x);
        self.objective_with_product(x, &w)
    }

    /// Objective given a precomputed `w = Ax`.
    pub fn objective_with_product(&self, x: &[f64], w: &[f64]) -> f64 {
        let pen = self.penalty();
        let mut reg = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                reg += self.lmbd + pen.value(i, xi);
            }
        }
        self.loss().value(w) + reg
    }
}

/// Search order for open nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exploration {
    #[default]
    BestFirst,
    DepthFirst,
    BreadthFirst,
}

impl std::str::FromStr for Exploration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best-first" => Ok(Self::BestFirst),
            "depth-first" => Ok(Self::DepthFirst),
            "breadth-first" => Ok(Self::BreadthFirst),
            other => Err(Error::InvalidOptions(format!(
                "unknown exploration '{other}', expected best-first, depth-first or breadth-first"
            ))),
        }
    }
}

impl std::fmt::Display for Exploration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::BestFirst => "best-first",
            Self::DepthFirst => "depth-first",
            Self::BreadthFirst => "breadth-first",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub rel_gap_tol: f64,
    pub inner_tol: f64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    pub exploration: Exploration,
    pub enable_simultaneous_pruning: bool,
    pub enable_screening: bool,
    pub workers: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_gap_tol: 1e-8,
            inner_tol: 1e-8,
            node_limit: None,
            time_limit: None,
            exploration: Exploration::BestFirst,
            enable_simultaneous_pruning: true,
            enable_screening: true,
            workers: 1,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_gap_tol >= 0.0) {
            return Err(Error::InvalidOptions(format!(
                "rel_gap_tol must be nonnegative, got {}",
                self.rel_gap_tol
            )));
        }
        if !(self.inner_tol >= 0.0) {
            return Err(Error::InvalidOptions(format!(
                "inner_tol must be nonnegative, got {}",
                self.inner_tol
            )));
        }
        if self.node_limit == Some(0) {
            return Err(Error::InvalidOptions("node_limit must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidOptions("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// One region of the search tree: coordinates fixed to zero, fixed nonzero,
/// or free, plus warm-start information inherited from the parent.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    status: Vec<CoordStatus>,
    pub x_warm: Vec<f64>,
    pub workset: Vec<usize>,
    pub lower_bound: f64,
    pub depth: usize,
}

impl Node {
    /// The root: everything free, zero warm start.
    pub fn root(n: usize) -> Self {
        Self {
            status: vec![CoordStatus::Free; n],
            x_warm: vec![0.0; n],
            workset: Vec::new(),
            lower_bound: f64::NEG_INFINITY,
            depth: 0,
        }
    }

    /// Builds a node from explicit index sets.
    pub fn from_sets(n: usize, nu0: &[usize], nu1: &[usize]) -> Result<Self> {
        let mut node = Self::root(n);
        for &i in nu0 {
            if i >= n {
                return Err(Error::DimensionMismatch(format!("index {i} out of range")));
            }
            node.status[i] = CoordStatus::Zero;
        }
        for &i in nu1 {
            if i >= n {
                return Err(Error::DimensionMismatch(format!("index {i} out of range")));
            }
            if node.status[i] == CoordStatus::Zero {
                return Err(Error::InvalidOptions(format!(
                    "index {i} cannot be fixed both to zero and nonzero"
                )));
            }
            node.status[i] = CoordStatus::NonZero;
        }
        Ok(node)
    }

    pub fn n(&self) -> usize {
        self.status.len()
    }

    pub fn status(&self, i: usize) -> CoordStatus {
        self.status[i]
    }

    pub fn statuses(&self) -> &[CoordStatus] {
        &self.status
    }

    fn indices_with(&self, s: CoordStatus) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.status[i] == s).collect()
    }

    pub fn nu0(&self) -> Vec<usize> {
        self.indices_with(CoordStatus::Zero)
    }

    pub fn nu1(&self) -> Vec<usize> {
        self.indices_with(CoordStatus::NonZero)
    }

    pub fn free(&self) -> Vec<usize> {
        self.indices_with(CoordStatus::Free)
    }

    pub fn has_free(&self) -> bool {
        self.status.iter().any(|&s| s == CoordStatus::Free)
    }

    /// Fixes coordinate `i` to zero, zeroing its warm start and dropping it
    /// from the working set.
    pub fn fix_zero(&mut self, i: usize) {
        self.status[i] = CoordStatus::Zero;
        self.x_warm[i] = 0.0;
        self.workset.retain(|&j| j != i);
    }

    pub fn fix_nonzero(&mut self, i: usize) {
        self.status[i] = CoordStatus::NonZero;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    NodeLimit,
    TimeLimit,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::NodeLimit => "node_limit",
            Self::TimeLimit => "time_limit",
        })
    }
}

/// Index/value pairs of the nonzero entries of a vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    pub n: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn from_dense(x: &[f64]) -> Self {
        let (indices, values) = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        Self {
            n: x.len(),
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub x_opt: SparseVector,
    pub objective: f64,
    pub lower_bound: f64,
    pub rel_gap: f64,
    pub node_count: u64,
    pub solve_time: Duration,
}
