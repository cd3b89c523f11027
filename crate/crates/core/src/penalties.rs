//! Scalar penalty functions `h` and the quantities `(tau, mu, kappa)` that
//! drive every closed form of the l0 relaxation.
//!
//! All native penalties are instances of
//! `h(x) = alpha |x| + beta x^2 + indicator_[lo, hi](x)` with `lo <= 0 < hi`,
//! so a single set of closed forms serves the whole catalogue. Custom
//! penalties implement [`Penalty`]; their parameters fall back to bisection
//! on `h*` and to subdifferential evaluation.

use std::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;

const INF: f64 = f64::INFINITY;

/// A closed, convex, coercive function with `h(x) >= h(0) = 0`, applied
/// coordinate-wise. The index argument allows coordinate-dependent penalties.
pub trait Penalty: Send + Sync + fmt::Debug {
    fn value(&self, i: usize, x: f64) -> f64;

    /// `h*(v) = sup_x v x - h(x)`.
    fn conjugate(&self, i: usize, v: f64) -> f64;

    /// `argmin_x 0.5 (x - v)^2 + eta h(x)`.
    fn prox(&self, i: usize, v: f64, eta: f64) -> f64;

    fn subdiff(&self, i: usize, x: f64) -> Interval;

    fn conjugate_subdiff(&self, i: usize, v: f64) -> Interval;

    /// Whether `h` is even. Selects the symmetric parameter path.
    fn is_symmetric(&self) -> bool {
        false
    }

    /// Closure of `dom h*`. The default (whole line) is always safe: it only
    /// disables dual-point rescaling.
    fn conjugate_domain(&self, _i: usize) -> Interval {
        Interval::REAL_LINE
    }

    /// Closed-form `(tau_neg, tau_pos)`, if known.
    fn param_slope(&self, _i: usize, _lmbd: f64) -> Option<(f64, f64)> {
        None
    }

    /// Closed-form `(mu_neg, mu_pos)`, if known.
    fn param_limit(&self, _i: usize, _lmbd: f64) -> Option<(f64, f64)> {
        None
    }

    /// Closed-form `(kappa_neg, kappa_pos)`, if known.
    fn param_bndry(&self, _i: usize, _lmbd: f64) -> Option<(f64, f64)> {
        None
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// Slopes, breakpoints and boundary slopes of the convex envelope of
/// `h + lambda |.|_0`, one triple per half-line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyParams {
    pub tau_neg: f64,
    pub tau_pos: f64,
    pub mu_neg: f64,
    pub mu_pos: f64,
    pub kappa_neg: f64,
    pub kappa_pos: f64,
}

impl PenaltyParams {
    pub fn is_symmetric(&self) -> bool {
        self.tau_neg == -self.tau_pos
            && self.mu_neg == -self.mu_pos
            && self.kappa_neg == -self.kappa_pos
    }
}

/// The native penalty catalogue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NativePenalty {
    Bigm { m: f64 },
    BigmL1norm { m: f64, alpha: f64 },
    BigmL2norm { m: f64, beta: f64 },
    BigmPositiveL1norm { m: f64, alpha: f64 },
    BigmPositiveL2norm { m: f64, beta: f64 },
    Bounds { x_lb: f64, x_ub: f64 },
    L1L2norm { alpha: f64, beta: f64 },
    L1norm { alpha: f64 },
    L2norm { beta: f64 },
    PositiveL1norm { alpha: f64 },
    PositiveL2norm { beta: f64 },
}

pub const NATIVE_PENALTY_NAMES: [&str; 11] = [
    "Bigm",
    "BigmL1norm",
    "BigmL2norm",
    "BigmPositiveL1norm",
    "BigmPositiveL2norm",
    "Bounds",
    "L1L2norm",
    "L1norm",
    "L2norm",
    "PositiveL1norm",
    "PositiveL2norm",
];

/// Named scalar parameters as they appear in instance files.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PenaltyArgs {
    pub m: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub x_lb: Option<f64>,
    pub x_ub: Option<f64>,
}

/// `alpha |x| + beta x^2 + indicator_[lo, hi](x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Shape {
    alpha: f64,
    beta: f64,
    lo: f64,
    hi: f64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidPenalty(format!(
            "parameter {name} must be positive and finite, got {v}"
        )))
    }
}

impl NativePenalty {
    /// Validates parameters and builds the penalty.
    pub fn new(self) -> Result<Self> {
        use NativePenalty::*;
        match self {
            Bigm { m } => {
                positive("M", m)?;
            }
            BigmL1norm { m, alpha } | BigmPositiveL1norm { m, alpha } => {
                positive("M", m)?;
                positive("alpha", alpha)?;
            }
            BigmL2norm { m, beta } | BigmPositiveL2norm { m, beta } => {
                positive("M", m)?;
                positive("beta", beta)?;
            }
            Bounds { x_lb, x_ub } => {
                if !(x_lb <= 0.0 && x_lb.is_finite()) {
                    return Err(Error::InvalidPenalty(format!(
                        "x_lb must be nonpositive and finite, got {x_lb}"
                    )));
                }
                positive("x_ub", x_ub)?;
            }
            L1L2norm { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)?;
            }
            L1norm { alpha } | PositiveL1norm { alpha } => {
                positive("alpha", alpha)?;
            }
            L2norm { beta } | PositiveL2norm { beta } => {
                positive("beta", beta)?;
            }
        }
        Ok(self)
    }

    pub fn from_name(name: &str, args: &PenaltyArgs) -> Result<Self> {
        let need = |key: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::InvalidPenalty(format!("{name} requires parameter {key}")))
        };
        use NativePenalty::*;
        let pen = match name {
            "Bigm" => Bigm { m: need("M", args.m)? },
            "BigmL1norm" => BigmL1norm {
                m: need("M", args.m)?,
                alpha: need("alpha", args.alpha)?,
            },
            "BigmL2norm" => BigmL2norm {
                m: need("M", args.m)?,
                beta: need("beta", args.beta)?,
            },
            "BigmPositiveL1norm" => BigmPositiveL1norm {
                m: need("M", args.m)?,
                alpha: need("alpha", args.alpha)?,
            },
            "BigmPositiveL2norm" => BigmPositiveL2norm {
                m: need("M", args.m)?,
                beta: need("beta", args.beta)?,
            },
            "Bounds" => Bounds {
                x_lb: need("x_lb", args.x_lb)?,
                x_ub: need("x_ub", args.x_ub)?,
            },
            "L1L2norm" => L1L2norm {
                alpha: need("alpha", args.alpha)?,
                beta: need("beta", args.beta)?,
            },
            "L1norm" => L1norm {
                alpha: need("alpha", args.alpha)?,
            },
            "L2norm" => L2norm {
                beta: need("beta", args.beta)?,
            },
            "PositiveL1norm" => PositiveL1norm {
                alpha: need("alpha", args.alpha)?,
            },
            "PositiveL2norm" => PositiveL2norm {
                beta: need("beta", args.beta)?,
            },
            other => {
                return Err(Error::InvalidPenalty(format!(
                    "unknown penalty '{other}', expected one of: {}",
                    NATIVE_PENALTY_NAMES.join(", ")
                )))
            }
        };
        pen.new()
    }

    pub fn args(&self) -> PenaltyArgs {
        use NativePenalty::*;
        let mut a = PenaltyArgs::default();
        match *self {
            Bigm { m } => a.m = Some(m),
            BigmL1norm { m, alpha } | BigmPositiveL1norm { m, alpha } => {
                a.m = Some(m);
                a.alpha = Some(alpha);
            }
            BigmL2norm { m, beta } | BigmPositiveL2norm { m, beta } => {
                a.m = Some(m);
                a.beta = Some(beta);
            }
            Bounds { x_lb, x_ub } => {
                a.x_lb = Some(x_lb);
                a.x_ub = Some(x_ub);
            }
            L1L2norm { alpha, beta } => {
                a.alpha = Some(alpha);
                a.beta = Some(beta);
            }
            L1norm { alpha } | PositiveL1norm { alpha } => a.alpha = Some(alpha),
            L2norm { beta } | PositiveL2norm { beta } => a.beta = Some(beta),
        }
        a
    }

    fn shape(&self) -> Shape {
        use NativePenalty::*;
        let (alpha, beta, lo, hi) = match *self {
            Bigm { m } => (0.0, 0.0, -m, m),
            BigmL1norm { m, alpha } => (alpha, 0.0, -m, m),
            BigmL2norm { m, beta } => (0.0, beta, -m, m),
            BigmPositiveL1norm { m, alpha } => (alpha, 0.0, 0.0, m),
            BigmPositiveL2norm { m, beta } => (0.0, beta, 0.0, m),
            Bounds { x_lb, x_ub } => (0.0, 0.0, x_lb, x_ub),
            L1L2norm { alpha, beta } => (alpha, beta, -INF, INF),
            L1norm { alpha } => (alpha, 0.0, -INF, INF),
            L2norm { beta } => (0.0, beta, -INF, INF),
            PositiveL1norm { alpha } => (alpha, 0.0, 0.0, INF),
            PositiveL2norm { beta } => (0.0, beta, 0.0, INF),
        };
        Shape {
            alpha,
            beta,
            lo,
            hi,
        }
    }
}

impl Shape {
    /// `sup_{t in [0, b]} (s - alpha) t - beta t^2` for `s >= 0`.
    fn side_conjugate(&self, s: f64, b: f64) -> f64 {
        let Shape { alpha, beta, .. } = *self;
        if s <= alpha || b == 0.0 {
            return 0.0;
        }
        let slack = s - alpha;
        if beta > 0.0 {
            let t = slack / (2.0 * beta);
            if t <= b {
                slack * slack / (4.0 * beta)
            } else {
                slack * b - beta * b * b
            }
        } else if b.is_finite() {
            slack * b
        } else {
            INF
        }
    }

    /// Maximisers `t` of the one-sided conjugate sup, as `[t1, t2]`.
    fn side_argmax(&self, s: f64, b: f64) -> Interval {
        let Shape { alpha, beta, .. } = *self;
        if b == 0.0 || s < alpha {
            return Interval::point(0.0);
        }
        if s == alpha {
            return if beta > 0.0 {
                Interval::point(0.0)
            } else {
                Interval::new(0.0, b)
            };
        }
        if beta > 0.0 {
            Interval::point(((s - alpha) / (2.0 * beta)).min(b))
        } else if b.is_finite() {
            Interval::point(b)
        } else {
            Interval::EMPTY
        }
    }

    /// `(tau, mu, kappa)` magnitudes on a half-line of width `b`.
    fn side_params(&self, b: f64, lmbd: f64) -> (f64, f64, f64) {
        let Shape { alpha, beta, .. } = *self;
        if b == 0.0 {
            return (INF, 0.0, INF);
        }
        if beta > 0.0 {
            let r = (lmbd / beta).sqrt();
            if r < b {
                let tau = alpha + 2.0 * (beta * lmbd).sqrt();
                (tau, r, tau)
            } else {
                (alpha + lmbd / b + beta * b, b, INF)
            }
        } else if b.is_finite() {
            (alpha + lmbd / b, b, INF)
        } else {
            (alpha, INF, INF)
        }
    }

    fn value(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            INF
        } else {
            self.alpha * x.abs() + self.beta * x * x
        }
    }

    fn conjugate(&self, v: f64) -> f64 {
        if v >= 0.0 {
            self.side_conjugate(v, self.hi)
        } else {
            self.side_conjugate(-v, -self.lo)
        }
    }

    fn prox(&self, v: f64, eta: f64) -> f64 {
        let shrunk = (v.abs() - eta * self.alpha).max(0.0) / (1.0 + 2.0 * eta * self.beta);
        (shrunk.copysign(v)).clamp(self.lo, self.hi)
    }

    fn subdiff(&self, x: f64) -> Interval {
        let Shape {
            alpha,
            beta,
            lo,
            hi,
        } = *self;
        if x < lo || x > hi {
            return Interval::EMPTY;
        }
        if x == 0.0 {
            let l = if lo == 0.0 { -INF } else { -alpha };
            return Interval::new(l, alpha);
        }
        if x > 0.0 {
            let d = alpha + 2.0 * beta * x;
            if x == hi {
                Interval::new(d, INF)
            } else {
                Interval::point(d)
            }
        } else {
            let d = -alpha + 2.0 * beta * x;
            if x == lo {
                Interval::new(-INF, d)
            } else {
                Interval::point(d)
            }
        }
    }

    fn conjugate_subdiff(&self, v: f64) -> Interval {
        if v > 0.0 {
            self.side_argmax(v, self.hi)
        } else if v < 0.0 {
            self.side_argmax(-v, -self.lo).neg()
        } else {
            let pos = self.side_argmax(0.0, self.hi);
            let neg = self.side_argmax(0.0, -self.lo);
            Interval::new(-neg.hi(), pos.hi())
        }
    }

    fn conjugate_domain(&self) -> Interval {
        let finite_growth_pos = self.beta > 0.0 || self.hi.is_finite();
        let finite_growth_neg = self.beta > 0.0 || self.lo.is_finite();
        Interval::new(
            if finite_growth_neg { -INF } else { -self.alpha },
            if finite_growth_pos { INF } else { self.alpha },
        )
    }

    fn params(&self, lmbd: f64) -> PenaltyParams {
        let (tp, mp, kp) = self.side_params(self.hi, lmbd);
        let (tn, mn, kn) = self.side_params(-self.lo, lmbd);
        PenaltyParams {
            tau_neg: -tn,
            tau_pos: tp,
            mu_neg: -mn,
            mu_pos: mp,
            kappa_neg: -kn,
            kappa_pos: kp,
        }
    }
}

impl Penalty for NativePenalty {
    fn value(&self, _i: usize, x: f64) -> f64 {
        self.shape().value(x)
    }

    fn conjugate(&self, _i: usize, v: f64) -> f64 {
        self.shape().conjugate(v)
    }

    fn prox(&self, _i: usize, v: f64, eta: f64) -> f64 {
        self.shape().prox(v, eta)
    }

    fn subdiff(&self, _i: usize, x: f64) -> Interval {
        self.shape().subdiff(x)
    }

    fn conjugate_subdiff(&self, _i: usize, v: f64) -> Interval {
        self.shape().conjugate_subdiff(v)
    }

    fn is_symmetric(&self) -> bool {
        let s = self.shape();
        s.lo == -s.hi
    }

    fn conjugate_domain(&self, _i: usize) -> Interval {
        self.shape().conjugate_domain()
    }

    fn param_slope(&self, _i: usize, lmbd: f64) -> Option<(f64, f64)> {
        let p = self.shape().params(lmbd);
        Some((p.tau_neg, p.tau_pos))
    }

    fn param_limit(&self, _i: usize, lmbd: f64) -> Option<(f64, f64)> {
        let p = self.shape().params(lmbd);
        Some((p.mu_neg, p.mu_pos))
    }

    fn param_bndry(&self, _i: usize, lmbd: f64) -> Option<(f64, f64)> {
        let p = self.shape().params(lmbd);
        Some((p.kappa_neg, p.kappa_pos))
    }

    fn name(&self) -> &str {
        use NativePenalty::*;
        match self {
            Bigm { .. } => "Bigm",
            BigmL1norm { .. } => "BigmL1norm",
            BigmL2norm { .. } => "BigmL2norm",
            BigmPositiveL1norm { .. } => "BigmPositiveL1norm",
            BigmPositiveL2norm { .. } => "BigmPositiveL2norm",
            Bounds { .. } => "Bounds",
            L1L2norm { .. } => "L1L2norm",
            L1norm { .. } => "L1norm",
            L2norm { .. } => "L2norm",
            PositiveL1norm { .. } => "PositiveL1norm",
            PositiveL2norm { .. } => "PositiveL2norm",
        }
    }
}

const PROBE_CAP_EXP: i32 = 60;

/// Bisection bracket `[inside, outside]` around the end of the sublevel set
/// `{v : h*(v) <= lmbd}` on the half-line given by `sign`. `inside` satisfies
/// the level constraint, `outside` violates it. Returns `None` when every
/// probe up to `2^60` stays inside the level set.
fn slope_bracket(
    pen: &dyn Penalty,
    i: usize,
    lmbd: f64,
    sign: f64,
    tol: f64,
) -> Option<(f64, f64)> {
    let within = |v: f64| pen.conjugate(i, sign * v) <= lmbd;
    let mut hi = 1.0;
    let mut lo = 0.0;
    let cap = 2f64.powi(PROBE_CAP_EXP);
    while within(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return None;
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if within(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((sign * lo, sign * hi))
}

/// Approximates `tau_pos` to within `tol` by bisection on `h*`.
pub fn approximate_slope(pen: &dyn Penalty, i: usize, lmbd: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidOptions(format!("tolerance must be positive, got {tol}")));
    }
    slope_bracket(pen, i, lmbd, 1.0, tol)
        .map(|(inside, _)| inside)
        .ok_or_else(|| {
            Error::InconsistentPenalty(format!(
                "h*(v) <= {lmbd} for every probed v up to 2^{PROBE_CAP_EXP}; h is not coercive"
            ))
        })
}

/// Approximates `tau_neg`; `-inf` when the negative half-line never leaves the level set.
pub fn approximate_slope_neg(pen: &dyn Penalty, i: usize, lmbd: f64, tol: f64) -> f64 {
    slope_bracket(pen, i, lmbd, -1.0, tol)
        .map(|(inside, _)| inside)
        .unwrap_or(-INF)
}

const DEFAULT_BISECTION_TOL: f64 = 1e-13;

/// Parameters obtained purely from the function oracles (bisection for `tau`,
/// subdifferentials for `mu` and `kappa`), ignoring any closed forms.
pub fn numerical_params(pen: &dyn Penalty, i: usize, lmbd: f64) -> Result<PenaltyParams> {
    let cap = 2f64.powi(PROBE_CAP_EXP);
    let (tau_pos, probe_pos) = slope_bracket(pen, i, lmbd, 1.0, DEFAULT_BISECTION_TOL)
        .ok_or_else(|| {
            Error::InconsistentPenalty(format!(
                "h*(v) <= {lmbd} for every probed v up to 2^{PROBE_CAP_EXP}; h is not coercive"
            ))
        })?;
    // The right limit of dh* at tau is the supremum of dh*(tau).
    let mu_pos = limit_from_probe(pen, i, probe_pos, 1.0);
    let kappa_pos = bndry_from_limit(pen, i, mu_pos, 1.0);
    if pen.is_symmetric() {
        return Ok(PenaltyParams {
            tau_neg: -tau_pos,
            tau_pos,
            mu_neg: -mu_pos,
            mu_pos,
            kappa_neg: -kappa_pos,
            kappa_pos,
        });
    }
    let (tau_neg, probe_neg) =
        slope_bracket(pen, i, lmbd, -1.0, DEFAULT_BISECTION_TOL).unwrap_or((-INF, -cap));
    let mu_neg = limit_from_probe(pen, i, probe_neg, -1.0);
    let kappa_neg = bndry_from_limit(pen, i, mu_neg, -1.0);
    Ok(PenaltyParams {
        tau_neg,
        tau_pos,
        mu_neg,
        mu_pos,
        kappa_neg,
        kappa_pos,
    })
}

fn limit_from_probe(pen: &dyn Penalty, i: usize, probe: f64, sign: f64) -> f64 {
    let sd = pen.conjugate_subdiff(i, probe);
    if sd.is_empty() {
        return sign * INF;
    }
    if sign > 0.0 {
        sd.hi().max(0.0)
    } else {
        sd.lo().min(0.0)
    }
}

fn bndry_from_limit(pen: &dyn Penalty, i: usize, mu: f64, sign: f64) -> f64 {
    if mu.is_infinite() {
        return sign * INF;
    }
    let sd = pen.subdiff(i, mu);
    if sd.is_empty() {
        sign * INF
    } else if sign > 0.0 {
        sd.hi()
    } else {
        sd.lo()
    }
}

/// `(tau_neg, tau_pos)`: closed form when declared, bisection otherwise.
pub fn param_slope(pen: &dyn Penalty, i: usize, lmbd: f64) -> Result<(f64, f64)> {
    match pen.param_slope(i, lmbd) {
        Some(t) => Ok(t),
        None => {
            let p = numerical_params(pen, i, lmbd)?;
            Ok((p.tau_neg, p.tau_pos))
        }
    }
}

/// `(mu_neg, mu_pos)`.
pub fn param_limit(pen: &dyn Penalty, i: usize, lmbd: f64) -> Result<(f64, f64)> {
    compute_params(pen, i, lmbd).map(|p| (p.mu_neg, p.mu_pos))
}

/// `(kappa_neg, kappa_pos)`.
pub fn param_bndry(pen: &dyn Penalty, i: usize, lmbd: f64) -> Result<(f64, f64)> {
    compute_params(pen, i, lmbd).map(|p| (p.kappa_neg, p.kappa_pos))
}

/// All parameters, using every declared closed form and filling the rest
/// numerically. `mu` defaults are evaluated at the chosen `tau`.
pub fn compute_params(pen: &dyn Penalty, i: usize, lmbd: f64) -> Result<PenaltyParams> {
    let slope = pen.param_slope(i, lmbd);
    let limit = pen.param_limit(i, lmbd);
    let bndry = pen.param_bndry(i, lmbd);
    if let (Some((tn, tp)), Some((mn, mp)), Some((kn, kp))) = (slope, limit, bndry) {
        return Ok(PenaltyParams {
            tau_neg: tn,
            tau_pos: tp,
            mu_neg: mn,
            mu_pos: mp,
            kappa_neg: kn,
            kappa_pos: kp,
        });
    }
    let numeric = numerical_params(pen, i, lmbd)?;
    let (tau_neg, tau_pos) = slope.unwrap_or((numeric.tau_neg, numeric.tau_pos));
    let (mu_neg, mu_pos) = limit.unwrap_or((numeric.mu_neg, numeric.mu_pos));
    let (kappa_neg, kappa_pos) = bndry.unwrap_or_else(|| {
        (
            bndry_from_limit(pen, i, mu_neg, -1.0),
            bndry_from_limit(pen, i, mu_pos, 1.0),
        )
    });
    let params = PenaltyParams {
        tau_neg,
        tau_pos,
        mu_neg,
        mu_pos,
        kappa_neg,
        kappa_pos,
    };
    check_params(&params)?;
    Ok(params)
}

fn check_params(p: &PenaltyParams) -> Result<()> {
    if !(p.tau_pos >= 0.0 && p.tau_pos.is_finite()) {
        return Err(Error::InconsistentPenalty(format!(
            "tau_pos must be finite and nonnegative, got {}",
            p.tau_pos
        )));
    }
    if !(p.tau_neg <= 0.0) || !(p.mu_pos >= 0.0) || !(p.mu_neg <= 0.0) {
        return Err(Error::InconsistentPenalty(format!("{p:?} violates sign constraints")));
    }
    Ok(())
}
