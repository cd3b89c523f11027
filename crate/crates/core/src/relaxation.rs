//! Conjugate machinery for `g(x) = h(x) + lmbd [x != 0]`: the conjugate `g*`,
//! the convex envelope `g**`, their subdifferentials and prox, and the
//! per-node relaxed terms selected by each coordinate's status.

use crate::error::Result;
use crate::interval::Interval;
use crate::penalties::{compute_params, Penalty, PenaltyParams};
use crate::problem::Problem;

const INF: f64 = f64::INFINITY;

/// How a coordinate is constrained inside a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoordStatus {
    /// Fixed to zero.
    Zero,
    /// Fixed to be nonzero.
    NonZero,
    Free,
}

/// Scalar functions of one coordinate: the penalty, its l0 weight and the
/// cached envelope parameters.
#[derive(Clone, Copy, Debug)]
pub struct CoordTerms<'a> {
    pen: &'a dyn Penalty,
    lmbd: f64,
    i: usize,
    params: PenaltyParams,
}

impl<'a> CoordTerms<'a> {
    pub fn new(pen: &'a dyn Penalty, lmbd: f64, i: usize) -> Result<Self> {
        let params = compute_params(pen, i, lmbd)?;
        Ok(Self::with_params(pen, lmbd, i, params))
    }

    pub fn with_params(pen: &'a dyn Penalty, lmbd: f64, i: usize, params: PenaltyParams) -> Self {
        Self {
            pen,
            lmbd,
            i,
            params,
        }
    }

    pub fn of(problem: &'a Problem, i: usize) -> Self {
        Self::with_params(problem.penalty(), problem.lmbd(), i, *problem.params(i))
    }

    pub fn params(&self) -> &PenaltyParams {
        &self.params
    }

    /// `h(x) + lmbd [x != 0]`.
    pub fn g_value(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            self.pen.value(self.i, x) + self.lmbd
        }
    }

    /// `g*(v) = (h*(v) - lmbd)_+`.
    pub fn g_conjugate(&self, v: f64) -> f64 {
        (self.pen.conjugate(self.i, v) - self.lmbd).max(0.0)
    }

    /// Convex envelope: linear with slope `tau` up to the breakpoint `mu`,
    /// then `h + lmbd`.
    pub fn g_biconjugate(&self, x: f64) -> f64 {
        let p = &self.params;
        if x == 0.0 {
            0.0
        } else if x > 0.0 {
            if x <= p.mu_pos {
                p.tau_pos * x
            } else {
                self.pen.value(self.i, x) + self.lmbd
            }
        } else if x >= p.mu_neg {
            p.tau_neg * x
        } else {
            self.pen.value(self.i, x) + self.lmbd
        }
    }

    pub fn g_biconjugate_subdiff(&self, x: f64) -> Interval {
        let p = &self.params;
        if x == 0.0 {
            Interval::new(p.tau_neg, p.tau_pos)
        } else if x > 0.0 {
            if x < p.mu_pos {
                Interval::point(p.tau_pos)
            } else if x == p.mu_pos {
                Interval::new(p.tau_pos, p.kappa_pos)
            } else {
                self.pen.subdiff(self.i, x)
            }
        } else if x > p.mu_neg {
            Interval::point(p.tau_neg)
        } else if x == p.mu_neg {
            Interval::new(p.kappa_neg, p.tau_neg)
        } else {
            self.pen.subdiff(self.i, x)
        }
    }

    /// `argmin_x 0.5 (x - v)^2 + eta g**(x)`.
    pub fn g_biconjugate_prox(&self, v: f64, eta: f64) -> f64 {
        let p = &self.params;
        if v > eta * p.tau_pos {
            let linear = v - eta * p.tau_pos;
            if linear <= p.mu_pos {
                return linear;
            }
            let beyond = self.pen.prox(self.i, v, eta);
            if beyond > p.mu_pos {
                beyond
            } else {
                p.mu_pos
            }
        } else if v < eta * p.tau_neg {
            let linear = v - eta * p.tau_neg;
            if linear >= p.mu_neg {
                return linear;
            }
            let beyond = self.pen.prox(self.i, v, eta);
            if beyond < p.mu_neg {
                beyond
            } else {
                p.mu_neg
            }
        } else {
            0.0
        }
    }

    pub fn relaxed_term(&self, status: CoordStatus, x: f64) -> f64 {
        match status {
            CoordStatus::Zero => {
                if x == 0.0 {
                    0.0
                } else {
                    INF
                }
            }
            CoordStatus::NonZero => self.pen.value(self.i, x) + self.lmbd,
            CoordStatus::Free => self.g_biconjugate(x),
        }
    }

    pub fn relaxed_term_conjugate(&self, status: CoordStatus, v: f64) -> f64 {
        match status {
            CoordStatus::Zero => 0.0,
            CoordStatus::NonZero => self.pen.conjugate(self.i, v) - self.lmbd,
            CoordStatus::Free => self.g_conjugate(v),
        }
    }

    pub fn relaxed_term_prox(&self, status: CoordStatus, v: f64, eta: f64) -> f64 {
        match status {
            CoordStatus::Zero => 0.0,
            CoordStatus::NonZero => self.pen.prox(self.i, v, eta),
            CoordStatus::Free => self.g_biconjugate_prox(v, eta),
        }
    }

    pub fn relaxed_term_subdiff(&self, status: CoordStatus, x: f64) -> Interval {
        match status {
            CoordStatus::Zero => {
                if x == 0.0 {
                    Interval::REAL_LINE
                } else {
                    Interval::EMPTY
                }
            }
            CoordStatus::NonZero => self.pen.subdiff(self.i, x),
            CoordStatus::Free => self.g_biconjugate_subdiff(x),
        }
    }

    /// Closure of the domain of the relaxed term's conjugate.
    pub fn relaxed_conjugate_domain(&self, status: CoordStatus) -> Interval {
        match status {
            CoordStatus::Zero => Interval::REAL_LINE,
            _ => self.pen.conjugate_domain(self.i),
        }
    }

    /// Value of the relaxed term at zero (`lmbd` for fixed-nonzero coordinates).
    pub fn relaxed_at_zero(&self, status: CoordStatus) -> f64 {
        match status {
            CoordStatus::NonZero => self.lmbd,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalties::NativePenalty;
    use approx::assert_relative_eq;

    /// sup over a fine grid of `v x - g(x)`.
    fn grid_g_conjugate(t: &CoordTerms, v: f64, radius: f64) -> f64 {
        let steps = 200_000;
        (0..=steps)
            .map(|k| -radius + 2.0 * radius * k as f64 / steps as f64)
            .chain([0.0])
            .map(|x| v * x - t.g_value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn grid_argmin(obj: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let steps = 400_000;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=steps {
            let x = lo + (hi - lo) * k as f64 / steps as f64;
            let v = obj(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        best.1
    }

    #[test]
    fn g_value_examples() {
        let l2 = NativePenalty::L2norm { beta: 0.25 };
        let t = CoordTerms::new(&l2, 0.1, 0).unwrap();
        assert_eq!(t.g_value(0.0), 0.0);
        assert_relative_eq!(t.g_value(2.0), 1.1);
        let bigm = NativePenalty::Bigm { m: 1.0 };
        let t = CoordTerms::new(&bigm, 0.25, 0).unwrap();
        assert_eq!(t.g_value(2.0), INF);
    }

    #[test]
    fn g_conjugate_examples() {
        let bigm = NativePenalty::Bigm { m: 1.0 };
        let t = CoordTerms::new(&bigm, 0.25, 0).unwrap();
        assert_eq!(t.g_conjugate(0.0), 0.0);
        assert_relative_eq!(t.g_conjugate(0.75), 0.5);
        assert!((grid_g_conjugate(&t, 0.75, 1.0) - 0.5).abs() < 1e-9);

        let l2 = NativePenalty::L2norm { beta: 0.25 };
        let t = CoordTerms::new(&l2, 0.1, 0).unwrap();
        assert_relative_eq!(t.g_conjugate(1.0), 0.9, epsilon = 1e-15);
        assert!((grid_g_conjugate(&t, 1.0, 5.0) - 0.9).abs() < 1e-6);
    }

    #[test]
    fn g_biconjugate_examples() {
        let bigm = NativePenalty::Bigm { m: 1.0 };
        let t = CoordTerms::new(&bigm, 0.25, 0).unwrap();
        assert_eq!(t.g_biconjugate(0.0), 0.0);
        assert_relative_eq!(t.g_biconjugate(0.5), 0.125);
        let l2 = NativePenalty::L2norm { beta: 0.25 };
        let t = CoordTerms::new(&l2, 0.1, 0).unwrap();
        assert_relative_eq!(t.g_biconjugate(1.0), 0.35, epsilon = 1e-15);
    }

    #[test]
    fn biconjugate_subdiff_examples() {
        let l1 = NativePenalty::L1norm { alpha: 0.5 };
        let t = CoordTerms::new(&l1, 0.3, 0).unwrap();
        assert_eq!(t.g_biconjugate_subdiff(0.0), Interval::new(-0.5, 0.5));

        let l2 = NativePenalty::L2norm { beta: 0.25 };
        let t = CoordTerms::new(&l2, 0.1, 0).unwrap();
        let mu = t.params().mu_pos;
        let sd = t.g_biconjugate_subdiff(mu);
        assert_relative_eq!(sd.lo(), 0.1f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(sd.hi(), 0.1f64.sqrt(), epsilon = 1e-15);

        let bigm = NativePenalty::Bigm { m: 1.0 };
        let t = CoordTerms::new(&bigm, 0.25, 0).unwrap();
        assert_eq!(t.g_biconjugate_subdiff(1.0), Interval::new(0.25, INF));
        assert!(t.g_biconjugate_subdiff(1.5).is_empty());
    }

    #[test]
    fn biconjugate_prox_examples() {
        let l1 = NativePenalty::L1norm { alpha: 0.5 };
        let t = CoordTerms::new(&l1, 0.1, 0).unwrap();
        assert_eq!(t.g_biconjugate_prox(0.0, 1.0), 0.0);
        assert_relative_eq!(t.g_biconjugate_prox(2.0, 1.0), 1.5);
        let oracle = grid_argmin(|x| 0.5 * (x - 2.0).powi(2) + t.g_biconjugate(x), -3.0, 3.0);
        assert!((oracle - 1.5).abs() < 1e-4);

        let bigm = NativePenalty::Bigm { m: 1.0 };
        let t = CoordTerms::new(&bigm, 0.25, 0).unwrap();
        assert_eq!(t.g_biconjugate_prox(2.0, 1.0), 1.0);
        let oracle = grid_argmin(|x| 0.5 * (x - 2.0).powi(2) + t.g_biconjugate(x), -3.0, 3.0);
        assert!((oracle - 1.0).abs() < 1e-4);
    }

    #[test]
    fn relaxed_term_examples() {
        let l2 = NativePenalty::L2norm { beta: 0.25 };
        let t = CoordTerms::new(&l2, 0.1, 0).unwrap();
        assert_eq!(t.relaxed_term(CoordStatus::Zero, 0.0), 0.0);
        assert_eq!(t.relaxed_term(CoordStatus::Zero, 0.1), INF);
        assert_relative_eq!(
            t.relaxed_term_conjugate(CoordStatus::NonZero, 1.0),
            0.9,
            epsilon = 1e-15
        );
        assert_eq!(t.relaxed_term_conjugate(CoordStatus::Free, 0.0), 0.0);
        assert_eq!(t.relaxed_at_zero(CoordStatus::NonZero), 0.1);
    }

    #[test]
    fn positive_penalty_envelope_is_infinite_on_negatives() {
        let pen = NativePenalty::PositiveL2norm { beta: 0.5 };
        let t = CoordTerms::new(&pen, 0.2, 0).unwrap();
        assert_eq!(t.params().tau_neg, -INF);
        assert_eq!(t.g_biconjugate(-0.1), INF);
        assert_eq!(t.g_biconjugate_prox(-5.0, 1.0), 0.0);
        assert_eq!(t.g_biconjugate_subdiff(0.0).lo(), -INF);
    }
}
