//! Data-fidelity functions `f(w)` evaluated at `w = Ax`.
//!
//! Every loss exposes its value, convex conjugate, gradient and (when it
//! exists) a global Lipschitz constant of the gradient. User-defined losses
//! implement [`Loss`] directly.

use std::fmt;

use crate::error::{Error, Result};

/// A closed, convex, differentiable and lower-bounded function on `R^m`
/// whose domain contains a neighbourhood of the origin.
pub trait Loss: Send + Sync + fmt::Debug {
    /// Length `m` of the argument vector.
    fn dim(&self) -> usize;

    fn value(&self, w: &[f64]) -> f64;

    /// `f*(u) = sup_w <u, w> - f(w)`.
    fn conjugate(&self, u: &[f64]) -> f64;

    /// Writes `grad f(w)` into `out`. Only meaningful on the interior of the domain.
    fn gradient(&self, w: &[f64], out: &mut [f64]);

    /// Lipschitz constant of the gradient, if one exists.
    fn lipschitz(&self) -> Option<f64>;

    /// Infimum of `f`. Used by the lambda-max fallback and the oracle
    /// cardinality skip; `None` means "not declared".
    fn infimum(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// The native losses.
#[derive(Clone, Debug, PartialEq)]
pub enum NativeLoss {
    LeastSquares { y: Vec<f64> },
    Logistic { y: Vec<f64> },
    SquaredHinge { y: Vec<f64> },
    Logcosh { y: Vec<f64> },
    KullbackLeibler { y: Vec<f64>, eps: f64 },
}

pub const NATIVE_LOSS_NAMES: [&str; 5] = [
    "Leastsquares",
    "Logistic",
    "Squaredhinge",
    "Logcosh",
    "KullbackLeibler",
];

fn check_finite(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::InvalidLoss("target vector is empty".into()));
    }
    if let Some(j) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidLoss(format!("non-finite target at index {j}")));
    }
    Ok(())
}

fn check_binary(y: &[f64]) -> Result<()> {
    check_finite(y)?;
    if let Some(j) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidLoss(format!(
            "targets must be -1 or +1, got {} at index {j}",
            y[j]
        )));
    }
    Ok(())
}

impl NativeLoss {
    pub fn least_squares(y: Vec<f64>) -> Result<Self> {
        check_finite(&y)?;
        Ok(Self::LeastSquares { y })
    }

    pub fn logistic(y: Vec<f64>) -> Result<Self> {
        check_binary(&y)?;
        Ok(Self::Logistic { y })
    }

    pub fn squared_hinge(y: Vec<f64>) -> Result<Self> {
        check_binary(&y)?;
        Ok(Self::SquaredHinge { y })
    }

    pub fn logcosh(y: Vec<f64>) -> Result<Self> {
        check_finite(&y)?;
        Ok(Self::Logcosh { y })
    }

    pub fn kullback_leibler(y: Vec<f64>, eps: f64) -> Result<Self> {
        check_finite(&y)?;
        if let Some(j) = y.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidLoss(format!(
                "Kullback-Leibler targets must be nonnegative, got {} at index {j}",
                y[j]
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidLoss(format!("eps must be positive, got {eps}")));
        }
        Ok(Self::KullbackLeibler { y, eps })
    }

    /// Builds a loss from its catalogue name.
    pub fn from_name(name: &str, y: Vec<f64>, eps: Option<f64>) -> Result<Self> {
        match name {
            "Leastsquares" => Self::least_squares(y),
            "Logistic" => Self::logistic(y),
            "Squaredhinge" => Self::squared_hinge(y),
            "Logcosh" => Self::logcosh(y),
            "KullbackLeibler" => {
                let eps = eps.ok_or_else(|| {
                    Error::InvalidLoss("KullbackLeibler requires parameter eps".into())
                })?;
                Self::kullback_leibler(y, eps)
            }
            other => Err(Error::InvalidLoss(format!(
                "unknown loss '{other}', expected one of: {}",
                NATIVE_LOSS_NAMES.join(", ")
            ))),
        }
    }

    pub fn targets(&self) -> &[f64] {
        match self {
            Self::LeastSquares { y }
            | Self::Logistic { y }
            | Self::SquaredHinge { y }
            | Self::Logcosh { y }
            | Self::KullbackLeibler { y, .. } => y,
        }
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `t log t` with the convention `0 log 0 = 0`.
fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

fn log_cosh(d: f64) -> f64 {
    let a = d.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Loss for NativeLoss {
    fn dim(&self) -> usize {
        self.targets().len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        match self {
            Self::LeastSquares { y } => {
                0.5 * w.iter().zip(y).map(|(wj, yj)| (wj - yj).powi(2)).sum::<f64>()
            }
            Self::Logistic { y } => w.iter().zip(y).map(|(wj, yj)| softplus(-wj * yj)).sum(),
            Self::SquaredHinge { y } => w
                .iter()
                .zip(y)
                .map(|(wj, yj)| (1.0 - wj * yj).max(0.0).powi(2))
                .sum(),
            Self::Logcosh { y } => w.iter().zip(y).map(|(wj, yj)| log_cosh(wj - yj)).sum(),
            Self::KullbackLeibler { y, eps } => {
                let mut acc = 0.0;
                for (wj, &yj) in w.iter().zip(y) {
                    let z = wj + eps;
                    if z <= 0.0 {
                        return f64::INFINITY;
                    }
                    let log_term = if yj == 0.0 { 0.0 } else { yj * (yj / z).ln() };
                    acc += log_term + z - yj;
                }
                acc
            }
        }
    }

    fn conjugate(&self, u: &[f64]) -> f64 {
        match self {
            Self::LeastSquares { y } => u
                .iter()
                .zip(y)
                .map(|(uj, yj)| 0.5 * uj * uj + uj * yj)
                .sum(),
            Self::Logistic { y } => {
                let mut acc = 0.0;
                for (uj, yj) in u.iter().zip(y) {
                    let s = -uj * yj;
                    if !(0.0..=1.0).contains(&s) {
                        return f64::INFINITY;
                    }
                    acc += xlogx(s) + xlogx(1.0 - s);
                }
                acc
            }
            Self::SquaredHinge { y } => {
                let mut acc = 0.0;
                for (uj, yj) in u.iter().zip(y) {
                    let s = uj * yj;
                    if s > 0.0 {
                        return f64::INFINITY;
                    }
                    acc += s + 0.25 * s * s;
                }
                acc
            }
            Self::Logcosh { y } => {
                let mut acc = 0.0;
                for (uj, yj) in u.iter().zip(y) {
                    if uj.abs() > 1.0 {
                        return f64::INFINITY;
                    }
                    acc += uj * yj + 0.5 * (xlogx(1.0 + uj) + xlogx(1.0 - uj));
                }
                acc
            }
            Self::KullbackLeibler { y, eps } => {
                let mut acc = 0.0;
                for (&uj, &yj) in u.iter().zip(y) {
                    if uj < 1.0 {
                        let log_term = if yj == 0.0 { 0.0 } else { -yj * (-uj).ln_1p() };
                        acc += log_term - eps * uj;
                    } else if uj == 1.0 && yj == 0.0 {
                        acc -= eps;
                    } else {
                        return f64::INFINITY;
                    }
                }
                acc
            }
        }
    }

    fn gradient(&self, w: &[f64], out: &mut [f64]) {
        match self {
            Self::LeastSquares { y } => {
                for ((o, wj), yj) in out.iter_mut().zip(w).zip(y) {
                    *o = wj - yj;
                }
            }
            Self::Logistic { y } => {
                for ((o, wj), yj) in out.iter_mut().zip(w).zip(y) {
                    *o = -yj / (1.0 + (wj * yj).exp());
                }
            }
            Self::SquaredHinge { y } => {
                for ((o, wj), yj) in out.iter_mut().zip(w).zip(y) {
                    *o = -2.0 * yj * (1.0 - wj * yj).max(0.0);
                }
            }
            Self::Logcosh { y } => {
                for ((o, wj), yj) in out.iter_mut().zip(w).zip(y) {
                    *o = (wj - yj).tanh();
                }
            }
            Self::KullbackLeibler { y, eps } => {
                for ((o, wj), yj) in out.iter_mut().zip(w).zip(y) {
                    *o = 1.0 - yj / (wj + eps);
                }
            }
        }
    }

    fn lipschitz(&self) -> Option<f64> {
        match self {
            Self::LeastSquares { .. } => Some(1.0),
            Self::Logistic { .. } => Some(0.25),
            Self::SquaredHinge { .. } => Some(2.0),
            Self::Logcosh { .. } => Some(1.0),
            Self::KullbackLeibler { .. } => None,
        }
    }

    fn infimum(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> &str {
        match self {
            Self::LeastSquares { .. } => "Leastsquares",
            Self::Logistic { .. } => "Logistic",
            Self::SquaredHinge { .. } => "Squaredhinge",
            Self::Logcosh { .. } => "Logcosh",
            Self::KullbackLeibler { .. } => "KullbackLeibler",
        }
    }
}

/// Gradient with a domain check.
pub fn loss_gradient(loss: &dyn Loss, w: &[f64]) -> Result<Vec<f64>> {
    if !loss.value(w).is_finite() {
        return Err(Error::DomainViolation);
    }
    let mut g = vec![0.0; w.len()];
    loss.gradient(w, &mut g);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn least_squares_examples() {
        let loss = NativeLoss::least_squares(vec![1.0, -2.0]).unwrap();
        assert_eq!(loss.value(&[1.0, -2.0]), 0.0);
        assert_eq!(loss_gradient(&loss, &[1.0, -2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(loss.conjugate(&[0.0, 0.0]), 0.0);
        let one = NativeLoss::least_squares(vec![1.0]).unwrap();
        assert_relative_eq!(one.conjugate(&[1.0]), 1.5);
        assert_eq!(one.lipschitz(), Some(1.0));
    }

    #[test]
    fn logistic_examples() {
        let loss = NativeLoss::logistic(vec![1.0, -1.0, 1.0]).unwrap();
        assert_relative_eq!(loss.value(&[0.0; 3]), 3.0 * 2f64.ln(), epsilon = 1e-14);
        let one = NativeLoss::logistic(vec![1.0]).unwrap();
        assert_relative_eq!(loss_gradient(&one, &[0.0]).unwrap()[0], -0.5);
        assert_relative_eq!(one.conjugate(&[-0.5]), -(2f64.ln()), epsilon = 1e-14);
        assert_eq!(one.conjugate(&[0.5]), f64::INFINITY);
        assert_eq!(one.lipschitz(), Some(0.25));
    }

    #[test]
    fn squared_hinge_examples() {
        let loss = NativeLoss::squared_hinge(vec![1.0]).unwrap();
        assert_eq!(loss.value(&[3.0]), 0.0);
        assert_eq!(loss.lipschitz(), Some(2.0));
        assert_eq!(loss.conjugate(&[0.1]), f64::INFINITY);
    }

    #[test]
    fn kl_domain() {
        let loss = NativeLoss::kullback_leibler(vec![1.0, 0.0], 0.5).unwrap();
        assert_eq!(loss.value(&[-0.5, 0.0]), f64::INFINITY);
        assert_eq!(loss_gradient(&loss, &[-0.6, 0.0]), Err(Error::DomainViolation));
        assert!(loss.lipschitz().is_none());
        assert_eq!(loss.conjugate(&[1.0, 0.0]), f64::INFINITY);
        // y_j = 0 coordinate is finite at its domain boundary u = 1
        assert_relative_eq!(loss.conjugate(&[0.0, 1.0]), -0.5);
    }

    #[test]
    fn target_validation() {
        assert!(NativeLoss::logistic(vec![1.0, 0.0]).is_err());
        assert!(NativeLoss::kullback_leibler(vec![-1.0], 1.0).is_err());
        assert!(NativeLoss::kullback_leibler(vec![1.0], 0.0).is_err());
        assert!(NativeLoss::least_squares(vec![]).is_err());
        assert!(NativeLoss::from_name("Huber", vec![1.0], None).is_err());
    }
}
