//! Closed intervals over the extended reals, used to represent
//! subdifferentials of scalar convex functions.

use std::fmt;

/// A closed interval `[lo, hi]` with possibly infinite endpoints.
///
/// The empty set is the distinguished value [`Interval::EMPTY`]; every
/// non-empty interval satisfies `lo <= hi`.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };

    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// Builds `[lo, hi]`, or the empty interval when `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            Self::EMPTY
        } else {
            Interval { lo, hi }
        }
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        !self.is_empty() && self.lo <= x && x <= self.hi
    }

    /// Membership with an absolute slack on both ends.
    pub fn contains_approx(&self, x: f64, tol: f64) -> bool {
        !self.is_empty() && self.lo - tol <= x && x <= self.hi + tol
    }

    /// True when `lo < x < hi`.
    pub fn contains_interior(&self, x: f64) -> bool {
        !self.is_empty() && self.lo < x && x < self.hi
    }

    /// True when the open interval `(lo', hi')` of `other` lies inside `self`.
    /// A degenerate `other` (single point) reduces to plain membership.
    pub fn contains_open(&self, other: &Interval) -> bool {
        if other.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        if other.lo == other.hi {
            return self.contains_interior(other.lo);
        }
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Minkowski translation `self + shift`.
    pub fn shift(&self, shift: f64) -> Self {
        if self.is_empty() {
            Self::EMPTY
        } else {
            Self::new(self.lo + shift, self.hi + shift)
        }
    }

    /// Reflection `-self`.
    pub fn neg(&self) -> Self {
        if self.is_empty() {
            Self::EMPTY
        } else {
            Interval {
                lo: -self.hi,
                hi: -self.lo,
            }
        }
    }

    pub fn intersect(&self, other: &Interval) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::EMPTY;
        }
        Self::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Distance from `x` to the interval (`+inf` when empty).
    pub fn distance(&self, x: f64) -> f64 {
        if self.is_empty() {
            f64::INFINITY
        } else if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "Interval(empty)")
        } else {
            write!(f, "Interval[{}, {}]", self.lo, self.hi)
        }
    }
}
