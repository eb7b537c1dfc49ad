//! Closed intervals of reals with outward rounding.
//!
//! Every arithmetic result is widened by one ulp in each direction, so an
//! interval produced from enclosing operands encloses the exact result.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalValue {
    pub lo: f64,
    pub hi: f64,
}

impl IntervalValue {
    pub const ZERO: IntervalValue = IntervalValue { lo: 0.0, hi: 0.0 };

    /// Panics if `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        IntervalValue { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        IntervalValue { lo: x, hi: x }
    }

    /// Point value widened by `ulps` units in the last place on each side.
    pub fn around(x: f64, ulps: u32) -> Self {
        let (mut lo, mut hi) = (x, x);
        for _ in 0..ulps {
            lo = lo.next_down();
            hi = hi.next_up();
        }
        IntervalValue { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &IntervalValue) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &IntervalValue) -> IntervalValue {
        IntervalValue {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Widen by an absolute amount on both sides.
    pub fn widen(&self, eps: f64) -> IntervalValue {
        IntervalValue {
            lo: (self.lo - eps).next_down(),
            hi: (self.hi + eps).next_up(),
        }
    }

    pub fn scale(&self, k: f64) -> IntervalValue {
        if k >= 0.0 {
            IntervalValue {
                lo: (self.lo * k).next_down(),
                hi: (self.hi * k).next_up(),
            }
        } else {
            IntervalValue {
                lo: (self.hi * k).next_down(),
                hi: (self.lo * k).next_up(),
            }
        }
    }

    /// Outward division. `None` when the divisor contains zero.
    pub fn div(&self, d: &IntervalValue) -> Option<IntervalValue> {
        if d.lo <= 0.0 && d.hi >= 0.0 {
            return None;
        }
        let cands = [
            self.lo / d.lo,
            self.lo / d.hi,
            self.hi / d.lo,
            self.hi / d.hi,
        ];
        Some(min_max_outward(&cands))
    }

    /// Clamp the lower end at zero when it dips below by at most `tol`.
    pub fn clamp_nonneg(&self, tol: f64) -> IntervalValue {
        if self.lo < 0.0 && self.lo >= -tol {
            IntervalValue {
                lo: 0.0,
                hi: self.hi.max(0.0),
            }
        } else {
            *self
        }
    }
}

fn min_max_outward(c: &[f64]) -> IntervalValue {
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    IntervalValue {
        lo: lo.next_down(),
        hi: hi.next_up(),
    }
}

impl Default for IntervalValue {
    fn default() -> Self {
        IntervalValue::ZERO
    }
}

impl Add for IntervalValue {
    type Output = IntervalValue;
    fn add(self, o: IntervalValue) -> IntervalValue {
        IntervalValue {
            lo: (self.lo + o.lo).next_down(),
            hi: (self.hi + o.hi).next_up(),
        }
    }
}

impl Sub for IntervalValue {
    type Output = IntervalValue;
    fn sub(self, o: IntervalValue) -> IntervalValue {
        IntervalValue {
            lo: (self.lo - o.hi).next_down(),
            hi: (self.hi - o.lo).next_up(),
        }
    }
}

impl Neg for IntervalValue {
    type Output = IntervalValue;
    fn neg(self) -> IntervalValue {
        IntervalValue {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for IntervalValue {
    type Output = IntervalValue;
    fn mul(self, o: IntervalValue) -> IntervalValue {
        let cands = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        min_max_outward(&cands)
    }
}

impl std::iter::Sum for IntervalValue {
    fn sum<I: Iterator<Item = IntervalValue>>(iter: I) -> IntervalValue {
        iter.fold(IntervalValue::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for IntervalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.17e}, {:.17e}]", self.lo, self.hi)
    }
}
