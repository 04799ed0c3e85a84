//! Closed intervals with exact rational endpoints. With exact arithmetic no
//! outward rounding is needed for ring operations; rounding enters only where
//! irrational bounds (n-th roots) are enclosed.

use crate::rational::Rational;
use num::traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        RatInterval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        RatInterval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn add(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn mul(&self, other: &RatInterval) -> RatInterval {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        RatInterval {
            lo: candidates.iter().min().unwrap().clone(),
            hi: candidates.iter().max().unwrap().clone(),
        }
    }

    pub fn scale(&self, c: &Rational) -> RatInterval {
        if c.is_negative() {
            RatInterval {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            RatInterval {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }

    pub fn pow(&self, n: u32) -> RatInterval {
        let mut acc = RatInterval::point(Rational::from_integer(1.into()));
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn intersect(&self, other: &RatInterval) -> Option<RatInterval> {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        (lo <= hi).then_some(RatInterval { lo, hi })
    }

    /// Division by an interval that is strictly positive; `None` when the
    /// divisor touches zero (no constraint can be extracted).
    pub fn div_positive(&self, divisor: &RatInterval) -> Option<RatInterval> {
        if !divisor.lo.is_positive() {
            return None;
        }
        Some(RatInterval {
            lo: &self.lo / &divisor.hi,
            hi: &self.hi / &divisor.lo,
        })
    }

    pub fn intersects_open(&self, lo: &Rational, hi: &Rational) -> bool {
        self.lo < *hi && self.hi > *lo
    }
}

/// Per-coefficient interval enclosure for candidate root coefficients; an
/// empty slot records a proven-infeasible coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalBox {
    pub intervals: Vec<Option<RatInterval>>,
}

impl IntervalBox {
    pub fn full(len: usize) -> Self {
        let unit = RatInterval::new(Rational::zero(), Rational::from_integer(1.into()));
        IntervalBox {
            intervals: vec![Some(unit); len],
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.intervals.iter().all(|i| i.is_some())
    }

    pub fn midpoints(&self) -> Option<Vec<Rational>> {
        self.intervals
            .iter()
            .map(|i| i.as_ref().map(RatInterval::midpoint))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn arithmetic() {
        let a = RatInterval::new(ratio(-1, 2), int(1));
        let b = RatInterval::new(int(2), int(3));
        assert_eq!(a.add(&b), RatInterval::new(ratio(3, 2), int(4)));
        assert_eq!(a.mul(&b), RatInterval::new(ratio(-3, 2), int(3)));
        assert_eq!(b.pow(2), RatInterval::new(int(4), int(9)));
    }

    #[test]
    fn division_needs_positive_divisor() {
        let a = RatInterval::new(int(1), int(2));
        let touching = RatInterval::new(int(0), int(1));
        assert!(a.div_positive(&touching).is_none());
        let pos = RatInterval::new(int(1), int(2));
        assert_eq!(
            a.div_positive(&pos).unwrap(),
            RatInterval::new(ratio(1, 2), int(2))
        );
    }

    #[test]
    fn intersection() {
        let a = RatInterval::new(int(0), int(2));
        let b = RatInterval::new(int(1), int(3));
        assert_eq!(a.intersect(&b).unwrap(), RatInterval::new(int(1), int(2)));
        let c = RatInterval::new(int(5), int(6));
        assert!(a.intersect(&c).is_none());
    }
}
