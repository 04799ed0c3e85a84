//! Dense polynomials with exact rational coefficients, lowest degree first.
//!
//! Two polynomials are regarded as equivalent when one is a positive scalar
//! multiple of the other; the canonical representative fixes `f(1) = 1` for
//! polynomials with nonnegative coefficients and a monic leading coefficient
//! otherwise.

use crate::rational::{int, Rational};
use num::traits::{One, Signed, Zero};
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Rational>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(crate::rational::format_rational)
            .collect();
        write!(f, "Poly[{}]", parts.join(", "))
    }
}

impl Poly {
    /// Builds a polynomial, trimming trailing (highest-degree) zeros.
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Poly {
            coeffs: vec![Rational::one()],
        }
    }

    pub fn monomial(coeff: Rational, degree: usize) -> Self {
        if coeff.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![Rational::zero(); degree + 1];
        coeffs[degree] = coeff;
        Poly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| int(c)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with deg 0 for nonzero constants. Panics on the zero polynomial.
    pub fn degree(&self) -> usize {
        assert!(!self.is_zero(), "degree of zero polynomial");
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn leading(&self) -> &Rational {
        self.coeffs.last().expect("leading of zero polynomial")
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }

    /// Number of nonzero coefficients (support size of the pmf view).
    pub fn support_size(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * int(i as i64))
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) + other.coeff(i));
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) - other.coeff(i));
        }
        Poly::new(out)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Euclidean division: returns (quotient, remainder).
    pub fn divrem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        if self.is_zero() || self.degree() < divisor.degree() {
            return (Poly::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let dd = divisor.degree();
        let lead = divisor.leading().clone();
        let mut quot = vec![Rational::zero(); self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            if c.is_zero() {
                continue;
            }
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                let t = dc * &c;
                rem[k + j] -= t;
            }
            quot[k] = c;
        }
        (Poly::new(quot), Poly::new(rem))
    }

    /// Exact division; `None` if `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        let (q, r) = self.divrem(divisor);
        r.is_zero().then_some(q)
    }

    /// Monic gcd via the Euclidean algorithm.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.make_monic()
        }
    }

    pub fn make_monic(&self) -> Poly {
        assert!(!self.is_zero());
        let lead = self.leading().clone();
        self.scale(&(Rational::one() / lead))
    }

    /// Coefficient reversal x^n f(1/x); maps factorizations to factorizations.
    pub fn reverse(&self) -> Poly {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Poly::new(coeffs)
    }

    /// Canonical representative of the positive-scale equivalence class:
    /// `f(1) = 1` when all coefficients are nonnegative (and f nonzero),
    /// monic otherwise.
    pub fn canonical(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        if self.is_nonnegative() {
            let total = self.eval(&Rational::one());
            if !total.is_zero() {
                return self.scale(&(Rational::one() / total));
            }
        }
        self.make_monic()
    }

    /// Equivalence in the positive-scale quotient.
    pub fn equiv(&self, other: &Poly) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        if self.degree() != other.degree() {
            return false;
        }
        let ratio = other.leading() / self.leading();
        if !ratio.is_positive() {
            return false;
        }
        self.scale(&ratio) == *other
    }

    pub fn max_abs_coeff(&self) -> Rational {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn mul_and_divrem_roundtrip() {
        let a = Poly::from_i64(&[1, 2, 1]);
        let b = Poly::from_i64(&[3, 1]);
        let p = a.mul(&b);
        let (q, r) = p.divrem(&b);
        assert!(r.is_zero());
        assert_eq!(q, a);
    }

    #[test]
    fn gcd_of_common_factor() {
        let a = Poly::from_i64(&[1, 1]); // 1 + x
        let p = a.mul(&Poly::from_i64(&[2, 0, 1]));
        let q = a.mul(&Poly::from_i64(&[5, 3]));
        let g = p.gcd(&q);
        assert!(g.equiv(&a));
    }

    #[test]
    fn canonical_fixes_f1_for_nonnegative() {
        let f = Poly::from_i64(&[1, 1]);
        let c = f.canonical();
        assert_eq!(c.eval(&Rational::one()), Rational::one());
        assert_eq!(c.coeff(0), ratio(1, 2));
    }

    #[test]
    fn equiv_ignores_positive_scale_only() {
        let f = Poly::from_i64(&[1, 2, 1]);
        assert!(f.equiv(&f.scale(&ratio(3, 7))));
        assert!(!f.equiv(&f.scale(&ratio(-1, 1))));
        assert!(!f.equiv(&Poly::from_i64(&[1, 2])));
    }
}
