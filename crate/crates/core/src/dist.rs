//! Finite discrete distributions in aligned form: exact nonnegative rational
//! masses summing to one, with nonzero mass at both ends of the support.
//! The characteristic polynomial view identifies convolution with polynomial
//! multiplication, which all divisibility and decomposability decisions run on.

use crate::matrix::RationalMatrix;
use crate::poly::Poly;
use crate::rational::{to_f64, Rational};
use num::complex::Complex64;
use num::traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistError {
    #[error("all masses are zero")]
    AllZero,
    #[error("negative mass at index {0}")]
    NegativeMass(usize),
    #[error("negative coefficient at index {0}")]
    NegativeCoefficient(usize),
    #[error("degree {degree} exceeds norm bound {bound}")]
    DegreeExceedsBound { degree: usize, bound: usize },
}

/// Aligned pmf: p(0) != 0, p(w) != 0, entries >= 0 summing to exactly 1.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteDistribution {
    probs: Vec<Rational>,
}

impl std::fmt::Debug for FiniteDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .probs
            .iter()
            .map(crate::rational::format_rational)
            .collect();
        write!(f, "Dist({})", parts.join(", "))
    }
}

impl FiniteDistribution {
    /// Normalizes raw masses into aligned form; the returned shift is the
    /// number of leading zeros dropped when the origin moved.
    pub fn normalize(raw: &[Rational]) -> Result<(Self, usize), DistError> {
        if let Some(i) = raw.iter().position(|p| p.is_negative()) {
            return Err(DistError::NegativeMass(i));
        }
        let first = raw
            .iter()
            .position(|p| p.is_positive())
            .ok_or(DistError::AllZero)?;
        let last = raw.iter().rposition(|p| p.is_positive()).unwrap();
        let total: Rational = raw[first..=last].iter().cloned().sum();
        let probs = raw[first..=last].iter().map(|p| p / &total).collect();
        Ok((FiniteDistribution { probs }, first))
    }

    pub fn from_i64(raw: &[i64]) -> Self {
        let raw: Vec<Rational> = raw.iter().map(|&x| crate::rational::int(x)).collect();
        Self::normalize(&raw).expect("valid literal").0
    }

    /// Uniform distribution on {0, ..., points-1}.
    pub fn uniform(points: usize) -> Self {
        assert!(points >= 1);
        let p = Rational::new(1.into(), (points as i64).into());
        FiniteDistribution {
            probs: vec![p; points],
        }
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, k: usize) -> Rational {
        self.probs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    /// max supp - min supp of the aligned pmf.
    pub fn support_width(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| !p.is_zero()).count()
    }

    pub fn is_constant(&self) -> bool {
        self.probs.len() == 1
    }

    /// Coefficient-identical characteristic polynomial (already `f(1) = 1`).
    pub fn to_char_poly(&self) -> Poly {
        Poly::new(self.probs.clone())
    }

    /// Inverse of `to_char_poly` on nonnegative polynomials: rescales to
    /// `f(1) = 1` and aligns the origin.
    pub fn from_char_poly(f: &Poly) -> Result<(Self, usize), DistError> {
        if let Some(i) = f.coeffs().iter().position(|c| c.is_negative()) {
            return Err(DistError::NegativeCoefficient(i));
        }
        Self::normalize(f.coeffs())
    }

    /// Characteristic function phi(omega) = sum p(k) e^{i omega k}.
    pub fn eval_characteristic(&self, omega: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, p) in self.probs.iter().enumerate() {
            let phase = Complex64::new(0.0, omega * k as f64).exp();
            acc += phase * p.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    /// pmf of the sum of independent variables.
    pub fn convolve(&self, other: &FiniteDistribution) -> FiniteDistribution {
        let f = self.to_char_poly().mul(&other.to_char_poly());
        FiniteDistribution {
            probs: f.coeffs().to_vec(),
        }
    }

    /// n-fold self-convolution.
    pub fn convolve_n(&self, n: u32) -> FiniteDistribution {
        assert!(n >= 1);
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.convolve(self);
        }
        acc
    }

    /// Exact sup-norm distance between pmfs, compared index-wise with zero
    /// padding.
    pub fn sup_distance(&self, other: &FiniteDistribution) -> Rational {
        let n = self.probs.len().max(other.probs.len());
        (0..n)
            .map(|k| (self.prob(k) - other.prob(k)).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Upper-triangular Toeplitz transition matrix P_ij = p(j - i).
    pub fn transition_matrix(&self, size: usize) -> RationalMatrix {
        assert!(size >= 1);
        let mut m = RationalMatrix::zeros(size);
        for i in 0..size {
            for j in i..size {
                *m.get_mut(i, j) = self.prob(j - i);
            }
        }
        m
    }
}

/// Norm specification on the coefficient space of degree-N characteristic
/// polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormSpec {
    pub bound: usize,
    pub order: NormOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormOrder {
    One,
    Two,
    Sup,
}

/// l^p norm of the coefficient vector padded to length N+1.
pub fn poly_norm(f: &Poly, spec: NormSpec) -> Result<f64, DistError> {
    let degree = if f.is_zero() { 0 } else { f.degree() };
    if degree > spec.bound {
        return Err(DistError::DegreeExceedsBound {
            degree,
            bound: spec.bound,
        });
    }
    let coeffs = f.coeffs();
    Ok(match spec.order {
        NormOrder::One => to_f64(&coeffs.iter().map(|c| c.abs()).sum::<Rational>()),
        NormOrder::Two => coeffs
            .iter()
            .map(|c| to_f64(c).powi(2))
            .sum::<f64>()
            .sqrt(),
        NormOrder::Sup => to_f64(
            &coeffs
                .iter()
                .map(|c| c.abs())
                .max()
                .unwrap_or_else(Rational::zero),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use num::traits::One;

    #[test]
    fn normalize_rescales_and_shifts() {
        let (d, shift) = FiniteDistribution::normalize(&[int(2), int(1), int(1)]).unwrap();
        assert_eq!(d.probs(), &[ratio(1, 2), ratio(1, 4), ratio(1, 4)]);
        assert_eq!(shift, 0);

        let (d, shift) = FiniteDistribution::normalize(&[int(0), int(1), int(1)]).unwrap();
        assert_eq!(d.probs(), &[ratio(1, 2), ratio(1, 2)]);
        assert_eq!(shift, 1);

        let (d, shift) = FiniteDistribution::normalize(&[int(3)]).unwrap();
        assert_eq!(d.probs(), &[int(1)]);
        assert_eq!(shift, 0);
    }

    #[test]
    fn normalize_error_cases() {
        assert_eq!(
            FiniteDistribution::normalize(&[int(0), int(0)]),
            Err(DistError::AllZero)
        );
        assert_eq!(
            FiniteDistribution::normalize(&[int(1), int(-1)]),
            Err(DistError::NegativeMass(1))
        );
    }

    #[test]
    fn char_poly_roundtrip() {
        let d = FiniteDistribution::from_i64(&[1, 2, 1]);
        let f = d.to_char_poly();
        let (back, shift) = FiniteDistribution::from_char_poly(&f).unwrap();
        assert_eq!(back, d);
        assert_eq!(shift, 0);

        let (d, _) = FiniteDistribution::from_char_poly(&Poly::from_i64(&[1, 1])).unwrap();
        assert_eq!(d.probs(), &[ratio(1, 2), ratio(1, 2)]);

        assert_eq!(
            FiniteDistribution::from_char_poly(&Poly::from_i64(&[1, -1])),
            Err(DistError::NegativeCoefficient(1))
        );
    }

    #[test]
    fn characteristic_function_values() {
        let d = FiniteDistribution::from_i64(&[1, 1]);
        let at0 = d.eval_characteristic(0.0);
        assert!((at0 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let atpi = d.eval_characteristic(std::f64::consts::PI);
        assert!(atpi.norm() < 1e-12);
        let c = FiniteDistribution::from_i64(&[1]);
        assert!((c.eval_characteristic(2.7) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn characteristic_function_bounded_by_one() {
        let d = FiniteDistribution::from_i64(&[3, 1, 4, 1, 5]);
        for k in 0..50 {
            let omega = k as f64 * 0.37;
            assert!(d.eval_characteristic(omega).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn norms() {
        let f = Poly::new(vec![ratio(1, 4), ratio(1, 2), ratio(1, 4)]);
        let sup = poly_norm(
            &f,
            NormSpec {
                bound: 2,
                order: NormOrder::Sup,
            },
        )
        .unwrap();
        assert_eq!(sup, 0.5);
        let one = poly_norm(
            &f,
            NormSpec {
                bound: 2,
                order: NormOrder::One,
            },
        )
        .unwrap();
        assert_eq!(one, 1.0);
        let two = poly_norm(
            &Poly::one(),
            NormSpec {
                bound: 3,
                order: NormOrder::Two,
            },
        )
        .unwrap();
        assert_eq!(two, 1.0);
        assert!(poly_norm(
            &f,
            NormSpec {
                bound: 1,
                order: NormOrder::One
            }
        )
        .is_err());
    }

    #[test]
    fn convolution_examples() {
        let b = FiniteDistribution::from_i64(&[1, 1]);
        assert_eq!(b.convolve(&b), FiniteDistribution::from_i64(&[1, 2, 1]));
        let spread = FiniteDistribution::from_i64(&[1, 0, 1]);
        assert_eq!(
            b.convolve(&spread),
            FiniteDistribution::from_i64(&[1, 1, 1, 1])
        );
        let unit = FiniteDistribution::from_i64(&[1]);
        let d = FiniteDistribution::from_i64(&[2, 5, 3]);
        assert_eq!(d.convolve(&unit), d);
    }

    #[test]
    fn transition_matrix_structure() {
        let d = FiniteDistribution::from_i64(&[1, 1]);
        let p = d.transition_matrix(3);
        let expected = RationalMatrix::from_rows(vec![
            vec![ratio(1, 2), ratio(1, 2), int(0)],
            vec![int(0), ratio(1, 2), ratio(1, 2)],
            vec![int(0), int(0), ratio(1, 2)],
        ])
        .unwrap();
        assert_eq!(p, expected);

        let unit = FiniteDistribution::from_i64(&[1]);
        assert_eq!(unit.transition_matrix(2), RationalMatrix::identity(2));
    }

    #[test]
    fn transition_matrix_iterates_convolution() {
        // (1,0,...) P^2 reproduces the two-fold convolution truncated to size.
        let d = FiniteDistribution::from_i64(&[1, 1]);
        let p = d.transition_matrix(3);
        let p2 = p.square();
        let conv = d.convolve(&d);
        for j in 0..3 {
            assert_eq!(*p2.get(0, j), conv.prob(j));
        }
    }

    #[test]
    fn transition_matrix_stochastic_when_wide_enough() {
        let d = FiniteDistribution::from_i64(&[1, 2, 1]);
        let p = d.transition_matrix(d.support_width() + 1);
        assert!(p.row_sums().iter().take(1).all(|s| s.is_one()));
    }
}
