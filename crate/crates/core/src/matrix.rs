//! Dense square matrices over exact rationals, the stochastic/nonnegative
//! classification predicates, and the block lift that turns a nonnegative
//! root search into a (doubly) stochastic one.

use crate::rational::{int, ratio, Rational};
use ndarray::Array2;
use num::traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("matrix has no positive entry")]
    NoPositiveEntry,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("entry count {got} does not form a {dim}x{dim} matrix")]
    BadShape { dim: usize, got: usize },
}

#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    dim: usize,
    entries: Vec<Rational>,
}

/// Exact classification flags per the stochasticity definitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixClass {
    pub nonnegative: bool,
    pub stochastic: bool,
    pub doubly_stochastic: bool,
}

impl std::fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| crate::rational::format_rational(self.get(i, j)))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl RationalMatrix {
    pub fn new(dim: usize, entries: Vec<Rational>) -> Result<Self, MatrixError> {
        if entries.len() != dim * dim {
            return Err(MatrixError::BadShape {
                dim,
                got: entries.len(),
            });
        }
        Ok(RationalMatrix { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        RationalMatrix {
            dim,
            entries: vec![Rational::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            *m.get_mut(i, i) = Rational::from_integer(1.into());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, MatrixError> {
        let dim = rows.len();
        let entries: Vec<Rational> = rows.into_iter().flatten().collect();
        Self::new(dim, entries)
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let dim = rows.len();
        let entries = rows.iter().flat_map(|r| r.iter().map(|&x| int(x))).collect();
        Self::new(dim, entries).expect("square literal")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.dim + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Rational {
        &mut self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn mul(&self, other: &RationalMatrix) -> Result<RationalMatrix, MatrixError> {
        if self.dim != other.dim {
            return Err(MatrixError::DimensionMismatch(self.dim, other.dim));
        }
        let d = self.dim;
        let mut out = RationalMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let t = a * other.get(k, j);
                    *out.get_mut(i, j) += t;
                }
            }
        }
        Ok(out)
    }

    pub fn square(&self) -> RationalMatrix {
        self.mul(self).expect("same dim")
    }

    pub fn sub(&self, other: &RationalMatrix) -> Result<RationalMatrix, MatrixError> {
        if self.dim != other.dim {
            return Err(MatrixError::DimensionMismatch(self.dim, other.dim));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(RationalMatrix {
            dim: self.dim,
            entries,
        })
    }

    pub fn max_abs_entry(&self) -> Rational {
        self.entries
            .iter()
            .map(|e| e.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn max_entry(&self) -> Rational {
        self.entries
            .iter()
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn min_entry(&self) -> Rational {
        self.entries
            .iter()
            .min()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).clone()).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<Rational> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).clone()).sum())
            .collect()
    }

    pub fn classify(&self) -> MatrixClass {
        let one = Rational::from_integer(1.into());
        let nonnegative = self.entries.iter().all(|e| !e.is_negative());
        let rows_one = self.row_sums().iter().all(|s| *s == one);
        let cols_one = self.col_sums().iter().all(|s| *s == one);
        MatrixClass {
            nonnegative,
            stochastic: nonnegative && rows_one,
            doubly_stochastic: nonnegative && rows_one && cols_one,
        }
    }

    pub fn to_f64(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.dim, self.dim), |(i, j)| {
            self.get(i, j).to_f64().unwrap_or(f64::NAN)
        })
    }

    pub fn scale(&self, c: &Rational) -> RationalMatrix {
        RationalMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * c).collect(),
        }
    }
}

/// Result of the nonnegative-to-stochastic block lift.
#[derive(Debug, Clone)]
pub struct LiftResult {
    pub lifted: RationalMatrix,
    pub scale: Rational,
}

/// Upper bound on the admissible `a * max(M)` value; the default policy uses
/// 1/2, the sharp constant is 43/81.
pub const LIFT_SHARP_BOUND: (i64, i64) = (43, 81);

fn lift_blocks(m: &RationalMatrix, a: &Rational) -> [[(i64, i64); 3]; 3] {
    let _ = (m, a);
    // (coefficient on a*M, additive constant) per 3x3 block, over 1764 d.
    [
        [(1764, 637), (-1260, 735), (-504, 392)],
        [(-1260, 735), (900, 1029), (360, 0)],
        [(-504, 392), (360, 0), (144, 1372)],
    ]
}

/// Embeds a d-dimensional matrix with at least one positive entry into a
/// 3d-dimensional matrix whose row and column sums are exactly 1 and which is
/// nonnegative exactly when the input is. `a_times_max` is the target value
/// of `a * max(M)` (default 1/2, must stay below 43/81).
pub fn lift_nonneg_to_stochastic(
    m: &RationalMatrix,
    a_times_max: Option<Rational>,
) -> Result<LiftResult, MatrixError> {
    let max = m.max_entry();
    if !max.is_positive() {
        return Err(MatrixError::NoPositiveEntry);
    }
    let target = a_times_max.unwrap_or_else(|| ratio(1, 2));
    assert!(
        target.is_positive() && target < ratio(LIFT_SHARP_BOUND.0, LIFT_SHARP_BOUND.1),
        "a*max must lie in (0, 43/81)"
    );
    let a = &target / &max;
    let d = m.dim();
    let denom = int(1764 * d as i64);
    let blocks = lift_blocks(m, &a);
    let mut out = RationalMatrix::zeros(3 * d);
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, &(coeff, cons)) in row.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    let value = (&a * m.get(i, j) * int(coeff) + int(cons)) / &denom;
                    *out.get_mut(bi * d + i, bj * d + j) = value;
                }
            }
        }
    }
    Ok(LiftResult {
        lifted: out,
        scale: a,
    })
}

/// The exact square of the lifted matrix, assembled directly from the
/// orthogonal-vector identity rather than by multiplying the lift out:
/// `(a^2/d^2)(78/49) AA^T (x) M^2 + (1/d)(13/18 BB^T + CC^T) (x) ones`.
pub fn lifted_square(
    m: &RationalMatrix,
    a_times_max: Option<Rational>,
) -> Result<RationalMatrix, MatrixError> {
    let max = m.max_entry();
    if !max.is_positive() {
        return Err(MatrixError::NoPositiveEntry);
    }
    let target = a_times_max.unwrap_or_else(|| ratio(1, 2));
    let a = &target / &max;
    let d = m.dim();
    let m2 = m.square();
    // AA^T, BB^T as exact rationals; CC^T is ones/3.
    let av = [int(1), ratio(-5, 7), ratio(-2, 7)];
    let bv = [ratio(1, 6), ratio(1, 2), ratio(-2, 3)];
    let coeff_m2 = &a * &a / int((d * d) as i64) * ratio(78, 49);
    let coeff_ones = ratio(1, 1) / int(d as i64);
    let mut out = RationalMatrix::zeros(3 * d);
    for bi in 0..3 {
        for bj in 0..3 {
            let aat = &av[bi] * &av[bj];
            let bbt = &bv[bi] * &bv[bj];
            let cct = ratio(1, 3);
            let ones_part = &coeff_ones * (ratio(13, 18) * bbt + cct);
            let m2_part = &coeff_m2 * aat;
            for i in 0..d {
                for j in 0..d {
                    *out.get_mut(bi * d + i, bj * d + j) =
                        &m2_part * m2.get(i, j) + &ones_part;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::traits::One;

    #[test]
    fn classify_flags() {
        let p = RationalMatrix::from_rows(vec![
            vec![ratio(1, 2), ratio(1, 2)],
            vec![ratio(1, 4), ratio(3, 4)],
        ])
        .unwrap();
        let c = p.classify();
        assert!(c.stochastic && !c.doubly_stochastic);

        let n = RationalMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        let c = n.classify();
        assert!(c.nonnegative && !c.stochastic);

        let d = RationalMatrix::from_rows(vec![
            vec![ratio(1, 2), ratio(1, 2)],
            vec![ratio(1, 2), ratio(1, 2)],
        ])
        .unwrap();
        assert!(d.classify().doubly_stochastic);
    }

    #[test]
    fn lift_of_unit_scalar_matches_block_formula() {
        // M = (1), a = 1/2: evaluate the explicit blocks at aM = 1/2.
        let m = RationalMatrix::from_i64(&[&[1]]);
        let lift = lift_nonneg_to_stochastic(&m, None).unwrap();
        let expected = [
            [1519i64, 105, 140],
            [105, 1479, 180],
            [140, 180, 1444],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(*lift.lifted.get(i, j), ratio(expected[i][j], 1764));
            }
        }
    }

    #[test]
    fn lift_sums_are_exactly_one() {
        let m = RationalMatrix::from_rows(vec![
            vec![ratio(1, 3), ratio(-2, 5)],
            vec![ratio(7, 2), ratio(0, 1)],
        ])
        .unwrap();
        let lift = lift_nonneg_to_stochastic(&m, None).unwrap();
        for s in lift.lifted.row_sums() {
            assert!(s.is_one());
        }
        for s in lift.lifted.col_sums() {
            assert!(s.is_one());
        }
    }

    #[test]
    fn lift_detects_negative_entries() {
        let m = RationalMatrix::from_rows(vec![
            vec![ratio(1, 1), ratio(-1, 100)],
            vec![ratio(0, 1), ratio(1, 2)],
        ])
        .unwrap();
        let lift = lift_nonneg_to_stochastic(&m, None).unwrap();
        assert!(!lift.lifted.classify().nonnegative);
        assert!(!lift.lifted.classify().stochastic);
    }

    #[test]
    fn lifted_square_agrees_with_squaring_the_lift() {
        let m = RationalMatrix::from_rows(vec![
            vec![ratio(2, 3), ratio(1, 5)],
            vec![ratio(-1, 7), ratio(4, 9)],
        ])
        .unwrap();
        let lift = lift_nonneg_to_stochastic(&m, None).unwrap();
        let direct = lift.lifted.square();
        let formula = lifted_square(&m, None).unwrap();
        assert_eq!(direct, formula);
    }
}
