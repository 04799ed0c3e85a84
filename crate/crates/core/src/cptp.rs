//! The classical-to-quantum embedding, Choi matrices, the exact CPTP
//! membership test, and CPTP root search through the shared primary-root
//! machinery.
//!
//! For matrices with exact rational (real or complex) entries — which covers
//! everything the embedding pipeline produces — complete positivity is
//! decided exactly by a pivoted LDL* factorization of the Choi matrix and
//! trace preservation by exact partial traces. Only the eigenpair seeds of
//! the root search are floating point.

use crate::matrix::RationalMatrix;
use crate::rational::{int, CRat, Rational};
use crate::roots::{enumerate_roots_cmat, CMat, RootError, RootOptions};
use num::traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CptpError {
    #[error("matrix dimension {0} is not a perfect square")]
    NotSquareDimension(usize),
    #[error(transparent)]
    Root(#[from] RootError),
}

fn side_of(dim: usize) -> Result<usize, CptpError> {
    let side = (dim as f64).sqrt().round() as usize;
    if side * side != dim {
        return Err(CptpError::NotSquareDimension(dim));
    }
    Ok(side)
}

/// Embeds a d x d matrix into d^2 x d^2: B[(i,i),(j,j)] = A[i,j], zero
/// elsewhere, with the composite index (i,k) flattened as i*d + k.
pub fn emb(a: &RationalMatrix) -> RationalMatrix {
    let d = a.dim();
    let mut b = RationalMatrix::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            *b.get_mut(i * d + i, j * d + j) = a.get(i, j).clone();
        }
    }
    b
}

/// The reshuffling realization of the Choi matrix: C[(a,c),(b,d)] =
/// B[(a,b),(c,d)]. Applying it twice returns B.
pub fn choi(b: &CMat) -> Result<CMat, CptpError> {
    let d = side_of(b.dim)?;
    let mut c = CMat::zeros(b.dim);
    for ia in 0..d {
        for ib in 0..d {
            for ic in 0..d {
                for id in 0..d {
                    *c.get_mut(ia * d + ic, ib * d + id) =
                        b.get(ia * d + ib, ic * d + id).clone();
                }
            }
        }
    }
    Ok(c)
}

/// Partial trace over the second tensor factor: out[i,j] = sum_k C[(i,k),(j,k)].
pub fn tr2(c: &CMat) -> Result<CMat, CptpError> {
    let d = side_of(c.dim)?;
    let mut out = CMat::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = CRat::zero();
            for k in 0..d {
                acc = acc.add(c.get(i * d + k, j * d + k));
            }
            *out.get_mut(i, j) = acc;
        }
    }
    Ok(out)
}

/// Exact positive semidefiniteness of a Hermitian matrix via pivoted LDL*:
/// repeatedly pivot on the largest diagonal entry and take the Schur
/// complement; a Hermitian matrix with nonpositive diagonal is PSD only if
/// it vanishes.
pub fn hermitian_psd(m: &CMat) -> bool {
    let mut work = m.clone();
    let mut active: Vec<usize> = (0..m.dim).collect();
    while !active.is_empty() {
        let (pivot_idx, pivot_diag) = active
            .iter()
            .map(|&i| (i, work.get(i, i).re.clone()))
            .max_by(|a, b| a.1.cmp(&b.1))
            .expect("nonempty active set");
        if !pivot_diag.is_positive() {
            // All diagonals <= 0: PSD iff the active block is zero.
            return active
                .iter()
                .all(|&i| active.iter().all(|&j| work.get(i, j).is_zero()));
        }
        active.retain(|&i| i != pivot_idx);
        let pivot = CRat::real(pivot_diag);
        let col: Vec<(usize, CRat)> = active
            .iter()
            .map(|&i| (i, work.get(i, pivot_idx).clone()))
            .collect();
        for (i, ci) in &col {
            for (j, cj) in &col {
                let adjust = ci.mul(&cj.conj()).div(&pivot);
                *work.get_mut(*i, *j) = work.get(*i, *j).sub(&adjust);
            }
        }
    }
    true
}

/// Report from the exact CPTP membership test.
#[derive(Debug, Clone)]
pub struct CptpReport {
    pub completely_positive: bool,
    pub trace_preserving: bool,
    /// Max deviation of the Choi matrix from Hermiticity.
    pub hermiticity_deviation: Rational,
    /// Max deviation of tr_2(Choi) from the identity.
    pub trace_deviation: Rational,
}

impl CptpReport {
    pub fn is_cptp(&self) -> bool {
        self.completely_positive && self.trace_preserving
    }
}

/// True iff the Choi matrix of B is positive semidefinite up to `tol` (its
/// Hermitian part shifted by tol stays PSD) and tr_2 of the Choi matrix is
/// the identity within `tol`.
pub fn is_cptp(b: &CMat, tol: &Rational) -> Result<CptpReport, CptpError> {
    let c = choi(b)?;
    let dim = c.dim;
    let mut herm = CMat::zeros(dim);
    let mut herm_dev = Rational::zero();
    for i in 0..dim {
        for j in 0..dim {
            let upper = c.get(i, j);
            let lower = c.get(j, i).conj();
            let dev_sq = upper.sub(&lower).norm_sqr();
            let dev = crate::rational::nth_root_bounds(&dev_sq, 2, 32).1;
            if dev > herm_dev {
                herm_dev = dev;
            }
            let avg = upper.add(&lower);
            *herm.get_mut(i, j) = CRat::new(avg.re / int(2), avg.im / int(2));
        }
    }
    let mut shifted = herm.clone();
    for i in 0..dim {
        *shifted.get_mut(i, i) = shifted.get(i, i).add(&CRat::real(tol.clone()));
    }
    let cp = herm_dev <= *tol && hermitian_psd(&shifted);
    let t2 = tr2(&c)?;
    let side = t2.dim;
    let mut trace_dev = Rational::zero();
    for i in 0..side {
        for j in 0..side {
            let mut e = t2.get(i, j).clone();
            if i == j {
                e = e.sub(&CRat::one());
            }
            let dev_sq = e.norm_sqr();
            let dev = crate::rational::nth_root_bounds(&dev_sq, 2, 32).1;
            if dev > trace_dev {
                trace_dev = dev;
            }
        }
    }
    Ok(CptpReport {
        completely_positive: cp,
        trace_preserving: trace_dev <= *tol,
        hermiticity_deviation: herm_dev,
        trace_deviation: trace_dev,
    })
}

/// An accepted CPTP root with its exact verification margin.
#[derive(Debug, Clone)]
pub struct CptpRoot {
    pub matrix: CMat,
    pub branch: u64,
    pub deviation: Rational,
}

/// Scans the primary root family of B for a CPTP member. A non-CPTP input is
/// an immediate No.
pub fn find_cptp_root(b: &CMat, opts: &RootOptions) -> Result<Option<CptpRoot>, CptpError> {
    side_of(b.dim)?;
    if !is_cptp(b, &opts.tol)?.is_cptp() {
        return Ok(None);
    }
    let nonneg = b
        .entries
        .iter()
        .all(|e| e.im.is_zero() && !e.re.is_negative());
    let family = enumerate_roots_cmat(b, nonneg, opts)?;
    for idx in 0..family.branch_count() {
        let branch = family.branch(idx);
        if !is_cptp(&branch, &opts.tol)?.is_cptp() {
            continue;
        }
        let square = branch.mul(&branch, opts.precision_bits);
        let deviation_sq = square
            .entries
            .iter()
            .zip(&b.entries)
            .map(|(x, y)| x.sub(y).norm_sqr())
            .max()
            .unwrap_or_else(Rational::zero);
        let deviation = crate::rational::nth_root_bounds(&deviation_sq, 2, 32).1;
        if deviation <= opts.tol {
            return Ok(Some(CptpRoot {
                matrix: branch,
                branch: idx,
                deviation,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use ndarray_linalg::Eig;

    fn cmat_of(m: &RationalMatrix) -> CMat {
        CMat::from_rational(m)
    }

    #[test]
    fn emb_places_entries_on_the_diagonal_lattice() {
        let a = RationalMatrix::from_i64(&[&[0, 1], &[1, 0]]);
        let b = emb(&a);
        assert_eq!(*b.get(0, 3), int(1));
        assert_eq!(*b.get(3, 0), int(1));
        let nonzero: usize = b.entries().iter().filter(|e| !e.is_zero()).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn choi_of_embedding_is_diagonal_with_the_entries() {
        let a = RationalMatrix::from_rows(vec![
            vec![ratio(1, 2), ratio(1, 2)],
            vec![ratio(1, 4), ratio(3, 4)],
        ])
        .unwrap();
        let c = choi(&cmat_of(&emb(&a))).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let diag = c.get(i * 2 + j, i * 2 + j);
                assert_eq!(diag.re, *a.get(i, j));
            }
        }
        assert!(c.get(0, 1).is_zero() && c.get(1, 2).is_zero());
    }

    #[test]
    fn choi_is_an_involution() {
        let a = RationalMatrix::from_i64(&[&[1, 2], &[3, 4]]);
        let b = cmat_of(&emb(&a));
        let twice = choi(&choi(&b).unwrap()).unwrap();
        assert_eq!(twice.entries, b.entries);
        assert!(matches!(
            choi(&CMat::zeros(3)),
            Err(CptpError::NotSquareDimension(3))
        ));
    }

    #[test]
    fn tr2_gives_row_sums_on_the_diagonal() {
        let a = RationalMatrix::from_i64(&[&[1, 2], &[3, 4]]);
        let t = tr2(&choi(&cmat_of(&emb(&a))).unwrap()).unwrap();
        assert_eq!(t.get(0, 0).re, int(3));
        assert_eq!(t.get(1, 1).re, int(7));
        assert!(t.get(0, 1).is_zero());
    }

    #[test]
    fn cptp_test_examples() {
        let tol = ratio(1, 1_000_000_000);
        let stochastic = RationalMatrix::from_rows(vec![
            vec![ratio(1, 2), ratio(1, 2)],
            vec![ratio(1, 4), ratio(3, 4)],
        ])
        .unwrap();
        let report = is_cptp(&cmat_of(&emb(&stochastic)), &tol).unwrap();
        assert!(report.is_cptp());

        // Mixed-sign entry: negative Choi eigenvalue.
        let mixed = RationalMatrix::from_rows(vec![
            vec![int(1), ratio(-1, 10)],
            vec![int(0), ratio(11, 10)],
        ])
        .unwrap();
        let report = is_cptp(&cmat_of(&emb(&mixed)), &tol).unwrap();
        assert!(!report.completely_positive);

        // Nonnegative but not row-normalized: CP without TP.
        let nn = RationalMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        let report = is_cptp(&cmat_of(&emb(&nn)), &tol).unwrap();
        assert!(report.completely_positive && !report.trace_preserving);
    }

    #[test]
    fn psd_transfer_is_exact() {
        let cases: &[(&[&[i64]], bool)] = &[
            (&[&[1, 0], &[2, 3]], true),
            (&[&[1, -1], &[2, 3]], false),
        ];
        for (rows, expect) in cases {
            let a = RationalMatrix::from_i64(rows);
            let c = choi(&cmat_of(&emb(&a))).unwrap();
            assert_eq!(hermitian_psd(&c), *expect);
        }
    }

    #[test]
    fn spectrum_of_embedding_contains_only_input_eigenvalues_and_zero() {
        let a = RationalMatrix::from_rows(vec![
            vec![ratio(1, 2), ratio(1, 2)],
            vec![ratio(1, 8), ratio(7, 8)],
        ])
        .unwrap();
        let b = emb(&a);
        let (vals_a, _) = a.to_f64().eig().unwrap();
        let (vals_b, _) = b.to_f64().eig().unwrap();
        for vb in vals_b.iter() {
            let near_zero = vb.norm() < 1e-9;
            let near_a = vals_a.iter().any(|va| (va - vb).norm() < 1e-9);
            assert!(near_zero || near_a, "eigenvalue {vb} escaped");
        }
    }

    #[test]
    fn cptp_root_follows_the_stochastic_side() {
        let opts = RootOptions::default();
        let q = RationalMatrix::from_rows(vec![
            vec![ratio(9, 10), ratio(1, 10)],
            vec![ratio(1, 5), ratio(4, 5)],
        ])
        .unwrap();
        let p = q.square();
        let b = cmat_of(&emb(&p));
        let root = find_cptp_root(&b, &opts).unwrap().unwrap();
        assert!(is_cptp(&root.matrix, &opts.tol).unwrap().is_cptp());
        assert!(root.deviation <= opts.tol);

        // The swap has no stochastic root, so its embedding has no CPTP one.
        let swap = RationalMatrix::from_i64(&[&[0, 1], &[1, 0]]);
        assert!(find_cptp_root(&cmat_of(&emb(&swap)), &opts)
            .unwrap()
            .is_none());

        // Non-CPTP input: immediate No.
        let nn = RationalMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        assert!(find_cptp_root(&cmat_of(&emb(&nn)), &opts)
            .unwrap()
            .is_none());
    }
}
