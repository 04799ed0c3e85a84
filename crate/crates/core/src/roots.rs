//! Square roots of matrices with distinct nonzero eigenvalues: the full
//! primary family Z diag(+-sqrt(lambda)) Z^-1, searched for stochastic or
//! nonnegative members.
//!
//! Eigenpairs are seeded by LAPACK in double precision and polished by
//! Newton iteration in exact dyadic arithmetic at the configured working
//! precision; every accepted root is re-verified against its target before
//! it is reported. Zero eigenvalues (up to tolerance) collapse to a single
//! fixed branch, and the Perron eigenvalue of a nonnegative input is pinned
//! to the positive square root, which halves the enumeration without losing
//! any nonnegative root.

use crate::matrix::RationalMatrix;
use crate::rational::{int, nth_root_bounds, ratio, round_dyadic, CRat, Rational};
use ndarray::Array2;
use ndarray_linalg::Eig;
use num::complex::Complex64;
use num::traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RootError {
    #[error("eigenvalue separation {gap:.3e} below tolerance; spectrum treated as degenerate")]
    DegenerateSpectrum { gap: f64 },
    #[error("input matrix is not stochastic")]
    NotStochasticInput,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not diagonalizable at working precision")]
    NotDiagonalizable,
    #[error("eigendecomposition failed")]
    EigFailed,
}

#[derive(Debug, Clone)]
pub struct RootOptions {
    /// Acceptance tolerance for realness, sign and verification checks.
    pub tol: Rational,
    /// Relative eigenvalue magnitude below which a value counts as zero.
    pub zero_tol: f64,
    /// Minimum relative separation between distinct nonzero eigenvalues.
    pub sep_tol: f64,
    /// Dyadic working precision for the refinement and branch assembly.
    pub precision_bits: u32,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            tol: ratio(1, 1_000_000_000),
            zero_tol: 1e-9,
            sep_tol: 1e-7,
            precision_bits: 128,
        }
    }
}

/// Dense complex matrix in exact dyadic arithmetic.
#[derive(Debug, Clone)]
pub struct CMat {
    pub dim: usize,
    pub entries: Vec<CRat>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat {
            dim,
            entries: vec![CRat::zero(); dim * dim],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &CRat {
        &self.entries[i * self.dim + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut CRat {
        &mut self.entries[i * self.dim + j]
    }

    pub fn from_rational(m: &RationalMatrix) -> Self {
        CMat {
            dim: m.dim(),
            entries: m.entries().iter().map(|e| CRat::real(e.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &CMat, bits: u32) -> CMat {
        let d = self.dim;
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let t = a.mul(other.get(k, j));
                    *out.get_mut(i, j) = out.get(i, j).add(&t);
                }
            }
        }
        for e in &mut out.entries {
            *e = e.round(bits);
        }
        out
    }

    pub fn to_f64(&self) -> Array2<Complex64> {
        Array2::from_shape_fn((self.dim, self.dim), |(i, j)| {
            let (re, im) = self.get(i, j).to_f64();
            Complex64::new(re, im)
        })
    }

    /// Max |Im| over entries, exact.
    pub fn max_imag(&self) -> Rational {
        self.entries
            .iter()
            .map(|e| e.im.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Real parts as exact rationals.
    pub fn real_part(&self) -> RationalMatrix {
        RationalMatrix::new(self.dim, self.entries.iter().map(|e| e.re.clone()).collect())
            .expect("square")
    }
}

/// Gaussian elimination inverse over exact complex dyadics.
fn cmat_inverse(m: &CMat, bits: u32) -> Option<CMat> {
    let d = m.dim;
    let mut a = m.clone();
    let mut inv = CMat::zeros(d);
    for i in 0..d {
        *inv.get_mut(i, i) = CRat::one();
    }
    for col in 0..d {
        let pivot_row = (col..d).max_by(|&r1, &r2| {
            a.get(r1, col)
                .norm_sqr()
                .cmp(&a.get(r2, col).norm_sqr())
        })?;
        if a.get(pivot_row, col).is_zero() {
            return None;
        }
        if pivot_row != col {
            for j in 0..d {
                a.entries.swap(col * d + j, pivot_row * d + j);
                inv.entries.swap(col * d + j, pivot_row * d + j);
            }
        }
        let piv = a.get(col, col).clone();
        for j in 0..d {
            *a.get_mut(col, j) = a.get(col, j).div(&piv).round(bits);
            *inv.get_mut(col, j) = inv.get(col, j).div(&piv).round(bits);
        }
        for row in 0..d {
            if row == col || a.get(row, col).is_zero() {
                continue;
            }
            let factor = a.get(row, col).clone();
            for j in 0..d {
                let ta = a.get(col, j).mul(&factor);
                *a.get_mut(row, j) = a.get(row, j).sub(&ta).round(bits);
                let ti = inv.get(col, j).mul(&factor);
                *inv.get_mut(row, j) = inv.get(row, j).sub(&ti).round(bits);
            }
        }
    }
    Some(inv)
}

/// Principal complex square root at dyadic precision.
fn csqrt(z: &CRat, bits: u32) -> CRat {
    if z.is_zero() {
        return CRat::zero();
    }
    let norm = z.norm_sqr();
    let (lo, hi) = nth_root_bounds(&norm, 2, bits + 8);
    let modulus = round_dyadic(&((lo + hi) / int(2)), bits + 8);
    let half = |x: &Rational| -> Rational {
        let mut v = x.clone();
        if v.is_negative() {
            v = Rational::zero();
        }
        let (lo, hi) = nth_root_bounds(&(v / int(2)), 2, bits + 8);
        round_dyadic(&((lo + hi) / int(2)), bits)
    };
    let re = half(&(&modulus + &z.re));
    let mut im = half(&(&modulus - &z.re));
    if z.im.is_negative() {
        im = -im;
    }
    CRat::new(re, im)
}

/// Solve the bordered Newton system refining one eigenpair of the exact
/// matrix `a`: unknowns (v, lambda) with the normalization v[anchor] = 1.
fn refine_eigenpair(
    a: &CMat,
    lambda: &mut CRat,
    v: &mut Vec<CRat>,
    bits: u32,
    iterations: u32,
) {
    let d = a.dim;
    let anchor = (0..d)
        .max_by(|&i, &j| v[i].norm_sqr().cmp(&v[j].norm_sqr()))
        .unwrap();
    let anchor_value = v[anchor].clone();
    if anchor_value.is_zero() {
        return;
    }
    for x in v.iter_mut() {
        *x = x.div(&anchor_value).round(bits);
    }
    for _ in 0..iterations {
        // F = [A v - lambda v ; v[anchor] - 1]
        let mut f: Vec<CRat> = (0..d)
            .map(|i| {
                let mut acc = CRat::zero();
                for j in 0..d {
                    acc = acc.add(&a.get(i, j).mul(&v[j]));
                }
                acc.sub(&lambda.mul(&v[i])).round(bits)
            })
            .collect();
        f.push(v[anchor].sub(&CRat::one()));
        // J = [[A - lambda I, -v], [e_anchor^T, 0]]
        let n = d + 1;
        let mut jac = CMat::zeros(n);
        for i in 0..d {
            for j in 0..d {
                let mut e = a.get(i, j).clone();
                if i == j {
                    e = e.sub(lambda);
                }
                *jac.get_mut(i, j) = e;
            }
            *jac.get_mut(i, d) = CRat::zero().sub(&v[i]);
        }
        *jac.get_mut(d, anchor) = CRat::one();
        let Some(jinv) = cmat_inverse(&jac, bits) else {
            return;
        };
        let mut delta: Vec<CRat> = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = CRat::zero();
            for j in 0..n {
                acc = acc.add(&jinv.get(i, j).mul(&f[j]));
            }
            delta.push(acc.round(bits));
        }
        for i in 0..d {
            v[i] = v[i].sub(&delta[i]).round(bits);
        }
        *lambda = lambda.sub(&delta[d]).round(bits);
    }
}

/// The primary square-root family of a matrix with pairwise-distinct nonzero
/// eigenvalues.
#[derive(Debug, Clone)]
pub struct RootFamily {
    pub dim: usize,
    pub eigenvalues: Vec<CRat>,
    /// Principal square root per eigenvalue; exactly zero on the kernel.
    sqrts: Vec<CRat>,
    z: CMat,
    z_inv: CMat,
    /// Eigenvalue indices whose sign is enumerated.
    free: Vec<usize>,
    /// Index of the Perron eigenvalue when its sign was pinned.
    pub perron: Option<usize>,
    bits: u32,
}

impl RootFamily {
    pub fn branch_count(&self) -> u64 {
        1u64 << self.free.len()
    }

    /// Branch matrix for the given sign index: bit b of `idx` flips the sign
    /// of the square root of the b-th free eigenvalue.
    pub fn branch(&self, idx: u64) -> CMat {
        let d = self.dim;
        let mut signed: Vec<CRat> = self.sqrts.clone();
        for (bit, &eig_idx) in self.free.iter().enumerate() {
            if idx & (1 << bit) != 0 {
                signed[eig_idx] = CRat::zero().sub(&signed[eig_idx]);
            }
        }
        // Z diag(signed) Z^-1.
        let mut scaled = CMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                *scaled.get_mut(i, j) = self.z.get(i, j).mul(&signed[j]).round(self.bits);
            }
        }
        scaled.mul(&self.z_inv, self.bits)
    }

    pub fn branch_f64(&self, idx: u64) -> Array2<Complex64> {
        self.branch(idx).to_f64()
    }
}

/// Eigendecomposition with zero clustering, distinctness checking, Perron
/// pinning and dyadic refinement.
pub fn enumerate_roots(
    m: &RationalMatrix,
    opts: &RootOptions,
) -> Result<RootFamily, RootError> {
    let nonneg = m.classify().nonnegative;
    enumerate_roots_cmat(&CMat::from_rational(m), nonneg, opts)
}

/// Family construction on an exact complex matrix. `nonneg` enables the
/// Perron sign pin (valid when the matrix is entrywise nonnegative).
pub fn enumerate_roots_cmat(
    exact: &CMat,
    nonneg: bool,
    opts: &RootOptions,
) -> Result<RootFamily, RootError> {
    let d = exact.dim;
    let a_f64 = exact.to_f64();
    let (vals, vecs) = a_f64.eig().map_err(|_| RootError::EigFailed)?;
    let scale = vals
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let zero: Vec<bool> = vals.iter().map(|v| v.norm() <= opts.zero_tol * scale).collect();
    for i in 0..d {
        for j in i + 1..d {
            if zero[i] || zero[j] {
                continue;
            }
            let gap = (vals[i] - vals[j]).norm();
            if gap < opts.sep_tol * scale {
                return Err(RootError::DegenerateSpectrum { gap });
            }
        }
    }
    let bits = opts.precision_bits;
    let mut eigenvalues: Vec<CRat> = Vec::with_capacity(d);
    let mut z = CMat::zeros(d);
    for j in 0..d {
        let mut lambda = if zero[j] {
            CRat::zero()
        } else {
            CRat::from_f64(vals[j].re, vals[j].im).ok_or(RootError::EigFailed)?
        };
        let mut v: Vec<CRat> = (0..d)
            .map(|i| CRat::from_f64(vecs[(i, j)].re, vecs[(i, j)].im).unwrap())
            .collect();
        if !zero[j] {
            refine_eigenpair(exact, &mut lambda, &mut v, bits, 3);
        }
        for i in 0..d {
            *z.get_mut(i, j) = v[i].clone();
        }
        eigenvalues.push(lambda);
    }
    let z_inv = cmat_inverse(&z, bits).ok_or(RootError::NotDiagonalizable)?;
    // Diagonalization must actually reproduce the matrix.
    let check = {
        let mut scaled = CMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                *scaled.get_mut(i, j) = z.get(i, j).mul(&eigenvalues[j]).round(bits);
            }
        }
        scaled.mul(&z_inv, bits)
    };
    let max_dev = check
        .entries
        .iter()
        .zip(&exact.entries)
        .map(|(a, b)| a.sub(b).norm_sqr())
        .max()
        .unwrap_or_else(Rational::zero);
    let allowed = {
        let t = Rational::from_float(opts.zero_tol * scale * 16.0).unwrap();
        &t * &t
    };
    if max_dev > allowed {
        return Err(RootError::NotDiagonalizable);
    }

    // Perron pin: for a nonnegative input, the eigenvalue of maximal modulus
    // when real and simple.
    let perron = if nonneg {
        let mut best: Option<usize> = None;
        for (i, v) in vals.iter().enumerate() {
            if zero[i] {
                continue;
            }
            if best.is_none_or(|b| v.norm() > vals[b].norm()) {
                best = Some(i);
            }
        }
        best.filter(|&i| vals[i].im.abs() <= opts.zero_tol * scale && vals[i].re > 0.0)
    } else {
        None
    };
    let sqrts: Vec<CRat> = eigenvalues.iter().map(|l| csqrt(l, bits)).collect();
    let free: Vec<usize> = (0..d)
        .filter(|&i| !zero[i] && Some(i) != perron)
        .collect();
    Ok(RootFamily {
        dim: d,
        eigenvalues,
        sqrts,
        z,
        z_inv,
        free,
        perron,
        bits,
    })
}

/// An accepted root: clamped real matrix, originating branch, and the exact
/// verified deviation of its square from the target.
#[derive(Debug, Clone)]
pub struct FoundRoot {
    pub matrix: RationalMatrix,
    pub branch: u64,
    pub deviation: Rational,
}

fn scan_branches(
    target: &RationalMatrix,
    family: &RootFamily,
    opts: &RootOptions,
    stochastic: bool,
) -> Option<FoundRoot> {
    let tol = &opts.tol;
    for idx in 0..family.branch_count() {
        let branch = family.branch(idx);
        if branch.max_imag() > *tol {
            continue;
        }
        let real = branch.real_part();
        if real.min_entry() < -tol.clone() {
            continue;
        }
        if stochastic {
            let ok_rows = real
                .row_sums()
                .iter()
                .all(|s| (s - int(1)).abs() <= *tol);
            if !ok_rows {
                continue;
            }
        }
        // Clamp negative dust, then verify the square exactly.
        let clamped = RationalMatrix::new(
            real.dim(),
            real.entries()
                .iter()
                .map(|e| if e.is_negative() { Rational::zero() } else { e.clone() })
                .collect(),
        )
        .expect("square");
        let deviation = clamped.square().sub(target).expect("same dim").max_abs_entry();
        if deviation <= *tol {
            return Some(FoundRoot {
                matrix: clamped,
                branch: idx,
                deviation,
            });
        }
    }
    None
}

/// Searches the primary family of the stochastic matrix P for a stochastic
/// root. A non-stochastic input is rejected outright.
pub fn find_stochastic_root(
    p: &RationalMatrix,
    opts: &RootOptions,
) -> Result<Option<FoundRoot>, RootError> {
    if !p.classify().stochastic {
        return Err(RootError::NotStochasticInput);
    }
    let family = enumerate_roots(p, opts)?;
    Ok(scan_branches(p, &family, opts, true))
}

/// Same mechanics without the row-sum requirement.
pub fn find_nonnegative_root(
    m: &RationalMatrix,
    opts: &RootOptions,
) -> Result<Option<FoundRoot>, RootError> {
    let family = enumerate_roots(m, opts)?;
    Ok(scan_branches(m, &family, opts, false))
}

/// Exact margin report for a claimed root Q of P.
#[derive(Debug, Clone)]
pub struct RootMargin {
    pub max_deviation: Rational,
    pub min_entry: Rational,
    pub max_row_sum_deviation: Rational,
}

pub fn verify_root(q: &RationalMatrix, p: &RationalMatrix) -> Result<RootMargin, RootError> {
    if q.dim() != p.dim() {
        return Err(RootError::DimensionMismatch(q.dim(), p.dim()));
    }
    let sq = q.square();
    let max_deviation = sq.sub(p).expect("same dim").max_abs_entry();
    let min_entry = q.min_entry();
    let max_row_sum_deviation = q
        .row_sums()
        .iter()
        .map(|s| (s - int(1)).abs())
        .max()
        .unwrap_or_else(Rational::zero);
    Ok(RootMargin {
        max_deviation,
        min_entry,
        max_row_sum_deviation,
    })
}

/// Replaces zero eigenvalues by tiny distinct positive values bounded by
/// 1/(C d^3 max|Z|,|Z^-1|), preserving the sign pattern of all entries that
/// stay clear of the perturbation budget. Entries of the result are dyadic.
pub fn lift_singularities(
    a: &RationalMatrix,
    c: &Rational,
    opts: &RootOptions,
) -> Result<RationalMatrix, RootError> {
    assert!(c.is_positive());
    let family = enumerate_roots(a, opts)?;
    let d = family.dim;
    let zero_idx: Vec<usize> = family
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_zero())
        .map(|(i, _)| i)
        .collect();
    if zero_idx.is_empty() {
        return Ok(a.clone());
    }
    let max_z = family
        .z
        .entries
        .iter()
        .chain(family.z_inv.entries.iter())
        .map(|e| e.norm_sqr())
        .max()
        .unwrap_or_else(Rational::zero);
    // |Z| bound from the squared norms, outward.
    let (_, max_abs) = nth_root_bounds(&max_z, 2, 32);
    let bound = int(1) / (c * int((d * d * d) as i64) * max_abs.max(int(1)));
    let bits = opts.precision_bits;
    let mut eigenvalues = family.eigenvalues.clone();
    for (k, &i) in zero_idx.iter().enumerate() {
        eigenvalues[i] = CRat::real(&bound / int(2 + k as i64));
    }
    let mut scaled = CMat::zeros(d);
    for i in 0..d {
        for j in 0..d {
            *scaled.get_mut(i, j) = family.z.get(i, j).mul(&eigenvalues[j]).round(bits);
        }
    }
    let lifted = scaled.mul(&family.z_inv, bits);
    Ok(lifted.real_part())
}
