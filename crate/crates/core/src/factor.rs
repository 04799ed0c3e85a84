//! Factorization of rational polynomials into real irreducible factors:
//! exact squarefree splitting, simultaneous complex root iteration at
//! escalating working precision, conjugate pairing into quadratics, and
//! re-rationalization of factors that divide the input exactly.

use crate::poly::Poly;
use crate::rational::{approx_rational, int, nth_root_bounds, round_dyadic, CRat, Rational};
use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FactorError {
    #[error("residual {residual} exceeds tolerance at maximum precision")]
    PrecisionExhausted { residual: f64 },
    #[error("cannot factor a constant polynomial")]
    ConstantInput,
}

/// A monic real factor: linear `x + r` or quadratic `x^2 + bx + c` with
/// negative discriminant. `exact` marks factors whose rational coefficients
/// were verified by exact division of the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealFactor {
    pub poly: Poly,
    pub multiplicity: u32,
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct RealFactorization {
    pub factors: Vec<RealFactor>,
    /// Leading coefficient: input = scale * product of monic factors.
    pub scale: Rational,
    /// Max coefficient error of the reassembled product against the input.
    pub residual: Rational,
    pub precision_bits: u32,
}

impl RealFactorization {
    pub fn reassemble(&self) -> Poly {
        let mut acc = Poly::one();
        for f in &self.factors {
            acc = acc.mul(&f.poly.pow(f.multiplicity));
        }
        acc.scale(&self.scale)
    }

    /// Factors expanded by multiplicity, in the stored deterministic order.
    pub fn expanded(&self) -> Vec<&RealFactor> {
        let mut out = Vec::new();
        for f in &self.factors {
            for _ in 0..f.multiplicity {
                out.push(f);
            }
        }
        out
    }
}

/// Yun's algorithm: exact squarefree decomposition f = lc * prod u_i^i with
/// the u_i squarefree, monic and pairwise coprime.
pub fn squarefree_decomposition(f: &Poly) -> Vec<(Poly, u32)> {
    assert!(!f.is_zero() && f.degree() >= 1);
    let monic = f.make_monic();
    let deriv = monic.derivative();
    let g = monic.gcd(&deriv);
    if g.degree() == 0 {
        return vec![(monic, 1)];
    }
    let mut out = Vec::new();
    let mut c = monic.div_exact(&g).expect("gcd divides");
    let mut d = deriv.div_exact(&g).expect("gcd divides").sub(&c.derivative());
    let mut i = 1u32;
    while c.degree() != 0 {
        let u = c.gcd(&d);
        if u.degree() >= 1 {
            out.push((u.clone(), i));
        }
        c = c.div_exact(&u).expect("gcd divides");
        d = d.div_exact(&u).expect("gcd divides").sub(&c.derivative());
        i += 1;
    }
    out
}

fn horner(coeffs: &[CRat], z: &CRat, bits: u32) -> CRat {
    let mut acc = CRat::zero();
    for c in coeffs.iter().rev() {
        acc = acc.mul(z).add(c).round(bits);
    }
    acc
}

/// Aberth-Ehrlich simultaneous iteration on a monic squarefree polynomial
/// held as exact rationals; all arithmetic is exact with dyadic rounding at
/// `bits` working precision. Returns roots or None when the iteration failed
/// to settle within the budget.
fn aberth_roots(monic: &Poly, bits: u32) -> Option<Vec<CRat>> {
    let deg = monic.degree();
    let coeffs: Vec<CRat> = monic
        .coeffs()
        .iter()
        .map(|c| CRat::real(round_dyadic(c, bits)))
        .collect();
    let deriv: Vec<CRat> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| CRat::real(&c.re * int(i as i64)))
        .collect();
    // Cauchy-style inclusion radius for monic polynomials.
    let radius = 1.0
        + monic
            .coeffs()
            .iter()
            .map(|c| crate::rational::to_f64(&c.abs()))
            .fold(0.0f64, f64::max);
    let mut z: Vec<CRat> = (0..deg)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64) / (deg as f64) + 0.41;
            CRat::from_f64(radius * angle.cos(), radius * angle.sin()).unwrap()
        })
        .collect();
    // |step|^2 <= 2^-bits, i.e. steps of 2^-(bits/2): clustered roots pin the
    // reachable accuracy well above the rounding grid, so the full working
    // precision is not a realistic stopping target.
    let target = Rational::new(BigInt::one(), BigInt::one() << bits);
    let max_iter = 60 + 10 * deg;
    let mut best_worst: Option<Rational> = None;
    let mut stalled = 0u32;
    for _ in 0..max_iter {
        let mut worst = Rational::zero();
        for k in 0..deg {
            let pz = horner(&coeffs, &z[k], bits);
            let dz = horner(&deriv, &z[k], bits);
            if dz.is_zero() {
                // Nudge off the critical point.
                z[k] = z[k].add(&CRat::from_f64(1e-3, 1e-3).unwrap());
                worst = Rational::one();
                continue;
            }
            let newton = pz.div(&dz).round(bits);
            let mut sum = CRat::zero();
            for j in 0..deg {
                if j == k {
                    continue;
                }
                let diff = z[k].sub(&z[j]);
                if diff.is_zero() {
                    return None;
                }
                sum = sum.add(&CRat::one().div(&diff)).round(bits);
            }
            let denom = CRat::one().sub(&newton.mul(&sum).round(bits));
            if denom.is_zero() {
                return None;
            }
            let w = newton.div(&denom).round(bits);
            z[k] = z[k].sub(&w).round(bits);
            let step = w.norm_sqr();
            if step > worst {
                worst = step;
            }
        }
        if worst <= target {
            return Some(z);
        }
        // Bail out early once the step size stops improving.
        match &best_worst {
            Some(b) if worst >= *b => {
                stalled += 1;
                if stalled >= 12 {
                    return None;
                }
            }
            _ => {
                best_worst = Some(worst);
                stalled = 0;
            }
        }
    }
    None
}

/// Splits converged roots of a real polynomial into real roots and conjugate
/// pairs; fails when the pairing is inconsistent at this precision.
fn pair_conjugates(roots: &[CRat], bits: u32) -> Option<(Vec<Rational>, Vec<CRat>)> {
    let tol = Rational::new(BigInt::one(), BigInt::one() << (bits / 2));
    let tol_sq = &tol * &tol;
    let mut real = Vec::new();
    let mut upper: Vec<CRat> = Vec::new();
    let mut lower: Vec<CRat> = Vec::new();
    for r in roots {
        if r.im.abs() <= tol {
            real.push(r.re.clone());
        } else if r.im.is_positive() {
            upper.push(r.clone());
        } else {
            lower.push(r.clone());
        }
    }
    if upper.len() != lower.len() {
        return None;
    }
    let mut pairs = Vec::new();
    let mut used = vec![false; lower.len()];
    for u in &upper {
        let mut best: Option<(usize, Rational)> = None;
        for (i, l) in lower.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d = u.sub(&l.conj()).norm_sqr();
            if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
                best = Some((i, d));
            }
        }
        let (i, d) = best?;
        // Conjugate partners must actually agree to working precision.
        if d > &tol_sq * int(1 << 16) {
            return None;
        }
        used[i] = true;
        let partner = lower[i].conj();
        let merged = CRat::new(
            (&u.re + &partner.re) / int(2),
            (&u.im + &partner.im) / int(2),
        );
        pairs.push(merged);
    }
    Some((real, pairs))
}

/// Attempts to replace a numeric monic factor by a nearby rational one that
/// divides `parent` exactly.
fn rationalize_factor(candidate: &Poly, parent: &Poly, max_den: &BigInt) -> Option<Poly> {
    let coeffs: Vec<Rational> = candidate
        .coeffs()
        .iter()
        .map(|c| approx_rational(c, max_den))
        .collect();
    let guess = Poly::new(coeffs);
    if guess.is_zero() || guess.degree() != candidate.degree() {
        return None;
    }
    parent.div_exact(&guess).map(|_| guess)
}

/// Factors a squarefree monic polynomial into monic linear/quadratic real
/// factors at the given working precision.
fn factor_squarefree(u: &Poly, bits: u32) -> Option<Vec<Poly>> {
    match u.degree() {
        1 => Some(vec![u.make_monic()]),
        2 => {
            let m = u.make_monic();
            let b = m.coeff(1);
            let c = m.coeff(0);
            let disc = &b * &b - int(4) * &c;
            if disc.is_negative() {
                return Some(vec![m]);
            }
            // Real roots (-b +- sqrt(disc)) / 2, kept as dyadic enclosure
            // midpoints; exact division recovers rational roots later.
            let (lo, hi) = nth_root_bounds(&disc, 2, bits);
            let sqrt = round_dyadic(&((&lo + &hi) / int(2)), bits);
            let r1 = (-&b + &sqrt) / int(2);
            let r2 = (-&b - &sqrt) / int(2);
            Some(vec![
                Poly::new(vec![-r1, Rational::one()]),
                Poly::new(vec![-r2, Rational::one()]),
            ])
        }
        _ => {
            let roots = aberth_roots(&u.make_monic(), bits)?;
            let (real, pairs) = pair_conjugates(&roots, bits)?;
            let mut out = Vec::new();
            for r in real {
                out.push(Poly::new(vec![-round_dyadic(&r, bits), Rational::one()]));
            }
            for z in pairs {
                let b = round_dyadic(&(int(-2) * &z.re), bits);
                let c = round_dyadic(&z.norm_sqr(), bits);
                let disc = &b * &b - int(4) * &c;
                if !disc.is_negative() {
                    return None;
                }
                out.push(Poly::new(vec![c, b, Rational::one()]));
            }
            Some(out)
        }
    }
}

/// Full real factorization with precision escalation and exact residual
/// accounting. `precision` is the working precision ceiling and `tol` the
/// acceptable residual of the reassembled product.
pub fn factor_real(
    f: &Poly,
    precision: u32,
    tol: &Rational,
) -> Result<RealFactorization, FactorError> {
    if f.is_zero() || f.degree() == 0 {
        return Err(FactorError::ConstantInput);
    }
    // Pull out x^k so the remaining constant coefficient is nonzero.
    let shift = f.coeffs().iter().position(|c| !c.is_zero()).unwrap();
    let core = Poly::new(f.coeffs()[shift..].to_vec());
    let scale = f.leading().clone();

    let mut ladder: Vec<u32> = vec![64, 128, 256]
        .into_iter()
        .filter(|b| *b <= precision)
        .collect();
    if !ladder.contains(&precision) {
        ladder.push(precision);
    }
    let dens = [
        BigInt::from(1_000_000u64),
        BigInt::from(10u64).pow(12),
        BigInt::from(10u64).pow(24),
    ];

    let mut last_residual = Rational::zero();
    for &bits in &ladder {
        let mut factors: Vec<RealFactor> = Vec::new();
        if shift > 0 {
            factors.push(RealFactor {
                poly: Poly::new(vec![Rational::zero(), Rational::one()]),
                multiplicity: shift as u32,
                exact: true,
            });
        }
        let mut ok = true;
        if core.degree() >= 1 {
            'outer: for (u, mult) in squarefree_decomposition(&core) {
                let Some(parts) = factor_squarefree(&u, bits) else {
                    ok = false;
                    break 'outer;
                };
                for part in parts {
                    let mut exact = u.div_exact(&part).is_some();
                    let mut poly = part.clone();
                    if !exact {
                        for max_den in &dens {
                            if let Some(rat) = rationalize_factor(&part, &u, max_den) {
                                poly = rat;
                                exact = true;
                                break;
                            }
                        }
                    }
                    factors.push(RealFactor {
                        poly,
                        multiplicity: mult,
                        exact,
                    });
                }
            }
        }
        if !ok {
            continue;
        }
        factors.sort_by(|a, b| {
            (a.poly.degree(), a.poly.coeffs()).cmp(&(b.poly.degree(), b.poly.coeffs()))
        });
        let fac = RealFactorization {
            factors,
            scale: scale.clone(),
            residual: Rational::zero(),
            precision_bits: bits,
        };
        let residual = fac
            .reassemble()
            .sub(f)
            .coeffs()
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero);
        if residual <= *tol {
            return Ok(RealFactorization { residual, ..fac });
        }
        last_residual = residual;
    }
    Err(FactorError::PrecisionExhausted {
        residual: crate::rational::to_f64(&last_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::FiniteDistribution;
    use crate::rational::ratio;

    fn default_tol() -> Rational {
        Rational::new(BigInt::one(), BigInt::from(10u64).pow(9))
    }

    #[test]
    fn squarefree_split() {
        // (1+x)^2 (2+x)
        let f = Poly::from_i64(&[1, 1]).pow(2).mul(&Poly::from_i64(&[2, 1]));
        let parts = squarefree_decomposition(&f);
        assert_eq!(parts.len(), 2);
        assert!(parts
            .iter()
            .any(|(u, m)| *m == 2 && u.equiv(&Poly::from_i64(&[1, 1]))));
        assert!(parts
            .iter()
            .any(|(u, m)| *m == 1 && u.equiv(&Poly::from_i64(&[2, 1]))));
    }

    #[test]
    fn binomial_square_factors_as_double_root() {
        let d = FiniteDistribution::from_i64(&[1, 2, 1]);
        let fac = factor_real(&d.to_char_poly(), 256, &default_tol()).unwrap();
        assert_eq!(fac.factors.len(), 1);
        assert_eq!(fac.factors[0].multiplicity, 2);
        assert!(fac.factors[0].poly.equiv(&Poly::from_i64(&[1, 1])));
        assert_eq!(fac.scale, ratio(1, 4));
        assert!(fac.residual.is_zero());
    }

    #[test]
    fn uniform_four_factors_into_linear_and_quadratic() {
        let d = FiniteDistribution::uniform(4);
        let fac = factor_real(&d.to_char_poly(), 256, &default_tol()).unwrap();
        let polys: Vec<&Poly> = fac.factors.iter().map(|f| &f.poly).collect();
        assert_eq!(polys.len(), 2);
        assert!(fac.factors.iter().all(|f| f.exact));
        assert!(polys.iter().any(|p| p.equiv(&Poly::from_i64(&[1, 1]))));
        assert!(polys.iter().any(|p| p.equiv(&Poly::from_i64(&[1, 0, 1]))));
    }

    #[test]
    fn uniform_three_is_an_irreducible_quadratic() {
        let d = FiniteDistribution::uniform(3);
        let fac = factor_real(&d.to_char_poly(), 256, &default_tol()).unwrap();
        assert_eq!(fac.factors.len(), 1);
        assert!(fac.factors[0].poly.equiv(&Poly::from_i64(&[1, 1, 1])));
        assert_eq!(fac.scale, ratio(1, 3));
    }

    #[test]
    fn clustered_quadratics_recovered_exactly() {
        // Product of nearby gadget quadratics x^2 + b x + 1.
        let bs = [ratio(1, 288), ratio(1, 32), ratio(3, 100), ratio(7, 250)];
        let mut f = Poly::one();
        for b in &bs {
            f = f.mul(&Poly::new(vec![Rational::one(), b.clone(), Rational::one()]));
        }
        let fac = factor_real(&f, 256, &default_tol()).unwrap();
        assert_eq!(fac.expanded().len(), 4);
        for factor in &fac.factors {
            assert!(factor.exact, "expected exact recovery of {:?}", factor.poly);
            assert!(bs.iter().any(|b| factor.poly.coeff(1) == *b));
        }
        assert!(fac.residual.is_zero());
    }

    #[test]
    fn residual_bounded_on_random_polynomials() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..10 {
            let deg = rng.random_range(3..=9);
            let coeffs: Vec<Rational> = (0..=deg)
                .map(|_| ratio(rng.random_range(1..=20), 20))
                .collect();
            let f = Poly::new(coeffs);
            let fac = factor_real(&f, 256, &default_tol()).unwrap();
            assert!(fac.residual <= default_tol());
            assert_eq!(
                fac.expanded().iter().map(|p| p.poly.degree()).sum::<usize>(),
                f.degree()
            );
        }
    }
}
