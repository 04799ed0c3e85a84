//! Decomposability of finite distributions at desk scale: factor the
//! characteristic polynomial over the reals, then search nontrivial
//! bipartitions of the factor multiset for a split into two nonnegative
//! products. Variants constrain the left factor's support size, force equal
//! degrees, or relax acceptance to a coefficient margin; the complete-
//! decomposition enumerator lists every maximal grouping into indecomposable
//! nonnegative products.

use crate::dist::FiniteDistribution;
use crate::factor::{factor_real, FactorError, RealFactorization};
use crate::poly::Poly;
use crate::rational::{int, ratio, Rational};
use num::traits::{One, Signed, Zero};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DecomposeError {
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("left support bound {m} must satisfy 2 <= m < {support}")]
    InvalidSupportBound { m: usize, support: usize },
    #[error("even decomposability needs an even-degree characteristic polynomial")]
    OddDegree,
    #[error("epsilon must be positive")]
    InvalidEpsilon,
}

/// A two-factor decomposition; both parts are non-constant distributions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub left: FiniteDistribution,
    pub right: FiniteDistribution,
}

/// Working precision ceiling used by the decomposition searches.
pub const DEFAULT_PRECISION: u32 = 256;

/// Grouped view of the expanded factor multiset: (monic factor, count).
struct FactorGroups {
    groups: Vec<(Poly, u32)>,
}

impl FactorGroups {
    fn from_factorization(fac: &RealFactorization) -> Self {
        let mut groups: Vec<(Poly, u32)> = Vec::new();
        for f in &fac.factors {
            match groups.iter_mut().find(|(p, _)| *p == f.poly) {
                Some((_, c)) => *c += f.multiplicity,
                None => groups.push((f.poly.clone(), f.multiplicity)),
            }
        }
        FactorGroups { groups }
    }

    fn total(&self) -> u32 {
        self.groups.iter().map(|(_, c)| c).sum()
    }

    /// All nontrivial selections (how many copies of each group go left),
    /// ordered by increasing left degree, then lexicographically. The order
    /// fixes which decomposition a search reports first.
    fn selections(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut current = vec![0u32; self.groups.len()];
        loop {
            // Mixed-radix increment.
            let mut i = 0;
            loop {
                if i == self.groups.len() {
                    out.sort_by_key(|sel: &Vec<u32>| {
                        let deg: usize = sel
                            .iter()
                            .zip(&self.groups)
                            .map(|(k, (p, _))| *k as usize * p.degree())
                            .sum();
                        (deg, sel.clone())
                    });
                    return out;
                }
                if current[i] < self.groups[i].1 {
                    current[i] += 1;
                    break;
                }
                current[i] = 0;
                i += 1;
            }
            let taken: u32 = current.iter().sum();
            if taken > 0 && taken < self.total() {
                out.push(current.clone());
            }
        }
    }

    fn product(&self, selection: &[u32], complement: bool) -> Poly {
        let mut acc = Poly::one();
        for ((p, c), k) in self.groups.iter().zip(selection) {
            let count = if complement { c - k } else { *k };
            acc = acc.mul(&p.pow(count));
        }
        acc
    }
}

/// Clamps small negative coefficient dust to zero and normalizes to a pmf.
/// `None` when a coefficient is more negative than `floor` or everything
/// clamps away.
fn clamp_to_distribution(p: &Poly, floor: &Rational) -> Option<FiniteDistribution> {
    let mut coeffs = Vec::with_capacity(p.coeffs().len());
    for c in p.coeffs() {
        if c.is_negative() {
            if &c.abs() > floor {
                return None;
            }
            coeffs.push(Rational::zero());
        } else {
            coeffs.push(c.clone());
        }
    }
    FiniteDistribution::normalize(&coeffs).ok().map(|(d, _)| d)
}

enum Acceptance<'a> {
    /// Dust up to `tol`, reconvolution within `tol`.
    Exact { tol: &'a Rational },
    /// Clamp everything, accept when the reconvolution lands within `eps`.
    Margin { eps: &'a Rational },
}

fn try_split(
    d: &FiniteDistribution,
    left: &Poly,
    right: &Poly,
    acceptance: &Acceptance,
) -> Option<Decomposition> {
    if left.is_zero() || right.is_zero() || left.degree() == 0 || right.degree() == 0 {
        return None;
    }
    let (floor, bound) = match acceptance {
        Acceptance::Exact { tol } => ((*tol).clone(), (*tol).clone()),
        Acceptance::Margin { eps } => (int(1_000_000), (*eps).clone()),
    };
    let left_d = clamp_to_distribution(left, &floor)?;
    let right_d = clamp_to_distribution(right, &floor)?;
    let conv = left_d.convolve(&right_d);
    let dev = conv.sup_distance(d);
    let accepted = match acceptance {
        Acceptance::Exact { .. } => dev <= bound,
        Acceptance::Margin { .. } => dev < bound,
    };
    accepted.then_some(Decomposition {
        left: left_d,
        right: right_d,
    })
}

fn factorize(
    d: &FiniteDistribution,
    tol: &Rational,
) -> Result<RealFactorization, DecomposeError> {
    Ok(factor_real(&d.to_char_poly(), DEFAULT_PRECISION, tol)?)
}

/// Searches every nontrivial bipartition of the real factor multiset for a
/// split into two nonnegative products; first hit in the deterministic order
/// is returned.
pub fn decompose(
    d: &FiniteDistribution,
    tol: &Rational,
) -> Result<Option<Decomposition>, DecomposeError> {
    decompose_filtered(d, tol, |_, _| true)
}

fn decompose_filtered(
    d: &FiniteDistribution,
    tol: &Rational,
    keep: impl Fn(&Poly, &Poly) -> bool,
) -> Result<Option<Decomposition>, DecomposeError> {
    if d.support_size() < 2 {
        return Ok(None);
    }
    let fac = factorize(d, tol)?;
    let groups = FactorGroups::from_factorization(&fac);
    for sel in groups.selections() {
        let left = groups.product(&sel, false);
        let right = groups.product(&sel, true);
        if !keep(&left, &right) {
            continue;
        }
        if let Some(found) = try_split(d, &left, &right, &Acceptance::Exact { tol }) {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Decomposability with the left factor's support size pinned to `m`.
pub fn decompose_m(
    d: &FiniteDistribution,
    m: usize,
    tol: &Rational,
) -> Result<Option<Decomposition>, DecomposeError> {
    if m < 2 || m >= d.support_size() {
        return Err(DecomposeError::InvalidSupportBound {
            m,
            support: d.support_size(),
        });
    }
    // The support constraint applies to the clamped pmf, so filter accepted
    // splits on the left pmf's support rather than the raw product.
    let fac = factorize(d, tol)?;
    let groups = FactorGroups::from_factorization(&fac);
    for sel in groups.selections() {
        let left = groups.product(&sel, false);
        let right = groups.product(&sel, true);
        if let Some(found) = try_split(d, &left, &right, &Acceptance::Exact { tol }) {
            if found.left.support_size() == m {
                return Ok(Some(found));
            }
        }
    }
    Ok(None)
}

/// Even decomposability: both factors of equal degree (equal support width).
pub fn decompose_even(
    d: &FiniteDistribution,
    tol: &Rational,
) -> Result<Option<Decomposition>, DecomposeError> {
    let degree = d.support_width();
    if degree % 2 != 0 {
        return Err(DecomposeError::OddDegree);
    }
    let half = degree / 2;
    decompose_filtered(d, tol, |left, right| {
        !left.is_zero()
            && !right.is_zero()
            && left.degree() == half
            && right.degree() == half
    })
}

/// Margin variant: a bipartition is accepted when clamping negatives and
/// renormalizing both products lands the reconvolution within eps of the
/// input in sup norm.
pub fn decompose_eps(
    d: &FiniteDistribution,
    eps: &Rational,
    tol: &Rational,
) -> Result<Option<Decomposition>, DecomposeError> {
    if !eps.is_positive() {
        return Err(DecomposeError::InvalidEpsilon);
    }
    if d.support_size() < 2 {
        return Ok(None);
    }
    // Every pmf pair deviates by at most 1 per coefficient.
    if *eps > int(1) {
        let b = FiniteDistribution::from_i64(&[1, 1]);
        return Ok(Some(Decomposition {
            left: b.clone(),
            right: b,
        }));
    }
    let fac = factorize(d, tol)?;
    let groups = FactorGroups::from_factorization(&fac);
    for sel in groups.selections() {
        let left = groups.product(&sel, false);
        let right = groups.product(&sel, true);
        if let Some(found) = try_split(d, &left, &right, &Acceptance::Margin { eps }) {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Weak membership form, with the same two-sided promise reading as weak
/// divisibility.
pub fn weak_decomposability(
    d: &FiniteDistribution,
    eps: &Rational,
    tol: &Rational,
) -> Result<bool, DecomposeError> {
    Ok(decompose_eps(d, eps, tol)?.is_some())
}

/// Result of the complete-decomposition enumeration.
#[derive(Debug, Clone)]
pub struct CompleteDecompositions {
    pub groupings: Vec<Vec<FiniteDistribution>>,
    /// Set when the enumeration stopped at `limit` before exhausting the
    /// partition space.
    pub truncated: bool,
}

struct PartitionScan<'a> {
    items: &'a [usize],
    groups: &'a FactorGroups,
    limit: usize,
    product_cache: HashMap<u64, Poly>,
    nonneg_cache: HashMap<u64, bool>,
    minimal_cache: HashMap<u64, bool>,
    seen: BTreeSet<Vec<Vec<usize>>>,
    results: Vec<Vec<FiniteDistribution>>,
    truncated: bool,
}

impl<'a> PartitionScan<'a> {
    fn product(&mut self, mask: u64) -> Poly {
        if let Some(p) = self.product_cache.get(&mask) {
            return p.clone();
        }
        let mut acc = Poly::one();
        for (i, g) in self.items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                acc = acc.mul(&self.groups.groups[*g].0);
            }
        }
        self.product_cache.insert(mask, acc.clone());
        acc
    }

    fn is_nonneg(&mut self, mask: u64) -> bool {
        if let Some(&b) = self.nonneg_cache.get(&mask) {
            return b;
        }
        let b = self.product(mask).is_nonnegative();
        self.nonneg_cache.insert(mask, b);
        b
    }

    /// A block is a valid indecomposable part when its product is
    /// nonnegative and no proper sub-bipartition splits it into two
    /// nonnegative products.
    fn is_minimal_block(&mut self, mask: u64) -> bool {
        if let Some(&b) = self.minimal_cache.get(&mask) {
            return b;
        }
        let mut ok = self.is_nonneg(mask);
        if ok && mask.count_ones() >= 2 {
            // Iterate proper nonempty submasks.
            let mut sub = (mask - 1) & mask;
            while sub != 0 {
                if self.is_nonneg(sub) && self.is_nonneg(mask & !sub) {
                    ok = false;
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
        self.minimal_cache.insert(mask, ok);
        ok
    }

    fn record(&mut self, blocks: &[u64]) -> bool {
        let mut signature: Vec<Vec<usize>> = blocks
            .iter()
            .map(|&mask| {
                let mut ids: Vec<usize> = (0..self.items.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| self.items[i])
                    .collect();
                ids.sort_unstable();
                ids
            })
            .collect();
        signature.sort();
        if !self.seen.insert(signature) {
            return true;
        }
        let grouping: Vec<FiniteDistribution> = blocks
            .iter()
            .map(|&mask| {
                let p = self.product(mask);
                FiniteDistribution::from_char_poly(&p)
                    .expect("nonnegative block")
                    .0
            })
            .collect();
        self.results.push(grouping);
        if self.results.len() >= self.limit {
            self.truncated = true;
            return false;
        }
        true
    }

    /// Canonical set-partition recursion: the lowest unassigned item anchors
    /// each new block.
    fn recurse(&mut self, remaining: u64, blocks: &mut Vec<u64>) -> bool {
        if remaining == 0 {
            return self.record(blocks);
        }
        let anchor = remaining.trailing_zeros();
        let rest = remaining & !(1 << anchor);
        // Enumerate subsets of `rest` to join the anchor.
        let mut sub = rest;
        loop {
            let block = sub | (1 << anchor);
            if self.is_minimal_block(block) {
                blocks.push(block);
                if !self.recurse(remaining & !block, blocks) {
                    blocks.pop();
                    return false;
                }
                blocks.pop();
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        true
    }
}

/// Enumerates (up to `limit`) the distinct maximal groupings of the factor
/// multiset into indecomposable nonnegative products. Distinctness is up to
/// permutation of the groups.
pub fn enumerate_complete_decompositions(
    d: &FiniteDistribution,
    tol: &Rational,
    limit: usize,
) -> Result<CompleteDecompositions, DecomposeError> {
    assert!(limit >= 1);
    if d.support_size() < 2 {
        return Ok(CompleteDecompositions {
            groupings: vec![vec![d.clone()]],
            truncated: false,
        });
    }
    let fac = factorize(d, tol)?;
    let groups = FactorGroups::from_factorization(&fac);
    // Expanded item list: group id per copy.
    let items: Vec<usize> = groups
        .groups
        .iter()
        .enumerate()
        .flat_map(|(i, (_, c))| std::iter::repeat_n(i, *c as usize))
        .collect();
    let mut scan = PartitionScan {
        items: &items,
        groups: &groups,
        limit,
        product_cache: HashMap::new(),
        nonneg_cache: HashMap::new(),
        minimal_cache: HashMap::new(),
        seen: BTreeSet::new(),
        results: Vec::new(),
        truncated: false,
    };
    let all = if items.len() >= 64 {
        u64::MAX
    } else {
        (1u64 << items.len()) - 1
    };
    scan.recurse(all, &mut Vec::new());
    Ok(CompleteDecompositions {
        groupings: scan.results,
        truncated: scan.truncated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleVariant {
    /// b_k = -k / 2n: decompositions into exactly n indecomposable quartics.
    Standard,
    /// b_k = -k / 2n^2: admits decompositions into n..2n indecomposable terms.
    Extended,
}

/// Family of distributions with at least n! distinct complete
/// decompositions: the normalized product of p_k = 1 + a_k x + x^2 and
/// n_k = 1 + b_k x + x^2 with a_k = 1 + k/2n and b_k negative but small, so
/// every cross product p_k n_l is a valid pmf while no n_k stands alone.
pub fn counterexample_family(
    n: u32,
    variant: CounterexampleVariant,
) -> FiniteDistribution {
    assert!(n >= 1);
    let n_i = int(n as i64);
    let mut f = Poly::one();
    for k in 1..=n as i64 {
        let a_k = int(1) + ratio(k, 1) / (int(2) * &n_i);
        let b_k = match variant {
            CounterexampleVariant::Standard => -ratio(k, 1) / (int(2) * &n_i),
            CounterexampleVariant::Extended => -ratio(k, 1) / (int(2) * &n_i * &n_i),
        };
        let p_k = Poly::new(vec![Rational::one(), a_k, Rational::one()]);
        let n_k = Poly::new(vec![Rational::one(), b_k, Rational::one()]);
        f = f.mul(&p_k).mul(&n_k);
    }
    FiniteDistribution::from_char_poly(&f)
        .expect("family coefficients are positive")
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigInt;

    fn tol() -> Rational {
        Rational::new(BigInt::one(), BigInt::from(10u64).pow(9))
    }

    #[test]
    fn uniform_four_decomposes() {
        let d = FiniteDistribution::uniform(4);
        let dec = decompose(&d, &tol()).unwrap().unwrap();
        assert_eq!(dec.left.convolve(&dec.right), d);
        let parts = [dec.left.clone(), dec.right.clone()];
        assert!(parts.iter().any(|p| *p == FiniteDistribution::from_i64(&[1, 1])));
        assert!(parts
            .iter()
            .any(|p| *p == FiniteDistribution::from_i64(&[1, 0, 1])));
    }

    #[test]
    fn uniform_three_and_spike_are_indecomposable() {
        assert!(decompose(&FiniteDistribution::uniform(3), &tol())
            .unwrap()
            .is_none());
        assert!(decompose(&FiniteDistribution::from_i64(&[1, 0, 1]), &tol())
            .unwrap()
            .is_none());
    }

    #[test]
    fn support_constrained_variants() {
        let d = FiniteDistribution::uniform(4);
        let m2 = decompose_m(&d, 2, &tol()).unwrap().unwrap();
        assert_eq!(m2.left.support_size(), 2);
        // The quadratic factor has support {0,2} of size 2, so m = 3 fails.
        assert!(decompose_m(&d, 3, &tol()).unwrap().is_none());
        assert!(matches!(
            decompose_m(&d, 4, &tol()),
            Err(DecomposeError::InvalidSupportBound { .. })
        ));
    }

    #[test]
    fn even_variant() {
        let sq = FiniteDistribution::from_i64(&[1, 2, 1]);
        let dec = decompose_even(&sq, &tol()).unwrap().unwrap();
        assert_eq!(dec.left, FiniteDistribution::from_i64(&[1, 1]));
        assert_eq!(dec.right, FiniteDistribution::from_i64(&[1, 1]));

        assert!(decompose_even(&FiniteDistribution::uniform(3), &tol())
            .unwrap()
            .is_none());
        assert!(matches!(
            decompose_even(&FiniteDistribution::from_i64(&[1, 1]), &tol()),
            Err(DecomposeError::OddDegree)
        ));
        // Uniform over five points has even degree but only sign-mixed
        // quadratic factors, so no even split exists.
        assert!(decompose_even(&FiniteDistribution::uniform(5), &tol())
            .unwrap()
            .is_none());
    }

    #[test]
    fn eps_variant() {
        let d = FiniteDistribution::uniform(4);
        assert!(decompose_eps(&d, &ratio(1, 1_000_000), &tol())
            .unwrap()
            .is_some());
        let u3 = FiniteDistribution::uniform(3);
        assert!(decompose_eps(&u3, &ratio(1, 1000), &tol()).unwrap().is_none());
        assert!(decompose_eps(&u3, &ratio(101, 100), &tol()).unwrap().is_some());
        assert!(matches!(
            decompose_eps(&u3, &int(0), &tol()),
            Err(DecomposeError::InvalidEpsilon)
        ));
        assert_eq!(
            weak_decomposability(&u3, &ratio(1, 1000), &tol()).unwrap(),
            false
        );
        assert!(weak_decomposability(&d, &ratio(1, 1_000_000), &tol()).unwrap());
    }

    #[test]
    fn complete_decompositions_of_uniform_four() {
        let d = FiniteDistribution::uniform(4);
        let out = enumerate_complete_decompositions(&d, &tol(), 16).unwrap();
        assert_eq!(out.groupings.len(), 1);
        let g = &out.groupings[0];
        assert_eq!(g.len(), 2);
        assert!(!out.truncated);
    }

    #[test]
    fn complete_decompositions_of_indecomposable_input() {
        let u3 = FiniteDistribution::uniform(3);
        let out = enumerate_complete_decompositions(&u3, &tol(), 4).unwrap();
        assert_eq!(out.groupings, vec![vec![u3]]);
    }

    #[test]
    fn counterexample_family_small_cases() {
        // n = 1: (1 + 3x/2 + x^2)(1 - x/2 + x^2) has positive coefficients.
        let d1 = counterexample_family(1, CounterexampleVariant::Standard);
        let expected = Poly::new(vec![
            Rational::one(),
            Rational::one(),
            ratio(5, 4),
            Rational::one(),
            Rational::one(),
        ]);
        assert!(d1.to_char_poly().equiv(&expected));

        let d2 = counterexample_family(2, CounterexampleVariant::Standard);
        assert_eq!(d2.support_width(), 8);

        let out = enumerate_complete_decompositions(&d2, &tol(), 64).unwrap();
        assert!(out.groupings.len() >= 2, "got {}", out.groupings.len());
    }

    #[test]
    fn counterexample_family_positivity_up_to_twenty() {
        for n in 1..=20 {
            for variant in [
                CounterexampleVariant::Standard,
                CounterexampleVariant::Extended,
            ] {
                let d = counterexample_family(n, variant);
                assert!(d.probs().iter().all(|p| p.is_positive()), "n={n}");
                assert_eq!(d.support_width(), 4 * n as usize);
            }
        }
    }

    #[test]
    fn reversal_preserves_decomposability() {
        for raw in [[1i64, 1, 1, 1], [2, 1, 3, 5], [1, 4, 6, 4]] {
            let d = FiniteDistribution::from_i64(&raw);
            let mut rev = raw;
            rev.reverse();
            let dr = FiniteDistribution::from_i64(&rev);
            let a = decompose(&d, &tol()).unwrap().is_some();
            let b = decompose(&dr, &tol()).unwrap().is_some();
            assert_eq!(a, b, "raw={raw:?}");
        }
    }
}
