//! Deciding n-divisibility of finite discrete distributions: exactly, with a
//! coefficient margin, as a weak membership problem, and the closest
//! n-divisible distribution via binary search on the margin.
//!
//! The exact decider runs entirely in rational arithmetic. The candidate root
//! is produced by the power-series expansion of the reversed characteristic
//! polynomial: the reversal starts the recurrence at the leading coefficient,
//! so every step divides only by n and the series stays rational. The series
//! of f^(1/n) truncates at degree N iff the truncation reassembles to f, so a
//! single O(N^2) pass both constructs and verifies the root.

use crate::dist::FiniteDistribution;
use crate::interval::{IntervalBox, RatInterval};
use crate::poly::Poly;
use crate::rational::{int, nth_root_bounds, Rational};
use num::traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DivisibilityError {
    #[error("epsilon must be positive")]
    InvalidEpsilon,
}

/// Outcome of an exact divisibility query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisibilityVerdict {
    pub divisible: bool,
    /// The unique n-th root distribution when divisible.
    pub witness: Option<FiniteDistribution>,
}

/// Monic n-th root of `f` in the positive-scale quotient, when a real root
/// with nonnegative coefficients exists. Degree indivisibility is an
/// immediate "no root".
pub fn nth_root_exact(f: &Poly, n: u32) -> Option<Poly> {
    assert!(n >= 2, "n-th roots start at n = 2");
    assert!(f.is_nonnegative(), "nth_root_exact expects p >= 0");
    if f.is_zero() {
        return None;
    }
    let degree = f.degree();
    if degree == 0 {
        return Some(Poly::one());
    }
    if degree % n as usize != 0 {
        return None;
    }
    let m = degree / n as usize;
    // q = reversed f, normalized to constant term 1.
    let lead = f.leading().clone();
    let q: Vec<Rational> = f
        .coeffs()
        .iter()
        .rev()
        .map(|c| c / &lead)
        .collect();
    // r = q^(1/n) as a power series; n q r' = q' r gives
    //   n k r_k = sum_{j<k} (k - (n+1) j) q_{k-j} r_j.
    let nr = int(n as i64);
    let mut r: Vec<Rational> = Vec::with_capacity(degree + 1);
    r.push(Rational::one());
    for k in 1..=degree {
        let mut acc = Rational::zero();
        for (j, rj) in r.iter().enumerate() {
            if q[k - j].is_zero() || rj.is_zero() {
                continue;
            }
            let coeff = int(k as i64) - int(((n + 1) as i64) * j as i64);
            acc += coeff * &q[k - j] * rj;
        }
        let rk = acc / (&nr * int(k as i64));
        // The series truncates at degree m exactly when f is a perfect
        // n-th power; a nonzero tail coefficient certifies "no".
        if k > m && !rk.is_zero() {
            return None;
        }
        r.push(rk);
    }
    r.truncate(m + 1);
    r.reverse();
    let g = Poly::new(r);
    if !g.is_nonnegative() {
        return None;
    }
    Some(g.canonical())
}

/// Exact n-divisibility with the support-width quick reject: an n-fold iid
/// sum has width exactly n times the factor width, so n must divide the
/// aligned support width.
pub fn is_n_divisible(d: &FiniteDistribution, n: u32) -> DivisibilityVerdict {
    assert!(n >= 2);
    if d.is_constant() {
        // Factors are required to be non-constant random variables.
        return DivisibilityVerdict {
            divisible: false,
            witness: None,
        };
    }
    if d.support_width() % n as usize != 0 {
        return DivisibilityVerdict {
            divisible: false,
            witness: None,
        };
    }
    match nth_root_exact(&d.to_char_poly(), n) {
        Some(g) => {
            let (witness, _) =
                FiniteDistribution::from_char_poly(&g).expect("root verified nonnegative");
            DivisibilityVerdict {
                divisible: true,
                witness: Some(witness),
            }
        }
        None => DivisibilityVerdict {
            divisible: false,
            witness: None,
        },
    }
}

/// Budget knobs for the interval search in [`divisibility_eps`].
#[derive(Debug, Clone)]
pub struct EpsOptions {
    /// Bisection depth for the refinement loop.
    pub max_depth: u32,
    /// Total node budget across the branch-and-prune tree.
    pub max_nodes: u32,
    /// Dyadic bits for the outward n-th-root enclosures.
    pub root_bits: u32,
    /// Dyadic grid for outward endpoint rounding during propagation.
    pub round_bits: u32,
}

impl Default for EpsOptions {
    fn default() -> Self {
        EpsOptions {
            max_depth: 20,
            max_nodes: 4_000,
            root_bits: 48,
            round_bits: 64,
        }
    }
}

/// Outcome of the margin decider.
#[derive(Debug, Clone)]
pub struct EpsVerdict {
    pub divisible: bool,
    /// Normalized witness pmf, when a concrete witness was verified.
    pub witness: Option<FiniteDistribution>,
    /// Raw root coefficients a_0..a_m in [0,1] backing the witness; the
    /// sup-norm bound is certified on this unnormalized vector, matching the
    /// quotient-space coefficient equations.
    pub witness_raw: Option<Vec<Rational>>,
    /// Per-coefficient enclosures after the initial propagation pass.
    pub intervals: IntervalBox,
    /// False when the node budget ran out before a witness or a proof of
    /// emptiness was found; the verdict is then the conservative "yes" of the
    /// interval relaxation.
    pub resolved: bool,
}

enum SearchOutcome {
    Yes(Vec<Rational>),
    No,
    Unresolved,
}

struct EpsSearch<'a> {
    p: &'a [Rational],
    n: u32,
    eps: &'a Rational,
    opts: &'a EpsOptions,
    nodes_left: u32,
}

impl<'a> EpsSearch<'a> {
    /// Interval coefficients of (sum_j box_j x^j)^n truncated at `max_deg`.
    fn interval_power(&self, box_: &[RatInterval], max_deg: usize) -> Vec<RatInterval> {
        let zero = RatInterval::point(Rational::zero());
        let mut acc = vec![RatInterval::point(Rational::one())];
        for _ in 0..self.n {
            let mut next = vec![zero.clone(); (acc.len() + box_.len() - 1).min(max_deg + 1)];
            for (i, a) in acc.iter().enumerate() {
                for (j, b) in box_.iter().enumerate() {
                    if i + j > max_deg {
                        break;
                    }
                    next[i + j] = next[i + j].add(&a.mul(b));
                }
            }
            acc = next;
        }
        acc.resize(max_deg + 1, zero);
        acc
    }

    fn window(&self, i: usize) -> (Rational, Rational) {
        let pi = self.p.get(i).cloned().unwrap_or_else(Rational::zero);
        (&pi - self.eps, &pi + self.eps)
    }

    /// Intersect-and-round: endpoints are widened outward to a fixed dyadic
    /// grid so the rationals stay small across deep searches.
    fn tighten(&self, slot: &mut RatInterval, with: &RatInterval) -> bool {
        match slot.intersect(with) {
            Some(t) => {
                let lo = crate::rational::round_dyadic_down(&t.lo, self.opts.round_bits)
                    .max(Rational::zero());
                let hi = crate::rational::round_dyadic_up(&t.hi, self.opts.round_bits).min(int(1));
                if lo > hi {
                    return false;
                }
                *slot = RatInterval::new(lo, hi);
                true
            }
            None => false,
        }
    }

    /// One directed pass over the coefficient system: the end coefficient is
    /// enclosed through the n-th root of its window, every following I_i by
    /// the linear coefficient equation h_i + n a_0^{n-1} a_i in the window.
    /// With `reversed` the same pass runs on the reversed polynomial, which
    /// tightens the intervals from the leading coefficient downward.
    fn directed_pass(&self, box_: &mut [RatInterval], reversed: bool) -> bool {
        let m = box_.len() - 1;
        let big_n = m * self.n as usize;
        let idx = |i: usize| if reversed { big_n - i } else { i };
        let slot = |i: usize| if reversed { m - i } else { i };
        // End coefficient a_0^n (or a_m^n) from its window.
        let (w_lo, w_hi) = self.window(idx(0));
        if !w_hi.is_positive() {
            return false;
        }
        let lo_target = w_lo.max(Rational::zero());
        let root_lo = nth_root_bounds(&lo_target, self.n, self.opts.root_bits).0;
        let root_hi = nth_root_bounds(&w_hi.min(int(1)), self.n, self.opts.root_bits).1;
        let enclosure = RatInterval::new(root_lo, root_hi.min(int(1)));
        if !self.tighten(&mut box_[slot(0)], &enclosure) {
            return false;
        }
        for i in 1..=m {
            let prefix: Vec<RatInterval> = (0..i).map(|j| box_[slot(j)].clone()).collect();
            let h = self.interval_power(&prefix, i);
            let (w_lo, w_hi) = self.window(idx(i));
            let target = RatInterval::new(w_lo, w_hi).sub(&h[i]);
            let divisor = box_[slot(0)].pow(self.n - 1).scale(&int(self.n as i64));
            if let Some(quotient) = target.div_positive(&divisor) {
                if !self.tighten(&mut box_[slot(i)], &quotient) {
                    return false;
                }
            }
        }
        true
    }

    /// Full propagation: forward pass, backward pass on the reversed
    /// polynomial, then a residual check of every coefficient window over
    /// the box hull. Returns false when the box is proven empty.
    fn propagate(&self, box_: &mut Vec<RatInterval>) -> bool {
        if !self.directed_pass(box_, false) || !self.directed_pass(box_, true) {
            return false;
        }
        let m = box_.len() - 1;
        let big_n = m * self.n as usize;
        let full = self.interval_power(box_, big_n);
        for (i, ci) in full.iter().enumerate() {
            let (w_lo, w_hi) = self.window(i);
            if !ci.intersects_open(&w_lo, &w_hi) {
                return false;
            }
        }
        true
    }

    /// Exact strict-window check of a concrete coefficient vector.
    fn verify(&self, a: &[Rational]) -> bool {
        let g = Poly::new(a.to_vec());
        let conv = g.pow(self.n);
        let m = a.len() - 1;
        let big_n = m * self.n as usize;
        for i in 0..=big_n {
            let (w_lo, w_hi) = self.window(i);
            let c = conv.coeff(i);
            if c <= w_lo || c >= w_hi {
                return false;
            }
        }
        true
    }

    fn candidates(&self, box_: &[RatInterval]) -> Vec<Vec<Rational>> {
        let mid: Vec<Rational> = box_.iter().map(RatInterval::midpoint).collect();
        let lo: Vec<Rational> = box_.iter().map(|i| i.lo.clone()).collect();
        let hi: Vec<Rational> = box_.iter().map(|i| i.hi.clone()).collect();
        vec![mid, lo, hi]
    }

    fn search(&mut self, mut box_: Vec<RatInterval>, depth: u32) -> SearchOutcome {
        if self.nodes_left == 0 {
            return SearchOutcome::Unresolved;
        }
        self.nodes_left -= 1;
        // Two propagation passes; the second benefits from tightened I_0.
        for _ in 0..2 {
            if !self.propagate(&mut box_) {
                return SearchOutcome::No;
            }
        }
        for cand in self.candidates(&box_) {
            if self.verify(&cand) {
                return SearchOutcome::Yes(cand);
            }
        }
        if depth == 0 {
            return SearchOutcome::Unresolved;
        }
        // Bisect I_0 while it is still wide, then the widest coordinate; stop
        // once the whole box is essentially a point.
        let coarse = Rational::new(1.into(), num::BigInt::one() << 16);
        let fine = Rational::new(1.into(), num::BigInt::one() << 40);
        let split_dim = if box_[0].width() > coarse {
            0
        } else {
            let (dim, width) = box_
                .iter()
                .enumerate()
                .map(|(i, iv)| (i, iv.width()))
                .max_by(|a, b| a.1.cmp(&b.1))
                .unwrap();
            if width <= fine {
                return SearchOutcome::Unresolved;
            }
            dim
        };
        let mid = box_[split_dim].midpoint();
        let mut left = box_.clone();
        left[split_dim] = RatInterval::new(box_[split_dim].lo.clone(), mid.clone());
        let mut right = box_;
        right[split_dim] = RatInterval::new(mid, right[split_dim].hi.clone());
        let l = self.search(left, depth - 1);
        if let SearchOutcome::Yes(w) = l {
            return SearchOutcome::Yes(w);
        }
        let r = self.search(right, depth - 1);
        if let SearchOutcome::Yes(w) = r {
            return SearchOutcome::Yes(w);
        }
        match (l, r) {
            (SearchOutcome::No, SearchOutcome::No) => SearchOutcome::No,
            _ => SearchOutcome::Unresolved,
        }
    }
}

/// Margin variant: does some coefficient vector a in [0,1]^{m+1} satisfy
/// every coefficient window |(a^{*n})_i - p_i| < eps? The support is padded
/// so the root degree m = ceil(w/n).
pub fn divisibility_eps(
    d: &FiniteDistribution,
    n: u32,
    eps: &Rational,
    opts: &EpsOptions,
) -> Result<EpsVerdict, DivisibilityError> {
    assert!(n >= 2);
    if !eps.is_positive() {
        return Err(DivisibilityError::InvalidEpsilon);
    }
    let m = d.support_width().div_ceil(n as usize);
    let p: Vec<Rational> = (0..=n as usize * m).map(|k| d.prob(k)).collect();

    // An exactly divisible input short-circuits with its exact witness.
    if let DivisibilityVerdict {
        divisible: true,
        witness: Some(w),
    } = is_n_divisible(d, n)
    {
        let raw = w.probs().to_vec();
        let intervals = IntervalBox {
            intervals: raw
                .iter()
                .map(|c| Some(RatInterval::point(c.clone())))
                .collect(),
        };
        return Ok(EpsVerdict {
            divisible: true,
            witness: Some(w),
            witness_raw: Some(raw),
            intervals,
            resolved: true,
        });
    }

    let mut engine = EpsSearch {
        p: &p,
        n,
        eps,
        opts,
        nodes_left: opts.max_nodes,
    };
    let unit = RatInterval::new(Rational::zero(), Rational::one());
    let mut root_box = vec![unit; m + 1];
    let root_feasible = {
        let mut probe = root_box.clone();
        let ok = engine.propagate(&mut probe) && engine.propagate(&mut probe);
        if ok {
            root_box = probe;
        }
        ok
    };
    let diag = IntervalBox {
        intervals: root_box.iter().map(|i| Some(i.clone())).collect(),
    };
    if !root_feasible {
        return Ok(EpsVerdict {
            divisible: false,
            witness: None,
            witness_raw: None,
            intervals: diag,
            resolved: true,
        });
    }
    match engine.search(root_box, opts.max_depth) {
        SearchOutcome::Yes(raw) => {
            let witness = FiniteDistribution::normalize(&raw).ok().map(|(w, _)| w);
            Ok(EpsVerdict {
                divisible: true,
                witness,
                witness_raw: Some(raw),
                intervals: diag,
                resolved: true,
            })
        }
        SearchOutcome::No => Ok(EpsVerdict {
            divisible: false,
            witness: None,
            witness_raw: None,
            intervals: diag,
            resolved: true,
        }),
        SearchOutcome::Unresolved => Ok(EpsVerdict {
            divisible: true,
            witness: None,
            witness_raw: None,
            intervals: diag,
            resolved: false,
        }),
    }
}

/// Weak membership form: a Yes answer of the margin decider exhibits an
/// n-divisible distribution eps-close to the input, a No answer certifies the
/// input itself is not n-divisible, which settles the promise either way.
pub fn weak_divisibility(
    d: &FiniteDistribution,
    n: u32,
    eps: &Rational,
    opts: &EpsOptions,
) -> Result<bool, DivisibilityError> {
    Ok(divisibility_eps(d, n, eps, opts)?.divisible)
}

/// Binary search over eps; returns a witness pmf and the bracketed minimal
/// eps* to within `precision`. eps* is exactly zero for divisible inputs.
pub fn closest_divisible(
    d: &FiniteDistribution,
    n: u32,
    precision: &Rational,
    opts: &EpsOptions,
) -> Result<(FiniteDistribution, Rational), DivisibilityError> {
    if !precision.is_positive() {
        return Err(DivisibilityError::InvalidEpsilon);
    }
    let exact = is_n_divisible(d, n);
    if exact.divisible {
        return Ok((exact.witness.unwrap(), Rational::zero()));
    }
    let mut lo = Rational::zero();
    let mut hi = int(2);
    let mut best: Option<FiniteDistribution> = None;
    while &hi - &lo > *precision {
        let mid = (&hi + &lo) / int(2);
        let verdict = divisibility_eps(d, n, &mid, opts)?;
        if verdict.divisible {
            if verdict.witness.is_some() {
                best = verdict.witness;
            }
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // The raw coefficients can in principle collapse to the zero vector for
    // very loose brackets; report the constant distribution then.
    let witness = best.unwrap_or_else(|| FiniteDistribution::from_i64(&[1]));
    Ok((witness, hi))
}

#[cfg(test)]
mod tests {
    use crate::rational::ratio;
    use super::*;

    fn dist(raw: &[i64]) -> FiniteDistribution {
        FiniteDistribution::from_i64(raw)
    }

    #[test]
    fn exact_square_root_of_binomial() {
        let f = Poly::from_i64(&[1, 2, 1]);
        let g = nth_root_exact(&f, 2).unwrap();
        assert_eq!(g, Poly::new(vec![ratio(1, 2), ratio(1, 2)]));
    }

    #[test]
    fn exact_cube_root() {
        let f = Poly::from_i64(&[1, 3, 3, 1]);
        let g = nth_root_exact(&f, 3).unwrap();
        assert_eq!(g, Poly::new(vec![ratio(1, 2), ratio(1, 2)]));
    }

    #[test]
    fn uniform_twelve_has_no_square_root() {
        let d = FiniteDistribution::uniform(12);
        assert!(!is_n_divisible(&d, 2).divisible);
    }

    #[test]
    fn two_spike_has_no_square_root() {
        // 1 + x^2 would need (a + bx)^2 with 2ab = 0 yet a, b != 0.
        let f = Poly::from_i64(&[1, 0, 1]);
        assert!(nth_root_exact(&f, 2).is_none());
    }

    #[test]
    fn verdict_examples() {
        let v = is_n_divisible(&dist(&[1, 2, 1]), 2);
        assert!(v.divisible);
        assert_eq!(v.witness.unwrap(), dist(&[1, 1]));

        assert!(!is_n_divisible(&FiniteDistribution::uniform(12), 2).divisible);
        // Width rule: 3 does not divide 2.
        assert!(!is_n_divisible(&dist(&[1, 2, 1]), 3).divisible);
        // Constant inputs have no non-constant factor.
        assert!(!is_n_divisible(&dist(&[5]), 2).divisible);
    }

    #[test]
    fn witness_reconvolves_exactly() {
        let g = dist(&[2, 3, 5, 7]);
        for n in [2u32, 3, 5] {
            let f = g.convolve_n(n);
            let v = is_n_divisible(&f, n);
            assert!(v.divisible, "n={n}");
            let w = v.witness.unwrap();
            assert_eq!(w, g);
            assert_eq!(w.convolve_n(n), f);
        }
    }

    #[test]
    fn eps_examples() {
        let opts = EpsOptions::default();
        // Near-square accepted at eps = 0.03.
        let (d, _) = FiniteDistribution::normalize(&[
            ratio(26, 100),
            ratio(50, 100),
            ratio(24, 100),
        ])
        .unwrap();
        let v = divisibility_eps(&d, 2, &ratio(3, 100), &opts).unwrap();
        assert!(v.divisible);
        assert!(v.witness_raw.is_some());

        // Uniform over three points rejected at eps = 0.01.
        let u3 = FiniteDistribution::uniform(3);
        let v = divisibility_eps(&u3, 2, &ratio(1, 100), &opts).unwrap();
        assert!(!v.divisible);
        assert!(v.resolved);

        // Everything is accepted at eps > 1.
        let v = divisibility_eps(&u3, 2, &ratio(101, 100), &opts).unwrap();
        assert!(v.divisible);

        assert!(matches!(
            divisibility_eps(&u3, 2, &ratio(0, 1), &opts),
            Err(DivisibilityError::InvalidEpsilon)
        ));
    }

    #[test]
    fn eps_accepts_exact_inputs_for_tiny_margins() {
        let opts = EpsOptions::default();
        let d = dist(&[1, 2, 1]);
        let tiny = Rational::new(1.into(), num::BigInt::from(10u64).pow(9));
        let v = divisibility_eps(&d, 2, &tiny, &opts).unwrap();
        assert!(v.divisible);
        assert_eq!(v.witness.unwrap(), dist(&[1, 1]));
    }

    #[test]
    fn weak_divisibility_follows_eps() {
        let opts = EpsOptions::default();
        let u3 = FiniteDistribution::uniform(3);
        assert!(!weak_divisibility(&u3, 2, &ratio(1, 1000), &opts).unwrap());
        assert!(weak_divisibility(&dist(&[1, 2, 1]), 2, &ratio(1, 1000000), &opts).unwrap());
    }

    #[test]
    fn closest_divisible_bracketing() {
        let opts = EpsOptions::default();
        let (w, eps) = closest_divisible(&dist(&[1, 2, 1]), 2, &ratio(1, 1000), &opts).unwrap();
        assert!(eps.is_zero());
        assert_eq!(w, dist(&[1, 1]));

        let u3 = FiniteDistribution::uniform(3);
        let (_, eps) = closest_divisible(&u3, 2, &ratio(1, 64), &opts).unwrap();
        assert!(eps.is_positive());
        assert!(eps < ratio(1, 2));

        // Bracketing never loosens when precision shrinks.
        let (_, coarse) = closest_divisible(&u3, 2, &ratio(1, 16), &opts).unwrap();
        let (_, fine) = closest_divisible(&u3, 2, &ratio(1, 256), &opts).unwrap();
        assert!(fine <= coarse);
    }
}
