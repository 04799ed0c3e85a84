//! Subset-sum and partition instances, exact brute-force oracles, the
//! instance-level reductions between the variants, and the encoders that
//! turn subset-sum style instances into distributions whose (even/margin)
//! decomposability matches the instance verdict.
//!
//! Every oracle works on exact rationals with strict comparison semantics.
//! The empty subset is excluded by default; reductions whose correctness
//! depends on the inclusive reading of "T strictly contained in S" say so in
//! their contract and are tested under that flag.

use crate::dist::FiniteDistribution;
use crate::poly::Poly;
use crate::rational::{int, ratio, Rational};
use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};
use num::Integer;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NpError {
    #[error("instance size {size} exceeds the brute-force cap {cap}")]
    InstanceTooLarge { size: usize, cap: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("element-wise shift requires the even variant")]
    ShiftOnPlainVariant,
    #[error("cardinality program degenerates when 2m = |S|; use the even variant")]
    DegenerateCardinality,
    #[error("gadget construction failed: {0}")]
    DegenerateGadget(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetVariant {
    /// Some proper T with |sum(T) - sum(S\T)| < bound.
    Plain,
    /// |T| = |S|/2 additionally.
    Even,
    /// |T| = m additionally.
    Cardinality(usize),
    /// |T| = m and the signed difference in the open window.
    Signed {
        cardinality: usize,
        window: (Rational, Rational),
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    pub elements: Vec<Rational>,
    pub bound: Rational,
    pub variant: SubsetVariant,
}

impl SubsetSumInstance {
    pub fn plain(elements: Vec<Rational>, bound: Rational) -> Self {
        SubsetSumInstance {
            elements,
            bound,
            variant: SubsetVariant::Plain,
        }
    }

    pub fn even(elements: Vec<Rational>, bound: Rational) -> Self {
        SubsetSumInstance {
            elements,
            bound,
            variant: SubsetVariant::Even,
        }
    }

    pub fn total(&self) -> Rational {
        self.elements.iter().cloned().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionInstance {
    pub elements: Vec<Rational>,
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub cap: usize,
    /// Whether the empty subset counts as a candidate T. The definitions'
    /// strict-containment reading admits it; the default excludes it.
    pub allow_empty: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            cap: 24,
            allow_empty: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    pub satisfiable: bool,
    /// Lexicographically smallest accepted index set (as a sorted sequence).
    pub witness: Option<Vec<usize>>,
}

fn mask_indices(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// Exhaustive subset scan with exact arithmetic; Gray-code updates keep one
/// rational addition per visited subset.
pub fn solve_subset_variant(
    inst: &SubsetSumInstance,
    opts: &OracleOptions,
) -> Result<OracleOutcome, NpError> {
    let n = inst.elements.len();
    if n > opts.cap {
        return Err(NpError::InstanceTooLarge {
            size: n,
            cap: opts.cap,
        });
    }
    if matches!(inst.variant, SubsetVariant::Even) && n % 2 != 0 {
        return Err(NpError::InvalidInstance(
            "even variant needs an even number of elements".into(),
        ));
    }
    if let SubsetVariant::Signed { window: (x, y), .. } = &inst.variant {
        if x > y {
            return Err(NpError::InvalidInstance("window needs x <= y".into()));
        }
    }
    let total = inst.total();
    let accepts = |t_sum: &Rational, count: usize| -> bool {
        let diff = t_sum * int(2) - &total;
        match &inst.variant {
            SubsetVariant::Plain => diff.abs() < inst.bound,
            SubsetVariant::Even => count == n / 2 && diff.abs() < inst.bound,
            SubsetVariant::Cardinality(m) => count == *m && diff.abs() < inst.bound,
            SubsetVariant::Signed {
                cardinality,
                window: (x, y),
            } => count == *cardinality && *x < diff && diff < *y,
        }
    };

    let mut best: Option<Vec<usize>> = None;
    let mut consider = |mask: u64, t_sum: &Rational| {
        let count = mask.count_ones() as usize;
        if accepts(t_sum, count) {
            let cand = mask_indices(mask, n);
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    };

    if opts.allow_empty {
        consider(0, &Rational::zero());
    }
    let mut gray = 0u64;
    let mut t_sum = Rational::zero();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    for k in 1..=full {
        let next = k ^ (k >> 1);
        let flipped = (next ^ gray).trailing_zeros() as usize;
        if next & (1 << flipped) != 0 {
            t_sum += &inst.elements[flipped];
        } else {
            t_sum -= &inst.elements[flipped];
        }
        gray = next;
        if next == full {
            // T = S is never a proper subset.
            continue;
        }
        consider(next, &t_sum);
    }
    Ok(OracleOutcome {
        satisfiable: best.is_some(),
        witness: best,
    })
}

/// Exact equal-sum bipartition search.
pub fn partition_oracle(
    inst: &PartitionInstance,
    opts: &OracleOptions,
) -> Result<OracleOutcome, NpError> {
    let n = inst.elements.len();
    if n > opts.cap {
        return Err(NpError::InstanceTooLarge {
            size: n,
            cap: opts.cap,
        });
    }
    if inst.elements.iter().any(|e| !e.is_positive()) {
        return Err(NpError::InvalidInstance(
            "partition elements must be positive".into(),
        ));
    }
    let total: Rational = inst.elements.iter().cloned().sum();
    let mut best: Option<Vec<usize>> = None;
    let mut gray = 0u64;
    let mut t_sum = Rational::zero();
    if n == 0 {
        return Ok(OracleOutcome {
            satisfiable: false,
            witness: None,
        });
    }
    let full = (1u64 << n) - 1;
    for k in 1..full {
        let next = k ^ (k >> 1);
        let flipped = (next ^ gray).trailing_zeros() as usize;
        if next & (1 << flipped) != 0 {
            t_sum += &inst.elements[flipped];
        } else {
            t_sum -= &inst.elements[flipped];
        }
        gray = next;
        if next == full || next == 0 {
            continue;
        }
        if &t_sum * int(2) == total {
            let cand = mask_indices(next, n);
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    Ok(OracleOutcome {
        satisfiable: best.is_some(),
        witness: best,
    })
}

/// Element-wise affine rescale: elements -> a*s + c, bound -> |a|*l. The
/// scale alone preserves every variant's verdict; the shift cancels only in
/// equal-cardinality differences, so c != 0 demands the even variant.
pub fn rescale_instance(
    inst: &SubsetSumInstance,
    a: &Rational,
    c: &Rational,
) -> Result<SubsetSumInstance, NpError> {
    if a.is_zero() {
        return Err(NpError::InvalidInstance("scale must be nonzero".into()));
    }
    if !c.is_zero() && !matches!(inst.variant, SubsetVariant::Even) {
        return Err(NpError::ShiftOnPlainVariant);
    }
    let elements = inst.elements.iter().map(|s| s * a + c).collect();
    let variant = match &inst.variant {
        SubsetVariant::Signed {
            cardinality,
            window: (x, y),
        } => {
            let (sx, sy) = (x * a, y * a);
            let window = if a.is_negative() { (sy, sx) } else { (sx, sy) };
            SubsetVariant::Signed {
                cardinality: *cardinality,
                window,
            }
        }
        v => v.clone(),
    };
    Ok(SubsetSumInstance {
        elements,
        bound: &inst.bound * a.abs(),
        variant,
    })
}

/// Plain -> Even by appending |S| zeros. Verdict equivalence holds under the
/// inclusive subset convention (`allow_empty = true`): the padded instance
/// can emulate both the empty and the full original subset through its
/// zero block, exactly the cases the literal strict-containment reading of
/// the plain problem admits.
pub fn pad_to_even(inst: &SubsetSumInstance) -> Result<SubsetSumInstance, NpError> {
    if !matches!(inst.variant, SubsetVariant::Plain) {
        return Err(NpError::InvalidInstance(
            "pad_to_even starts from the plain variant".into(),
        ));
    }
    let mut elements = inst.elements.clone();
    elements.extend(std::iter::repeat_n(Rational::zero(), inst.elements.len()));
    Ok(SubsetSumInstance::even(elements, inst.bound.clone()))
}

fn denominator_lcm(values: &[Rational]) -> BigInt {
    values
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Partition -> Subset Sum with the bound equal to the instance total:
/// integerize, append two balancing elements so the augmented total is 2,
/// and ask for |difference| < 2. The discreteness gap makes the window hit
/// exactly the equal-sum splits, so the emitted instance has the same
/// verdict as the partition oracle (under the default empty-excluding
/// convention).
pub fn partition_to_subset_sum(p: &PartitionInstance) -> Result<SubsetSumInstance, NpError> {
    if p.elements.iter().any(|e| !e.is_positive()) {
        return Err(NpError::InvalidInstance(
            "partition elements must be positive".into(),
        ));
    }
    let lcm = denominator_lcm(&p.elements);
    let lambda = Rational::from_integer(lcm) * int(2);
    let total: Rational = p.elements.iter().cloned().sum();
    let scaled_total = &lambda * &total;
    let mut elements: Vec<Rational> = p
        .elements
        .iter()
        .map(|e| e * &lambda * int(2))
        .collect();
    let balancer = -&scaled_total + int(1);
    elements.push(balancer.clone());
    elements.push(balancer);
    let inst = SubsetSumInstance::plain(elements, int(2));
    debug_assert_eq!(inst.total(), int(2));
    Ok(inst)
}

/// Cells of width 2a' (the largest width <= 2a dividing l evenly) covering
/// (-l - 2a', l + 2a'); dropping the two end cells recovers (-l, l).
pub fn interval_partition(l: &Rational, a: &Rational) -> Vec<(Rational, Rational)> {
    assert!(l.is_positive() && a.is_positive());
    let interior = {
        let q = l / a;
        let c = q.ceil().to_integer();
        if Rational::from_integer(c.clone()) < q {
            c + 1
        } else {
            c
        }
    };
    let count: i64 = interior.try_into().expect("cell count fits");
    let width = l / int(count) * int(2);
    let mut cells = Vec::new();
    let start = -l - &width;
    for i in 0..count + 2 {
        let lo = &start + &width * int(i);
        let hi = &lo + &width;
        cells.push((lo, hi));
    }
    cells
}

/// The disjunction program reducing a cardinality-constrained window query
/// to shifted plain cardinality queries.
#[derive(Debug, Clone)]
pub struct SubsetSumMProgram {
    /// Shifted instances; the program verdict is their disjunction.
    pub cells: Vec<SubsetSumInstance>,
}

impl SubsetSumMProgram {
    pub fn evaluate(&self, opts: &OracleOptions) -> Result<bool, NpError> {
        for cell in &self.cells {
            if solve_subset_variant(cell, opts)?.satisfiable {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Covers the window (-l, l) by overlapping signed cells, then centers each
/// cell by the shift c = -center/(2m - |S|), turning it into a plain
/// cardinality query on the shifted elements. Overlapping half-width steps
/// leave no point of the open window uncovered, so the disjunction
/// reproduces the direct m-constrained oracle exactly.
pub fn subset_sum_m_program(
    inst: &SubsetSumInstance,
    m: usize,
) -> Result<SubsetSumMProgram, NpError> {
    let n = inst.elements.len();
    if 2 * m == n {
        return Err(NpError::DegenerateCardinality);
    }
    if !inst.bound.is_positive() {
        return Ok(SubsetSumMProgram { cells: vec![] });
    }
    let l = inst.bound.clone();
    let skew = int(2 * m as i64 - n as i64);
    // Five cells of half-width l/3, centers spaced by half-widths.
    let a = &l / int(3);
    let mut cells = Vec::new();
    for j in 0..5i64 {
        let center = -&l + &a + &a * int(j);
        let shift = -&center / &skew;
        let shifted: Vec<Rational> = inst.elements.iter().map(|s| s + &shift).collect();
        cells.push(SubsetSumInstance {
            elements: shifted,
            bound: a.clone(),
            variant: SubsetVariant::Cardinality(m),
        });
    }
    Ok(SubsetSumMProgram { cells })
}

/// Scale/efficiency knobs for the gadget encoders.
#[derive(Debug, Clone)]
pub struct GadgetParams {
    /// c in the delta = c/n^2 smallness policy for the starting scale.
    pub delta_coeff: Rational,
    /// Largest instance size the encoders verify exhaustively.
    pub verify_cap: usize,
    /// Scale adjustments attempted before giving up.
    pub max_adjust: u32,
}

impl Default for GadgetParams {
    fn default() -> Self {
        GadgetParams {
            delta_coeff: ratio(1, 4),
            verify_cap: 12,
            max_adjust: 40,
        }
    }
}

/// x^2 + b x + 1.
fn gadget_quadratic(b: &Rational) -> Poly {
    Poly::new(vec![Rational::one(), b.clone(), Rational::one()])
}

fn product_of(bs: &[Rational], mask: u64, complement: bool) -> Poly {
    let mut acc = Poly::one();
    for (i, b) in bs.iter().enumerate() {
        let inside = mask & (1 << i) != 0;
        if inside != complement {
            acc = acc.mul(&gadget_quadratic(b));
        }
    }
    acc
}

/// Half-subset masks of an n-element set.
fn half_masks(n: usize) -> Vec<u64> {
    let mut out = Vec::new();
    for mask in 0..(1u64 << n) {
        if mask.count_ones() as usize == n / 2 {
            out.push(mask);
        }
    }
    out
}

/// Encodes an Even Subset Sum instance as a distribution whose even
/// decomposability equals the instance verdict.
///
/// The elements are centered and shifted per b_i = a(s_i - mean) + a*l_eff/n,
/// so a half-subset difference lands in the window |diff| < l_eff exactly
/// when both halves of the b-values have positive sum, which is what valid
/// quadratic-factor splits of the emitted polynomial detect. l_eff shrinks l
/// below the nearest achievable difference to clear boundary degeneracies,
/// and the scale a is halved until the sign-dominance of the linear terms is
/// exact for every half-subset (verified exhaustively up to `verify_cap`).
pub fn encode_even_subset_sum(
    inst: &SubsetSumInstance,
    params: &GadgetParams,
) -> Result<FiniteDistribution, NpError> {
    if !matches!(inst.variant, SubsetVariant::Even) {
        return Err(NpError::InvalidInstance(
            "encoder expects the even variant".into(),
        ));
    }
    let n = inst.elements.len();
    if n < 2 || n % 2 != 0 {
        return Err(NpError::InvalidInstance(
            "encoder needs an even number of elements, at least two".into(),
        ));
    }
    if n > params.verify_cap {
        return Err(NpError::InstanceTooLarge {
            size: n,
            cap: params.verify_cap,
        });
    }
    let l = &inst.bound;
    // Achievable half-subset absolute differences.
    let masks = half_masks(n);
    let total = inst.total();
    let mut diffs: Vec<Rational> = masks
        .iter()
        .map(|&mask| {
            let t: Rational = inst
                .elements
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| s.clone())
                .sum();
            (&t * int(2) - &total).abs()
        })
        .collect();
    diffs.sort();
    diffs.dedup();
    let verdict = diffs.iter().any(|v| v < l);

    // Shrink the window off every achievable boundary.
    let l_eff = if l.is_positive() {
        let nearest = diffs
            .iter()
            .filter(|v| *v != l)
            .map(|v| (v - l).abs())
            .min();
        match nearest {
            Some(gap) => l - gap / int(2),
            None => l / int(2),
        }
    } else {
        match diffs.iter().find(|v| v.is_positive()) {
            Some(min_pos) => min_pos / int(2),
            None => {
                return Err(NpError::DegenerateGadget(
                    "nonpositive bound with an exactly balanced split".into(),
                ))
            }
        }
    };
    if !l_eff.is_positive() {
        return Err(NpError::DegenerateGadget(
            "effective window collapsed to zero".into(),
        ));
    }

    let n_rat = int(n as i64);
    let mean = &total / &n_rat;
    let offsets: Vec<Rational> = inst
        .elements
        .iter()
        .map(|s| s - &mean + &l_eff / &n_rat)
        .collect();
    let max_offset = offsets
        .iter()
        .map(|o| o.abs())
        .max()
        .expect("nonempty instance");
    let delta = &params.delta_coeff / (&n_rat * &n_rat);
    let mut a = if max_offset.is_zero() {
        delta
    } else {
        &delta / (int(2) * &max_offset)
    };

    for _ in 0..params.max_adjust {
        let bs: Vec<Rational> = offsets.iter().map(|o| o * &a).collect();
        let f = product_of(&bs, 0, true);
        let pmf_ok = f.coeffs().iter().all(|c| c.is_positive());
        let split_exists = masks.iter().any(|&mask| {
            product_of(&bs, mask, false).is_nonnegative()
                && product_of(&bs, mask, true).is_nonnegative()
        });
        if pmf_ok && split_exists == verdict {
            let (d, _) = FiniteDistribution::from_char_poly(&f)
                .expect("verified positive coefficients");
            return Ok(d);
        }
        a /= int(2);
    }
    Err(NpError::DegenerateGadget(
        "no scale made the factor-split criterion match the oracle".into(),
    ))
}

/// Margin policy for the eps-relaxed encoder: the instance bound grows to
/// total + f(eps) with f(eps) = eps.
pub fn eps_bound_policy(total: &Rational, eps: &Rational) -> Rational {
    total + eps
}

/// Margin-relaxed partition oracle: is some signed split difference of the
/// multiset within eps of zero?
pub fn eps_relaxed_oracle(
    elements: &[Rational],
    eps: &Rational,
    opts: &OracleOptions,
) -> Result<bool, NpError> {
    let inst = SubsetSumInstance::plain(elements.to_vec(), eps.clone());
    Ok(solve_subset_variant(&inst, opts)?.satisfiable)
}

/// Encodes a multiset into a distribution whose eps-decomposability matches
/// the eps-relaxed partition verdict: negate the elements, append two
/// balancing elements total/2 + eps/2, and scale into gadget quadratics.
/// A balanced split leaves both factor groups with linear coefficient
/// a*eps/2 > 0 (an exact decomposition); an unbalanced one forces a negative
/// coefficient of size at least a * gap, which the margin test rejects once
/// a is large enough. The scale is searched and the equivalence verified
/// exhaustively before the distribution is emitted.
pub fn encode_subset_sum_eps(
    inst: &SubsetSumInstance,
    eps: &Rational,
    params: &GadgetParams,
) -> Result<FiniteDistribution, NpError> {
    if !eps.is_positive() {
        return Err(NpError::InvalidInstance("eps must be positive".into()));
    }
    let n = inst.elements.len();
    if n == 0 {
        return Err(NpError::InvalidInstance("empty multiset".into()));
    }
    if n + 2 > params.verify_cap {
        return Err(NpError::InstanceTooLarge {
            size: n + 2,
            cap: params.verify_cap,
        });
    }
    let total = inst.total();
    let balancer = &total / int(2) + eps / int(2);
    let mut augmented: Vec<Rational> = inst.elements.iter().map(|s| -s).collect();
    augmented.push(balancer.clone());
    augmented.push(balancer);

    let opts = OracleOptions::default();
    let verdict = eps_relaxed_oracle(&inst.elements, eps, &opts)?;

    let n_aug = augmented.len();
    let n_rat = int(n_aug as i64);
    let max_abs = augmented
        .iter()
        .map(|s| s.abs())
        .max()
        .expect("nonempty");
    let delta = &params.delta_coeff / (&n_rat * &n_rat);
    let base = if max_abs.is_zero() {
        delta.clone()
    } else {
        &delta / (int(2) * &max_abs)
    };

    // Both growth and shrink directions: rejection of near-splits needs the
    // scale large, sign dominance needs it small.
    let mut candidates = vec![base.clone()];
    let mut up = base.clone();
    let mut down = base;
    for _ in 0..params.max_adjust / 2 {
        up = &up * int(2);
        down = &down / int(2);
        candidates.push(up.clone());
        candidates.push(down.clone());
    }

    for a in candidates {
        let bs: Vec<Rational> = augmented.iter().map(|s| s * &a).collect();
        let f = product_of(&bs, 0, true);
        if !f.is_nonnegative() || f.coeff(0).is_zero() || f.leading().is_zero() {
            continue;
        }
        let Ok((d, _)) = FiniteDistribution::from_char_poly(&f) else {
            continue;
        };
        // Simulate the margin acceptance over every bipartition.
        let mut any_accept = false;
        for mask in 1..((1u64 << n_aug) - 1) {
            let left = product_of(&bs, mask, false);
            let right = product_of(&bs, mask, true);
            let accept = (|| {
                let l = clamp_nonneg(&left)?;
                let r = clamp_nonneg(&right)?;
                let conv = l.convolve(&r);
                Some(conv.sup_distance(&d) < *eps)
            })()
            .unwrap_or(false);
            if accept {
                any_accept = true;
                break;
            }
        }
        if any_accept == verdict {
            return Ok(d);
        }
    }
    Err(NpError::DegenerateGadget(
        "no scale made the margin acceptance match the relaxed oracle".into(),
    ))
}

fn clamp_nonneg(p: &Poly) -> Option<FiniteDistribution> {
    let coeffs: Vec<Rational> = p
        .coeffs()
        .iter()
        .map(|c| {
            if c.is_negative() {
                Rational::zero()
            } else {
                c.clone()
            }
        })
        .collect();
    FiniteDistribution::normalize(&coeffs).ok().map(|(d, _)| d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rats(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn plain_oracle_examples() {
        let opts = OracleOptions::default();
        let yes = SubsetSumInstance::plain(rats(&[1, 2, 3]), ratio(1, 2));
        let out = solve_subset_variant(&yes, &opts).unwrap();
        assert!(out.satisfiable);
        assert_eq!(out.witness.unwrap(), vec![0, 1]);

        let no = SubsetSumInstance::plain(rats(&[1, 2]), ratio(1, 2));
        assert!(!solve_subset_variant(&no, &opts).unwrap().satisfiable);
    }

    #[test]
    fn even_oracle_example() {
        let opts = OracleOptions::default();
        let inst = SubsetSumInstance::even(rats(&[1, 3]), int(3));
        let out = solve_subset_variant(&inst, &opts).unwrap();
        assert!(out.satisfiable);
        assert_eq!(out.witness.unwrap(), vec![0]);
        assert!(matches!(
            solve_subset_variant(
                &SubsetSumInstance::even(rats(&[1, 2, 3]), int(1)),
                &opts
            ),
            Err(NpError::InvalidInstance(_))
        ));
    }

    #[test]
    fn witnesses_satisfy_their_variant() {
        let opts = OracleOptions::default();
        let inst = SubsetSumInstance {
            elements: rats(&[4, -2, 7, 1]),
            bound: int(0),
            variant: SubsetVariant::Signed {
                cardinality: 2,
                window: (int(-1), int(12)),
            },
        };
        let out = solve_subset_variant(&inst, &opts).unwrap();
        if let Some(w) = &out.witness {
            assert_eq!(w.len(), 2);
            let t: Rational = w.iter().map(|&i| inst.elements[i].clone()).sum();
            let diff = &t * int(2) - inst.total();
            assert!(int(-1) < diff && diff < int(12));
        } else {
            panic!("expected a witness");
        }
    }

    #[test]
    fn partition_examples() {
        let opts = OracleOptions::default();
        let yes = PartitionInstance {
            elements: rats(&[3, 1, 1, 2, 2, 1]),
        };
        let out = partition_oracle(&yes, &opts).unwrap();
        assert!(out.satisfiable);
        let w = out.witness.unwrap();
        let t: Rational = w.iter().map(|&i| yes.elements[i].clone()).sum();
        assert_eq!(&t * int(2), int(10));

        assert!(
            !partition_oracle(
                &PartitionInstance {
                    elements: rats(&[1, 2])
                },
                &opts
            )
            .unwrap()
            .satisfiable
        );
        assert!(partition_oracle(
            &PartitionInstance {
                elements: rats(&[1, 1])
            },
            &opts
        )
        .unwrap()
        .satisfiable);
    }

    #[test]
    fn rescale_preserves_verdict() {
        let opts = OracleOptions::default();
        let inst = SubsetSumInstance::plain(rats(&[1, 2, 3]), int(1));
        let scaled = rescale_instance(&inst, &int(2), &int(0)).unwrap();
        assert_eq!(scaled.elements, rats(&[2, 4, 6]));
        assert_eq!(scaled.bound, int(2));
        assert_eq!(
            solve_subset_variant(&inst, &opts).unwrap().satisfiable,
            solve_subset_variant(&scaled, &opts).unwrap().satisfiable
        );

        let even = SubsetSumInstance::even(rats(&[1, 3]), int(3));
        let shifted = rescale_instance(&even, &int(1), &int(5)).unwrap();
        assert_eq!(shifted.elements, rats(&[6, 8]));
        assert_eq!(
            solve_subset_variant(&even, &opts).unwrap().satisfiable,
            solve_subset_variant(&shifted, &opts).unwrap().satisfiable
        );

        assert!(matches!(
            rescale_instance(&inst, &int(1), &int(5)),
            Err(NpError::ShiftOnPlainVariant)
        ));
        // Identity rescale.
        assert_eq!(rescale_instance(&inst, &int(1), &int(0)).unwrap(), inst);
    }

    #[test]
    fn pad_to_even_structure() {
        let inst = SubsetSumInstance::plain(rats(&[1, 2, 3]), int(1));
        let padded = pad_to_even(&inst).unwrap();
        assert_eq!(padded.elements, rats(&[1, 2, 3, 0, 0, 0]));
        assert!(matches!(padded.variant, SubsetVariant::Even));
    }

    #[test]
    fn pad_to_even_verdicts_match_under_inclusive_convention() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let inclusive = OracleOptions {
            allow_empty: true,
            ..OracleOptions::default()
        };
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.random_range(1..=7);
            let elements: Vec<Rational> = (0..n)
                .map(|_| ratio(rng.random_range(-20..=20), rng.random_range(1..=4)))
                .collect();
            let bound = ratio(rng.random_range(0..=30), rng.random_range(1..=3));
            let inst = SubsetSumInstance::plain(elements, bound);
            let padded = pad_to_even(&inst).unwrap();
            let a = solve_subset_variant(&inst, &inclusive).unwrap().satisfiable;
            let b = solve_subset_variant(&padded, &inclusive)
                .unwrap()
                .satisfiable;
            assert_eq!(a, b, "instance {inst:?}");
        }
    }

    #[test]
    fn partition_reduction_matches_oracle() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let opts = OracleOptions::default();
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..60 {
            let n = rng.random_range(1..=8);
            let elements: Vec<Rational> = (0..n)
                .map(|_| ratio(rng.random_range(1..=12), rng.random_range(1..=3)))
                .collect();
            let p = PartitionInstance { elements };
            let reduced = partition_to_subset_sum(&p).unwrap();
            assert_eq!(reduced.bound, reduced.total());
            let a = partition_oracle(&p, &opts).unwrap().satisfiable;
            let b = solve_subset_variant(&reduced, &opts).unwrap().satisfiable;
            assert_eq!(a, b, "partition {p:?}");
        }
        // The singleton: no proper nontrivial split on either side.
        let p = PartitionInstance {
            elements: rats(&[1]),
        };
        let reduced = partition_to_subset_sum(&p).unwrap();
        assert!(!partition_oracle(&p, &opts).unwrap().satisfiable);
        assert!(!solve_subset_variant(&reduced, &opts).unwrap().satisfiable);
    }

    #[test]
    fn interval_partition_cells() {
        let cells = interval_partition(&int(1), &ratio(1, 4));
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0].0, ratio(-3, 2));
        assert_eq!(cells.last().unwrap().1, ratio(3, 2));
        for w in cells.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        // Interior cells recover (-l, l).
        assert_eq!(cells[1].0, int(-1));
        assert_eq!(cells[cells.len() - 2].1, int(1));
    }

    #[test]
    fn m_program_matches_direct_oracle() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let opts = OracleOptions::default();
        let mut rng = StdRng::seed_from_u64(17);
        let mut checked = 0;
        while checked < 60 {
            let n = rng.random_range(2..=7);
            let m = rng.random_range(1..n);
            if 2 * m == n {
                continue;
            }
            let elements: Vec<Rational> = (0..n)
                .map(|_| ratio(rng.random_range(-10..=10), rng.random_range(1..=3)))
                .collect();
            let bound = ratio(rng.random_range(1..=25), rng.random_range(1..=2));
            let inst = SubsetSumInstance {
                elements,
                bound,
                variant: SubsetVariant::Cardinality(m),
            };
            let direct = solve_subset_variant(&inst, &opts).unwrap().satisfiable;
            let program = subset_sum_m_program(&inst, m).unwrap();
            let via_cells = program.evaluate(&opts).unwrap();
            assert_eq!(direct, via_cells, "instance {inst:?}");
            checked += 1;
        }
        let degenerate = SubsetSumInstance {
            elements: rats(&[1, 2, 3, 4]),
            bound: int(1),
            variant: SubsetVariant::Cardinality(2),
        };
        assert!(matches!(
            subset_sum_m_program(&degenerate, 2),
            Err(NpError::DegenerateCardinality)
        ));
    }

    #[test]
    fn even_encoder_examples() {
        let params = GadgetParams::default();
        let inst = SubsetSumInstance::even(rats(&[1, 3]), int(3));
        let d = encode_even_subset_sum(&inst, &params).unwrap();
        assert_eq!(d.support_width(), 4);
        // The emitted pmf is a genuine distribution with positive mass.
        assert!(d.probs().iter().all(|p| p.is_positive()));

        // Equal elements, tiny bound: difference 0 < l, a Yes instance.
        let inst = SubsetSumInstance::even(
            vec![int(1), int(1)],
            ratio(1, 1000),
        );
        assert!(encode_even_subset_sum(&inst, &params).is_ok());
    }

    #[test]
    fn eps_encoder_bound_policy() {
        assert_eq!(eps_bound_policy(&int(4), &int(0)), int(4));
        assert_eq!(eps_bound_policy(&int(4), &ratio(1, 10)), ratio(41, 10));
    }
}
