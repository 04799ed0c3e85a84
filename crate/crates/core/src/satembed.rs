//! Embedding of 1-in-3 satisfiability into families of rational matrices:
//! one branch per truth assignment, built so that a branch is entrywise
//! nonnegative exactly when its assignment satisfies the instance, while all
//! branches share the same square.
//!
//! The construction sums rank-one tensor terms w w^T (x) pattern over a set
//! of vectors that is orthogonalized exactly: every unordered vector pair
//! owns a dedicated coordinate carrying the solved correction, and two more
//! coordinates per vector cancel the inner products against the dense mask
//! vectors. Each clause occupies a 2x2 diagonal block whose off-diagonal
//! entries are 3/2 + P and -1/2 - P for the clause's rescaled literal sum P,
//! so nonnegativity of the block is the 1-in-3 window. Negated literals get
//! their own indicator vectors, since polarity squares away inside a single
//! rank-one term. One mask erases the unwanted coding entries, a rank-2 mask
//! floods everything outside the coding region, and the common zero
//! eigenspace is shifted off zero by exact projector terms.
//!
//! Branch nonnegativity is decided in exact rational arithmetic, and the
//! assembly validates its own inequality margins: a scan that finds a branch
//! whose entry signs disagree with its clause-level verdict reports the
//! parameters as too small instead of returning a wrong answer.

use crate::matrix::RationalMatrix;
use crate::rational::{int, ratio, Rational};
use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SatError {
    #[error("instance needs {0} branches, over the cap {1}")]
    InstanceTooLarge(usize, usize),
    #[error("literal {0} does not reference a variable in 1..={1}")]
    InvalidLiteral(i32, usize),
    #[error("embedding parameters too small: {0}")]
    ParamsTooSmall(String),
}

/// 1-in-3-SAT instance; literals are signed 1-based variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatInstance {
    pub n_v: usize,
    pub clauses: Vec<[i32; 3]>,
}

impl SatInstance {
    pub fn new(n_v: usize, clauses: Vec<[i32; 3]>) -> Result<Self, SatError> {
        let inst = SatInstance { n_v, clauses };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), SatError> {
        for clause in &self.clauses {
            for &lit in clause {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > self.n_v {
                    return Err(SatError::InvalidLiteral(lit, self.n_v));
                }
            }
        }
        Ok(())
    }

    pub fn n_c(&self) -> usize {
        self.clauses.len()
    }

    /// True when the assignment makes exactly one literal of every clause
    /// true.
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|clause| {
            let trues = clause
                .iter()
                .filter(|&&lit| {
                    let var = lit.unsigned_abs() as usize - 1;
                    assignment[var] == (lit > 0)
                })
                .count();
            trues == 1
        })
    }
}

/// A 4-variable, 4-clause instance in which every variable occurs in three
/// clauses; unsatisfiable by counting (a satisfying assignment with t true
/// variables would need 3t = 4).
pub fn regular_unsat_instance() -> SatInstance {
    SatInstance::new(4, vec![[1, 2, 4], [2, 3, 4], [1, 3, 4], [1, 2, 3]])
        .expect("well-formed fixture")
}

/// Exhaustive 1-in-3 satisfiability with the first satisfying assignment in
/// index order as witness.
pub fn sat_oracle(inst: &SatInstance, cap: usize) -> Result<Option<Vec<bool>>, SatError> {
    inst.validate()?;
    if inst.n_v > cap {
        return Err(SatError::InstanceTooLarge(inst.n_v, cap));
    }
    for idx in 0u64..(1u64 << inst.n_v) {
        let assignment: Vec<bool> = (0..inst.n_v).map(|k| idx & (1 << k) != 0).collect();
        if inst.satisfied_by(&assignment) {
            return Ok(Some(assignment));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone)]
pub struct EmbeddingParams {
    /// N in the literal rescale 1 - 1/N - j/(N n): N = n_scale * n_v.
    pub n_scale: u32,
    /// M in the eraser rescale t_i = 1 - 1/M - i/(M n_c): M = m_scale * n_c.
    pub m_scale: u32,
    /// delta >= delta_factor * total matrix dimension.
    pub delta_factor: u32,
    /// Flood weight N_D = nd_factor * (entry bound of C_s + E) * delta.
    pub nd_factor: u32,
    /// Constant C in the singularity-lift budget 1/(C d^3 max|entry|).
    pub sing_c: Rational,
    /// Shift the common zero eigenspace off zero.
    pub lift_singularities: bool,
    /// Rescale the family so its largest entry is 1/2.
    pub rescale: bool,
    /// Cap on the 2^{n_v} branch enumeration.
    pub branch_cap: usize,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            n_scale: 100,
            m_scale: 100,
            delta_factor: 100,
            nd_factor: 10,
            sing_c: int(1000),
            lift_singularities: true,
            rescale: true,
            branch_cap: 1024,
        }
    }
}

/// Distinct rescale magnitudes per (variable, polarity) indicator.
fn literal_scales(
    inst: &SatInstance,
    params: &EmbeddingParams,
) -> BTreeMap<(usize, bool), Rational> {
    let mut keys: Vec<(usize, bool)> = Vec::new();
    for clause in &inst.clauses {
        for &lit in clause {
            let key = (lit.unsigned_abs() as usize - 1, lit > 0);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    keys.sort();
    let count = keys.len().max(1) as i64;
    let n = int((params.n_scale as usize * inst.n_v.max(1)) as i64);
    keys.into_iter()
        .enumerate()
        .map(|(j, key)| {
            let scale = int(1) - int(1) / &n - int(j as i64 + 1) / (&n * int(count));
            (key, scale)
        })
        .collect()
}

/// Per-clause inequality margins (3/2 + P_i, -1/2 - P_i) of the rescaled
/// literal sums under the given assignment; both positive exactly when the
/// 1-in-3 window holds with the rescale headroom.
pub fn clause_inequalities(
    inst: &SatInstance,
    assignment: &[bool],
    params: &EmbeddingParams,
) -> Vec<(Rational, Rational)> {
    assert_eq!(assignment.len(), inst.n_v);
    let scales = literal_scales(inst, params);
    inst.clauses
        .iter()
        .map(|clause| {
            let p: Rational = clause
                .iter()
                .map(|&lit| {
                    let var = lit.unsigned_abs() as usize - 1;
                    let sign = if assignment[var] == (lit > 0) {
                        int(1)
                    } else {
                        int(-1)
                    };
                    sign * &scales[&(var, lit > 0)]
                })
                .sum();
            (ratio(3, 2) + &p, ratio(-1, 2) - &p)
        })
        .collect()
}

const J_C1: [[i64; 2]; 2] = [[1, 1], [-1, 1]];
const J_SWAP: [[i64; 2]; 2] = [[0, 1], [1, 0]];
const J_V: [[i64; 2]; 2] = [[0, 1], [-1, 0]];
const J_ONES: [[i64; 2]; 2] = [[1, 1], [1, 1]];
const J_D2: [[i64; 2]; 2] = [[1, 0], [1, 0]];
const J_ID: [[i64; 2]; 2] = [[1, 0], [0, 1]];
const J_MINUS: [[i64; 2]; 2] = [[1, -1], [-1, 1]];

/// One rank-one tensor term: coeff * w w^T (x) pattern.
struct Term {
    vector: usize,
    pattern: [[i64; 2]; 2],
    coeff: Rational,
}

/// The fully laid-out embedding of one instance.
///
/// Matrices are assembled in an integer-rescaled space: every vector is
/// cleared of denominators and all term coefficients share one global
/// denominator, so branch assembly and the nonnegativity scans run on plain
/// big integers. Rational matrices are materialized only at the public API.
pub struct Embedding {
    inst: SatInstance,
    /// Vector-space dimension; matrices are 2 * dim_v square.
    dim_v: usize,
    /// All construction vectors, dense, pairwise orthogonal.
    vectors: Vec<Vec<Rational>>,
    /// Sign-independent terms: coding frames, masks and lift projections.
    static_terms: Vec<Term>,
    /// Sign-dependent terms: (vector, variable, coefficient magnitude).
    branch_terms: Vec<(usize, usize, Rational)>,
    /// Indices of the flood-mask vectors within `vectors`.
    flood_e2: usize,
    flood_delta: usize,
    /// Uniform diagonal shift of the lift (zero when lifting is off).
    lift_diagonal: Rational,
    /// Global positive rescale applied to every branch matrix.
    scale: Rational,
    /// Integer-cleared vectors and the per-vector denominators.
    int_vectors: Vec<Vec<BigInt>>,
    /// Shared denominator: true matrix = integer matrix * scale / big_g.
    big_g: BigInt,
    /// Integer coefficients of the sign-dependent terms.
    int_branch: Vec<(usize, usize, BigInt)>,
    /// Cached integer sum of all sign-independent terms.
    base_int: Vec<BigInt>,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub nonnegative_branch: Option<u64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        2 * self.dim_v
    }

    pub fn branch_count(&self) -> u64 {
        1u64 << self.inst.n_v
    }

    pub fn assignment_of(&self, idx: u64) -> Vec<bool> {
        (0..self.inst.n_v).map(|k| idx & (1 << k) != 0).collect()
    }

    fn add_outer(
        matrix: &mut RationalMatrix,
        w: &[Rational],
        pattern: &[[i64; 2]; 2],
        coeff: &Rational,
    ) {
        for (p, wp) in w.iter().enumerate() {
            if wp.is_zero() {
                continue;
            }
            for (q, wq) in w.iter().enumerate() {
                if wq.is_zero() {
                    continue;
                }
                let base = coeff * wp * wq;
                for (alpha, row) in pattern.iter().enumerate() {
                    for (beta, &pat) in row.iter().enumerate() {
                        if pat == 0 {
                            continue;
                        }
                        *matrix.get_mut(2 * p + alpha, 2 * q + beta) += &base * int(pat);
                    }
                }
            }
        }
    }

    fn add_outer_int(
        entries: &mut [BigInt],
        dim: usize,
        w: &[BigInt],
        pattern: &[[i64; 2]; 2],
        gamma: &BigInt,
    ) {
        for (p, wp) in w.iter().enumerate() {
            if wp.is_zero() {
                continue;
            }
            let row_coeff = gamma * wp;
            for (q, wq) in w.iter().enumerate() {
                if wq.is_zero() {
                    continue;
                }
                let base = &row_coeff * wq;
                for (alpha, row) in pattern.iter().enumerate() {
                    for (beta, &pat) in row.iter().enumerate() {
                        if pat == 0 {
                            continue;
                        }
                        let idx = (2 * p + alpha) * dim + 2 * q + beta;
                        if pat == 1 {
                            entries[idx] += &base;
                        } else {
                            entries[idx] += &base * BigInt::from(pat);
                        }
                    }
                }
            }
        }
    }

    /// Integer branch matrix: cached base plus the sparse sign terms. The
    /// true matrix is this divided by `big_g` and multiplied by `scale`.
    fn branch_int(&self, idx: u64) -> Vec<BigInt> {
        let assignment = self.assignment_of(idx);
        let mut entries = self.base_int.clone();
        for (vector, var, gamma) in &self.int_branch {
            let signed = if assignment[*var] {
                gamma.clone()
            } else {
                -gamma.clone()
            };
            Self::add_outer_int(
                &mut entries,
                self.dim(),
                &self.int_vectors[*vector],
                &J_V,
                &signed,
            );
        }
        entries
    }

    /// Branch matrix for the assignment encoded in `idx` (bit k = variable
    /// k+1 true).
    pub fn branch_matrix(&self, idx: u64) -> RationalMatrix {
        let ints = self.branch_int(idx);
        let factor = &self.scale / Rational::from_integer(self.big_g.clone());
        RationalMatrix::new(
            self.dim(),
            ints.into_iter()
                .map(|e| Rational::from_integer(e) * &factor)
                .collect(),
        )
        .expect("square")
    }

    /// Entry-sign scan of every branch with built-in margin validation: a
    /// branch whose global nonnegativity disagrees with its clause-level
    /// verdict means a mask or rescale constant is too small.
    pub fn scan_branches(&self) -> Result<ScanReport, SatError> {
        let mut first: Option<u64> = None;
        for idx in 0..self.branch_count() {
            let assignment = self.assignment_of(idx);
            let expected = self.inst.satisfied_by(&assignment);
            // Nonnegativity is invariant under the positive global rescale.
            let nonneg = self
                .branch_int(idx)
                .iter()
                .all(|e| e.sign() != num::bigint::Sign::Minus);
            if nonneg != expected {
                return Err(SatError::ParamsTooSmall(format!(
                    "branch {idx}: entry signs say {nonneg}, clause windows say {expected}"
                )));
            }
            if nonneg && first.is_none() {
                first = Some(idx);
            }
        }
        Ok(ScanReport {
            nonnegative_branch: first,
        })
    }

    /// First nonnegative branch, if any.
    pub fn exists_nonnegative_branch(&self) -> Result<Option<(u64, Vec<bool>)>, SatError> {
        Ok(self
            .scan_branches()?
            .nonnegative_branch
            .map(|idx| (idx, self.assignment_of(idx))))
    }

    /// Floating-point branch matrix (scale applied).
    pub fn branch_f64(&self, idx: u64) -> ndarray::Array2<f64> {
        let factor = crate::rational::to_f64(
            &(&self.scale / Rational::from_integer(self.big_g.clone())),
        );
        let ints = self.branch_int(idx);
        let d = self.dim();
        ndarray::Array2::from_shape_fn((d, d), |(i, j)| {
            crate::rational::to_f64(&Rational::from_integer(ints[i * d + j].clone())) * factor
        })
    }

    /// Max sup-norm deviation between consecutive branch squares, floating
    /// point.
    pub fn shared_square_deviation(&self) -> f64 {
        use ndarray::Array2;
        let squares: Vec<Array2<f64>> = (0..self.branch_count())
            .map(|idx| {
                let m = self.branch_f64(idx);
                m.dot(&m)
            })
            .collect();
        let mut worst = 0.0f64;
        for pair in squares.windows(2) {
            let dev = (&pair[0] - &pair[1])
                .iter()
                .map(|x| x.abs())
                .fold(0.0f64, f64::max);
            worst = worst.max(dev);
        }
        worst
    }

    /// The shared square, exact, from one branch.
    pub fn shared_square(&self) -> RationalMatrix {
        let d = self.dim();
        let ints = self.branch_int(0);
        // Integer matmul, then one rational conversion.
        let mut sq = vec![BigInt::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = &ints[i * d + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = &ints[k * d + j];
                    if b.is_zero() {
                        continue;
                    }
                    sq[i * d + j] += a * b;
                }
            }
        }
        let factor = &self.scale / Rational::from_integer(self.big_g.clone());
        let factor_sq = &factor * &factor;
        RationalMatrix::new(
            d,
            sq.into_iter()
                .map(|e| Rational::from_integer(e) * &factor_sq)
                .collect(),
        )
        .expect("square")
    }

    /// The coding part C_s alone (no masks, no lift, unscaled).
    pub fn coding_matrix(&self, assignment: &[bool]) -> RationalMatrix {
        assert_eq!(assignment.len(), self.inst.n_v);
        let mut m = RationalMatrix::zeros(self.dim());
        for term in &self.static_terms {
            if term.pattern == J_C1 || term.pattern == J_SWAP {
                Self::add_outer(&mut m, &self.vectors[term.vector], &term.pattern, &term.coeff);
            }
        }
        for (vector, var, magnitude) in &self.branch_terms {
            let coeff = if assignment[*var] {
                magnitude.clone()
            } else {
                -magnitude.clone()
            };
            Self::add_outer(&mut m, &self.vectors[*vector], &J_V, &coeff);
        }
        m
    }

    /// The eraser mask E alone: rank n_c + 1, zero on the clause diagonal
    /// blocks up to the deliberate t_i offsets.
    pub fn eraser_matrix(&self) -> RationalMatrix {
        let mut m = RationalMatrix::zeros(self.dim());
        for term in &self.static_terms {
            if term.pattern == J_ONES && term.vector != self.flood_e2 {
                Self::add_outer(&mut m, &self.vectors[term.vector], &term.pattern, &term.coeff);
            }
        }
        m
    }

    /// The flood mask D alone (unit weight).
    pub fn flood_matrix(&self) -> RationalMatrix {
        let mut m = RationalMatrix::zeros(self.dim());
        Self::add_outer(&mut m, &self.vectors[self.flood_e2], &J_ONES, &int(1));
        Self::add_outer(&mut m, &self.vectors[self.flood_delta], &J_D2, &int(1));
        m
    }

    /// Exact Gram check: every pair of construction vectors orthogonal.
    pub fn gram_is_diagonal(&self) -> bool {
        for (i, a) in self.vectors.iter().enumerate() {
            for b in self.vectors.iter().skip(i + 1) {
                let dot: Rational = a.iter().zip(b).map(|(x, y)| x * y).sum();
                if !dot.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Minimum eigenvalue gap of the shared square, reported numerically.
    /// Directions the lift leaves untouched keep this at zero.
    pub fn spectral_gap(&self) -> f64 {
        use ndarray_linalg::Eig;
        let sq = self.shared_square().to_f64();
        let Ok((vals, _)) = sq.eig() else {
            return f64::NAN;
        };
        let mut gap = f64::INFINITY;
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                gap = gap.min((vals[i] - vals[j]).norm());
            }
        }
        gap
    }
}

/// Builds the full branch family for an instance.
pub fn assemble_family(
    inst: &SatInstance,
    params: &EmbeddingParams,
) -> Result<Embedding, SatError> {
    inst.validate()?;
    if inst.n_v >= 63 || (1u64 << inst.n_v) > params.branch_cap as u64 {
        return Err(SatError::InstanceTooLarge(
            1usize << inst.n_v.min(62),
            params.branch_cap,
        ));
    }
    let n_c = inst.n_c();
    let scales = literal_scales(inst, params);

    #[derive(Clone, PartialEq)]
    enum Role {
        AllOnes,
        Literal(usize, bool),
        ClauseUnit(usize),
    }
    // c1, c2, one indicator per (variable, polarity), eraser frame, one
    // eraser per clause.
    let mut roles: Vec<Role> = vec![Role::AllOnes, Role::AllOnes];
    for key in scales.keys() {
        roles.push(Role::Literal(key.0, key.1));
    }
    let e1_index = roles.len();
    roles.push(Role::AllOnes);
    let b_base = roles.len();
    for i in 0..n_c {
        roles.push(Role::ClauseUnit(i));
    }
    let r = roles.len();

    // Coordinate layout: coding block, one slot per vector pair, two mask
    // cancellation slots per vector, one closing coordinate for the masks.
    let pair_base = n_c;
    let pair_count = r * (r - 1) / 2;
    let ext_base = pair_base + pair_count;
    let last = ext_base + 2 * r;
    let dim_v = last + 1;
    let pair_slot = |i: usize, j: usize| -> usize {
        debug_assert!(i < j);
        pair_base + i * r - i * (i + 1) / 2 + (j - i - 1)
    };
    let ext_u = |w: usize| ext_base + 2 * w;
    let ext_t = |w: usize| ext_base + 2 * w + 1;

    let occurs = |role: &Role, clause_idx: usize| -> Rational {
        match role {
            Role::AllOnes => int(1),
            Role::Literal(var, pol) => {
                let hit = inst.clauses[clause_idx]
                    .iter()
                    .any(|&lit| lit.unsigned_abs() as usize - 1 == *var && (lit > 0) == *pol);
                if hit {
                    int(1)
                } else {
                    int(0)
                }
            }
            Role::ClauseUnit(i) => {
                if *i == clause_idx {
                    int(1)
                } else {
                    int(0)
                }
            }
        }
    };

    let e2 = r;
    let dvec = r + 1;
    let build_vectors = |delta: &Rational| -> Vec<Vec<Rational>> {
        let mut vectors: Vec<Vec<Rational>> = vec![vec![Rational::zero(); dim_v]; r + 2];
        for (w, role) in roles.iter().enumerate() {
            for c in 0..n_c {
                vectors[w][c] = occurs(role, c);
            }
        }
        // Pairwise orthogonalization: slot (i, j) holds the anchor 1 in
        // vector i and the solved correction in vector j. Slots are owned by
        // exactly one pair, so corrections never interact.
        for i in 0..r {
            for j in i + 1..r {
                let slot = pair_slot(i, j);
                vectors[i][slot] = Rational::one();
                let overlap: Rational =
                    (0..n_c).map(|c| &vectors[i][c] * &vectors[j][c]).sum();
                vectors[j][slot] = -overlap;
            }
        }
        // Flood vectors: E2 = 1/delta on coding coordinates and 1 elsewhere;
        // Delta = 2/delta on coding, -1/delta on the middle and t-slots,
        // 0 on u-slots, and a closing value orthogonalizing it against E2.
        for c in 0..dim_v {
            vectors[e2][c] = if c < n_c { int(1) / delta } else { int(1) };
            vectors[dvec][c] = if c < n_c {
                int(2) / delta
            } else {
                -int(1) / delta
            };
        }
        for w in 0..r {
            vectors[dvec][ext_u(w)] = Rational::zero();
        }
        let partial: Rational = (0..last)
            .map(|c| &vectors[e2][c] * &vectors[dvec][c])
            .sum();
        vectors[dvec][last] = -partial;
        vectors[e2][last] = Rational::one();
        // Per-vector cancellation against both floods: the t-slot absorbs
        // the Delta inner product, then the u-slot the E2 one.
        for w in 0..r {
            let base_d: Rational = (0..dim_v)
                .filter(|&c| c != ext_u(w) && c != ext_t(w))
                .map(|c| &vectors[w][c] * &vectors[dvec][c])
                .sum();
            vectors[w][ext_t(w)] = &base_d * delta;
            let base_e: Rational = (0..dim_v)
                .filter(|&c| c != ext_u(w))
                .map(|c| &vectors[w][c] * &vectors[e2][c])
                .sum();
            vectors[w][ext_u(w)] = -base_e;
        }
        vectors
    };

    let m_big = int((params.m_scale as usize * n_c.max(1)) as i64);
    let eraser_t = |i: usize| -> Rational {
        int(1) - int(1) / &m_big - int(i as i64 + 1) / (&m_big * int(n_c.max(1) as i64))
    };

    let coding_terms = || -> (Vec<Term>, Vec<(usize, usize, Rational)>) {
        let mut static_terms = vec![
            Term {
                vector: 0,
                pattern: J_C1,
                coeff: int(1),
            },
            Term {
                vector: 1,
                pattern: J_SWAP,
                coeff: ratio(1, 2),
            },
        ];
        let mut branch_terms = Vec::new();
        for (w, role) in roles.iter().enumerate() {
            match role {
                Role::Literal(var, pol) => {
                    let signed = if *pol {
                        scales[&(*var, *pol)].clone()
                    } else {
                        -scales[&(*var, *pol)].clone()
                    };
                    branch_terms.push((w, *var, signed));
                }
                Role::ClauseUnit(i) => static_terms.push(Term {
                    vector: w,
                    pattern: J_ONES,
                    coeff: -ratio(7, 2) * eraser_t(*i),
                }),
                Role::AllOnes if w == e1_index => static_terms.push(Term {
                    vector: w,
                    pattern: J_ONES,
                    coeff: ratio(7, 2),
                }),
                Role::AllOnes => {}
            }
        }
        (static_terms, branch_terms)
    };

    // Provisional pass: bound the entry magnitudes of the unmasked part so
    // delta and the flood weight can be sized.
    let delta_floor = int((params.delta_factor as usize * 2 * dim_v) as i64);
    let magnitude_bound = {
        let provisional = build_vectors(&delta_floor);
        let (terms_p, branch_p) = coding_terms();
        let mut acc = RationalMatrix::zeros(2 * dim_v);
        for t in &terms_p {
            let absd: Vec<Rational> = provisional[t.vector].iter().map(|x| x.abs()).collect();
            let pat = [
                [t.pattern[0][0].abs(), t.pattern[0][1].abs()],
                [t.pattern[1][0].abs(), t.pattern[1][1].abs()],
            ];
            Embedding::add_outer(&mut acc, &absd, &pat, &t.coeff.abs());
        }
        for (w, _, mag) in &branch_p {
            let absd: Vec<Rational> = provisional[*w].iter().map(|x| x.abs()).collect();
            Embedding::add_outer(&mut acc, &absd, &J_SWAP, &mag.abs());
        }
        acc.max_entry().max(int(1))
    };
    // Flood dominance outside the coding region needs N_D/delta to exceed
    // the entry bound; the leakage N_D/delta^2 inside the clause blocks must
    // stay far below their 1/2 margins. Both hold with N_D = nd * bound *
    // delta and delta >= 400 * nd * bound.
    let delta = {
        let needed = (&magnitude_bound * int(400 * params.nd_factor as i64)).ceil();
        delta_floor.max(needed)
    };
    let vectors = build_vectors(&delta);
    let (mut static_terms, branch_terms) = coding_terms();
    let flood_weight = int(params.nd_factor as i64) * &magnitude_bound * &delta;
    static_terms.push(Term {
        vector: e2,
        pattern: J_ONES,
        coeff: flood_weight.clone(),
    });
    static_terms.push(Term {
        vector: dvec,
        pattern: J_D2,
        coeff: flood_weight,
    });

    // Exact singularity lift on the common two-sided kernel. The uniform
    // diagonal shift mu moves the orthocomplement of all construction
    // vectors; projector terms restore their planes; the (1,-1) direction of
    // every ones-patterned vector gets its own distinct shift.
    let mut lift_diagonal = Rational::zero();
    if params.lift_singularities {
        let max_entry_bound = vectors
            .iter()
            .flat_map(|v| v.iter())
            .map(|x| x.abs())
            .max()
            .unwrap_or_else(Rational::one)
            .max(int(1));
        let d3 = int((2 * dim_v) as i64).pow(3);
        let budget = int(1) / (&params.sing_c * d3 * &max_entry_bound);
        lift_diagonal = budget.clone() / int(2);
        for w in 0..r + 2 {
            let norm_sq: Rational = vectors[w].iter().map(|x| x * x).sum();
            static_terms.push(Term {
                vector: w,
                pattern: J_ID,
                coeff: -&lift_diagonal / &norm_sq,
            });
        }
        let mut planes: Vec<usize> = vec![e1_index, e2];
        planes.extend(b_base..b_base + n_c);
        for (k, w) in planes.into_iter().enumerate() {
            let norm_sq: Rational = vectors[w].iter().map(|x| x * x).sum::<Rational>() * int(2);
            let shift = &budget / int(3 + k as i64);
            static_terms.push(Term {
                vector: w,
                pattern: J_MINUS,
                coeff: shift / norm_sq,
            });
        }
    }

    // Integerization: clear each vector's denominators, fold the squared
    // clearing factors into the coefficients, and put every coefficient
    // over one shared denominator G.
    use num::Integer;
    let clearers: Vec<BigInt> = vectors
        .iter()
        .map(|v| v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom())))
        .collect();
    let int_vectors: Vec<Vec<BigInt>> = vectors
        .iter()
        .zip(&clearers)
        .map(|(v, d)| {
            v.iter()
                .map(|x| (x * Rational::from_integer(d.clone())).to_integer())
                .collect()
        })
        .collect();
    let reduced_static: Vec<Rational> = static_terms
        .iter()
        .map(|t| {
            let d = &clearers[t.vector];
            &t.coeff / Rational::from_integer(d * d)
        })
        .collect();
    let reduced_branch: Vec<Rational> = branch_terms
        .iter()
        .map(|(w, _, mag)| {
            let d = &clearers[*w];
            mag / Rational::from_integer(d * d)
        })
        .collect();
    let mut big_g = BigInt::one();
    for c in reduced_static
        .iter()
        .chain(reduced_branch.iter())
        .chain(std::iter::once(&lift_diagonal))
    {
        big_g = big_g.lcm(c.denom());
    }
    let gamma_of = |c: &Rational| -> BigInt {
        (c * Rational::from_integer(big_g.clone())).to_integer()
    };
    let dim = 2 * dim_v;
    let mut base_int = vec![BigInt::zero(); dim * dim];
    let diag_gamma = gamma_of(&lift_diagonal);
    if !diag_gamma.is_zero() {
        for i in 0..dim {
            base_int[i * dim + i] = diag_gamma.clone();
        }
    }
    for (t, reduced) in static_terms.iter().zip(&reduced_static) {
        Embedding::add_outer_int(
            &mut base_int,
            dim,
            &int_vectors[t.vector],
            &t.pattern,
            &gamma_of(reduced),
        );
    }
    let int_branch: Vec<(usize, usize, BigInt)> = branch_terms
        .iter()
        .zip(&reduced_branch)
        .map(|((w, var, _), reduced)| (*w, *var, gamma_of(reduced)))
        .collect();

    let mut embedding = Embedding {
        inst: inst.clone(),
        dim_v,
        vectors,
        static_terms,
        branch_terms,
        flood_e2: e2,
        flood_delta: dvec,
        lift_diagonal,
        scale: int(1),
        int_vectors,
        big_g,
        int_branch,
        base_int,
    };
    if !embedding.gram_is_diagonal() {
        return Err(SatError::ParamsTooSmall("orthogonalization failed".into()));
    }
    if params.rescale {
        // The maximal entry sits in the flood tail and is branch
        // independent; sample a few branches to pin it down exactly.
        let mut max_int = BigInt::zero();
        for idx in 0..embedding.branch_count().min(4) {
            let m = embedding.branch_int(idx).into_iter().max().unwrap();
            max_int = max_int.max(m);
        }
        if max_int.is_positive() {
            embedding.scale =
                Rational::from_integer(embedding.big_g.clone())
                    / (int(2) * Rational::from_integer(max_int));
        }
    }
    Ok(embedding)
}

/// The coding part alone for one assignment.
pub fn build_coding_block(
    inst: &SatInstance,
    assignment: &[bool],
    params: &EmbeddingParams,
) -> Result<RationalMatrix, SatError> {
    Ok(assemble_family(inst, params)?.coding_matrix(assignment))
}

/// The eraser mask alone.
pub fn build_mask_e(
    inst: &SatInstance,
    params: &EmbeddingParams,
) -> Result<RationalMatrix, SatError> {
    Ok(assemble_family(inst, params)?.eraser_matrix())
}

/// Standalone flood mask on `total_dim` vector coordinates with
/// `block_count` coding blocks: rank 2, entrywise positive, with
/// O(delta^-2) entries inside the coding region and Omega(delta^-1) or
/// larger elsewhere.
pub fn build_mask_d(total_dim: usize, block_count: usize, delta: &Rational) -> RationalMatrix {
    assert!(block_count < total_dim);
    assert!(delta > &int(2));
    let mut e2 = vec![int(1); total_dim];
    let mut dv = vec![-int(1) / delta; total_dim];
    for c in 0..block_count {
        e2[c] = int(1) / delta;
        dv[c] = int(2) / delta;
    }
    let partial: Rational = e2
        .iter()
        .zip(&dv)
        .take(total_dim - 1)
        .map(|(a, b)| a * b)
        .sum();
    dv[total_dim - 1] = -partial / &e2[total_dim - 1];
    let mut m = RationalMatrix::zeros(2 * total_dim);
    Embedding::add_outer(&mut m, &e2, &J_ONES, &int(1));
    Embedding::add_outer(&mut m, &dv, &J_D2, &int(1));
    m
}

/// End-to-end validation: encoder verdict vs brute-force satisfiability.
#[derive(Debug, Clone)]
pub struct AgreementReport {
    pub encoder_satisfiable: bool,
    pub oracle_satisfiable: bool,
    pub agree: bool,
    pub witness: Option<Vec<bool>>,
    pub dim: usize,
    pub shared_square_deviation: f64,
}

pub fn check_instance(
    inst: &SatInstance,
    params: &EmbeddingParams,
) -> Result<AgreementReport, SatError> {
    let embedding = assemble_family(inst, params)?;
    let found = embedding.exists_nonnegative_branch()?;
    let oracle = sat_oracle(inst, 24)?;
    let encoder_satisfiable = found.is_some();
    let oracle_satisfiable = oracle.is_some();
    Ok(AgreementReport {
        encoder_satisfiable,
        oracle_satisfiable,
        agree: encoder_satisfiable == oracle_satisfiable,
        witness: found.map(|(_, a)| a),
        dim: embedding.dim(),
        shared_square_deviation: embedding.shared_square_deviation(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_single_clause() {
        let inst = SatInstance::new(3, vec![[1, 2, 3]]).unwrap();
        let witness = sat_oracle(&inst, 24).unwrap().unwrap();
        assert_eq!(witness, vec![true, false, false]);
    }

    #[test]
    fn oracle_regular_instance_is_unsat() {
        assert!(sat_oracle(&regular_unsat_instance(), 24).unwrap().is_none());
    }

    #[test]
    fn oracle_empty_instance_is_vacuously_sat() {
        let inst = SatInstance::new(2, vec![]).unwrap();
        assert_eq!(sat_oracle(&inst, 24).unwrap().unwrap(), vec![false, false]);
    }

    #[test]
    fn clause_margin_signs() {
        let params = EmbeddingParams::default();
        let inst = SatInstance::new(3, vec![[1, 2, 3]]).unwrap();
        let m = clause_inequalities(&inst, &[true, false, false], &params);
        assert!(m[0].0.is_positive() && m[0].1.is_positive());
        let m = clause_inequalities(&inst, &[true, true, false], &params);
        assert!(m[0].1.is_negative());
        let m = clause_inequalities(&inst, &[false, false, false], &params);
        assert!(m[0].0.is_negative());
    }

    #[test]
    fn embedding_is_orthogonal_and_agrees_on_single_clause() {
        let params = EmbeddingParams::default();
        let inst = SatInstance::new(3, vec![[1, 2, 3]]).unwrap();
        let emb = assemble_family(&inst, &params).unwrap();
        assert!(emb.gram_is_diagonal());
        let (_, assignment) = emb.exists_nonnegative_branch().unwrap().unwrap();
        assert!(inst.satisfied_by(&assignment));
    }

    #[test]
    fn embedding_rejects_the_regular_unsat_instance() {
        let params = EmbeddingParams::default();
        let emb = assemble_family(&regular_unsat_instance(), &params).unwrap();
        assert!(emb.exists_nonnegative_branch().unwrap().is_none());
    }

    #[test]
    fn branches_share_their_square() {
        let params = EmbeddingParams::default();
        let inst = SatInstance::new(2, vec![[1, 2, -1]]).unwrap();
        let emb = assemble_family(&inst, &params).unwrap();
        assert!(emb.shared_square_deviation() < 1e-9);
    }

    #[test]
    fn negated_literals_are_honored() {
        let params = EmbeddingParams::default();
        let inst = SatInstance::new(2, vec![[-1, 2, -2]]).unwrap();
        let emb = assemble_family(&inst, &params).unwrap();
        let found = emb.exists_nonnegative_branch().unwrap();
        let oracle = sat_oracle(&inst, 24).unwrap();
        assert_eq!(found.is_some(), oracle.is_some());
        if let Some((_, a)) = found {
            assert!(inst.satisfied_by(&a));
        }
    }

    #[test]
    fn masks_have_the_advertised_structure() {
        let params = EmbeddingParams::default();
        let inst = SatInstance::new(3, vec![[1, 2, 3], [1, -2, 3]]).unwrap();
        let emb = assemble_family(&inst, &params).unwrap();
        // Eraser rank: n_c + 1 rank-one ones-patterned terms on orthogonal
        // vectors; check via the f64 singular values.
        use ndarray_linalg::SVD;
        let e = emb.eraser_matrix().to_f64();
        let (_, s, _) = e.svd(false, false).unwrap();
        let top = s.iter().fold(0.0f64, |a, &b| a.max(b));
        let rank = s.iter().filter(|&&x| x > 1e-9 * top).count();
        assert_eq!(rank, inst.n_c() + 1);
        let d = emb.flood_matrix().to_f64();
        let (_, s, _) = d.svd(false, false).unwrap();
        let top = s.iter().fold(0.0f64, |a, &b| a.max(b));
        let rank = s.iter().filter(|&&x| x > 1e-12 * top).count();
        assert_eq!(rank, 2);
        assert!(emb.flood_matrix().classify().nonnegative);
    }

    #[test]
    fn check_instance_report() {
        let params = EmbeddingParams::default();
        let report = check_instance(&regular_unsat_instance(), &params).unwrap();
        assert!(report.agree);
        assert!(!report.oracle_satisfiable);
        assert!(report.shared_square_deviation < 1e-9);
    }

    #[test]
    fn mask_d_shape() {
        let delta = int(1000);
        let d = build_mask_d(8, 2, &delta);
        assert!(d.classify().nonnegative);
        assert!(d.get(0, 0) < &ratio(1, 100));
        assert!(d.get(15, 15) >= &int(1));
    }

    #[test]
    fn instance_validation() {
        assert!(matches!(
            SatInstance::new(2, vec![[1, 2, 3]]),
            Err(SatError::InvalidLiteral(3, 2))
        ));
        assert!(matches!(
            SatInstance::new(1, vec![[0, 1, 1]]),
            Err(SatError::InvalidLiteral(0, 1))
        ));
    }
}
