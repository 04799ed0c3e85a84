//! Exact scalar arithmetic: parsing, formatting and a few root/ rounding
//! helpers on arbitrary-precision rationals.

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact scalar used throughout: reduced fraction with positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Shorthand for small constants.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"num/den"`, integer, or decimal literals (`"0.25"`, `"-1.5"`),
/// converting decimals exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
        if d.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.trim_start().starts_with('-');
        let whole_part: BigInt = if whole.is_empty() || whole == "-" || whole == "+" {
            BigInt::zero()
        } else {
            whole
                .parse()
                .map_err(|_| ParseRationalError::Malformed(s.to_string()))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRationalError::Malformed(s.to_string()));
        }
        let frac_digits: BigInt = frac
            .parse()
            .map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = Rational::new(frac_digits, scale);
        let whole_part = Rational::from_integer(whole_part);
        return Ok(if negative {
            whole_part - frac_part
        } else {
            whole_part + frac_part
        });
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| ParseRationalError::Malformed(s.to_string()))?;
    Ok(Rational::from_integer(n))
}

/// Canonical string form: `"num/den"` in lowest terms, or `"num"` when the
/// denominator is one.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Rounds `x` to the nearest dyadic rational with denominator `2^bits`.
/// Used to keep iterative numeric refinements from growing unboundedly while
/// staying inside exact arithmetic.
pub fn round_dyadic(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = x * Rational::from_integer(scale.clone());
    let rounded = scaled.round();
    Rational::new(rounded.to_integer(), scale)
}

/// Largest dyadic with denominator `2^bits` not exceeding `x`.
pub fn round_dyadic_down(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = x * Rational::from_integer(scale.clone());
    Rational::new(scaled.floor().to_integer(), scale)
}

/// Smallest dyadic with denominator `2^bits` not below `x`.
pub fn round_dyadic_up(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = x * Rational::from_integer(scale.clone());
    Rational::new(scaled.ceil().to_integer(), scale)
}

/// Outward rational bounds on the nonnegative real n-th root of `x >= 0`:
/// returns `(lo, hi)` with `lo^n <= x <= hi^n` and `hi - lo <= 2^-bits`.
pub fn nth_root_bounds(x: &Rational, n: u32, bits: u32) -> (Rational, Rational) {
    assert!(n >= 1);
    assert!(!x.is_negative(), "nth_root_bounds needs x >= 0");
    if x.is_zero() {
        return (Rational::zero(), Rational::zero());
    }
    // Bracket the root, then bisect on dyadics.
    let one = Rational::one();
    let (mut lo, mut hi) = if *x >= one {
        (one.clone(), x.clone().max(one))
    } else {
        (x.clone(), one)
    };
    let pow = |t: &Rational| -> Rational {
        let mut acc = Rational::one();
        for _ in 0..n {
            acc *= t;
        }
        acc
    };
    let target_width = Rational::new(BigInt::one(), BigInt::one() << bits);
    while &hi - &lo > target_width {
        let mid = round_dyadic(&((&lo + &hi) / int(2)), bits + 4);
        // Keep the bracket valid even after rounding the midpoint.
        let mid = if mid <= lo || mid >= hi {
            (&lo + &hi) / int(2)
        } else {
            mid
        };
        if pow(&mid) <= *x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// via the continued fraction convergents.
pub fn approx_rational(x: &Rational, max_den: &BigInt) -> Rational {
    let mut a = x.numer().clone();
    let mut b = x.denom().clone();
    if &b <= max_den {
        return x.clone();
    }
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (x.floor().to_integer(), BigInt::one());
    // Euclid on (a, b), tracking convergents p/q.
    let f = x.floor().to_integer();
    a -= &f * &b;
    std::mem::swap(&mut a, &mut b);
    while !b.is_zero() {
        let quot = &a / &b;
        let rem = &a - &quot * &b;
        let p2 = &quot * &p1 + &p0;
        let q2 = &quot * &q1 + &q0;
        if &q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        a = b;
        b = rem;
    }
    let _ = (p0, q0);
    Rational::new(p1, q1)
}

/// Exact sign as -1, 0, +1.
pub fn sign(x: &Rational) -> i32 {
    match x.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Complex number with exact rational parts. Arithmetic is exact; the
/// `round` method snaps both parts to a dyadic grid, which is how the root
/// finders keep working precision bounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CRat {
    pub re: Rational,
    pub im: Rational,
}

impl CRat {
    pub fn new(re: Rational, im: Rational) -> Self {
        CRat { re, im }
    }

    pub fn zero() -> Self {
        CRat {
            re: Rational::zero(),
            im: Rational::zero(),
        }
    }

    pub fn one() -> Self {
        CRat {
            re: Rational::one(),
            im: Rational::zero(),
        }
    }

    pub fn real(re: Rational) -> Self {
        CRat {
            re,
            im: Rational::zero(),
        }
    }

    pub fn from_f64(re: f64, im: f64) -> Option<Self> {
        Some(CRat {
            re: Rational::from_float(re)?,
            im: Rational::from_float(im)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        CRat {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        CRat {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        CRat {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        CRat {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        let den = other.norm_sqr();
        assert!(!den.is_zero(), "complex division by zero");
        let num = self.mul(&other.conj());
        CRat {
            re: num.re / &den,
            im: num.im / &den,
        }
    }

    pub fn norm_sqr(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn round(&self, bits: u32) -> Self {
        CRat {
            re: round_dyadic(&self.re, bits),
            im: round_dyadic(&self.im, bits),
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (to_f64(&self.re), to_f64(&self.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_rational("1/4").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("-3/6").unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), ratio(-3, 2));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&ratio(2, 4)), "1/2");
        assert_eq!(format_rational(&ratio(4, 2)), "2");
        assert_eq!(format_rational(&ratio(-1, 3)), "-1/3");
    }

    #[test]
    fn nth_root_bounds_bracket() {
        let x = ratio(1, 4);
        let (lo, hi) = nth_root_bounds(&x, 2, 30);
        assert!(lo <= ratio(1, 2) && ratio(1, 2) <= hi);
        assert!(&hi - &lo <= Rational::new(BigInt::one(), BigInt::one() << 30));
        let (lo, hi) = nth_root_bounds(&int(8), 3, 30);
        assert!(lo <= int(2) && int(2) <= hi);
    }

    #[test]
    fn approx_rational_recovers_small_denominators() {
        let x = ratio(1, 3) + Rational::new(BigInt::one(), BigInt::one() << 60);
        let approx = approx_rational(&x, &BigInt::from(1000));
        assert_eq!(approx, ratio(1, 3));
    }
}
