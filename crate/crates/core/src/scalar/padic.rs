//! Fixed-precision elements of Q_p.
//!
//! A [`PadicScalar`] is stored in canonical form `unit * p^valuation + O(p^precision)`
//! with `0 <= unit < p^(precision - valuation)` and `gcd(unit, p) = 1`. An element
//! whose value is not distinguishable from zero at its precision is kept as the
//! zero-at-precision value `O(p^precision)`, which still carries its precision.

use std::cell::RefCell;
use std::cmp::min;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{rational, Comparison, Valuation};
use crate::error::{Error, Result};

thread_local! {
    static POW_CACHE: RefCell<Vec<(u64, Vec<BigInt>)>> = const { RefCell::new(Vec::new()) };
}

/// `p^k` for `k >= 0`, memoized per thread.
pub(crate) fn pow_p(p: u64, k: u32) -> BigInt {
    POW_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let idx = match cache.iter().position(|(q, _)| *q == p) {
            Some(i) => i,
            None => {
                cache.push((p, vec![BigInt::one()]));
                cache.len() - 1
            }
        };
        let powers = &mut cache[idx].1;
        while powers.len() <= k as usize {
            let next = powers.last().unwrap() * p;
            powers.push(next);
        }
        powers[k as usize].clone()
    })
}

/// Removes every factor `p` from `n` (which must be nonzero) and returns how many were removed.
pub(crate) fn strip_prime(n: &mut BigInt, p: u64) -> i64 {
    let bp = BigInt::from(p);
    let mut count = 0;
    loop {
        let (q, r) = n.div_rem(&bp);
        if !r.is_zero() {
            return count;
        }
        *n = q;
        count += 1;
    }
}

fn mod_inverse(a: &BigInt, modulus: &BigInt) -> Option<BigInt> {
    let ext = a.mod_floor(modulus).extended_gcd(modulus);
    if !ext.gcd.is_one() {
        return None;
    }
    Some(ext.x.mod_floor(modulus))
}

fn span(precision: i64, valuation: i64) -> u32 {
    u32::try_from(precision - valuation).expect("p-adic precision span out of range")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    prime: u64,
    precision: i64,
    /// `None` encodes the zero-at-precision element.
    valuation: Option<i64>,
    unit: BigInt,
}

impl PadicScalar {
    pub fn zero(prime: u64, precision: i64) -> Self {
        PadicScalar {
            prime,
            precision,
            valuation: None,
            unit: BigInt::zero(),
        }
    }

    pub fn one(prime: u64, precision: i64) -> Self {
        Self::from_integer(&BigInt::one(), prime, precision)
    }

    fn normalize(prime: u64, precision: i64, shift: i64, mut value: BigInt) -> Self {
        if value.is_zero() {
            return Self::zero(prime, precision);
        }
        let v = shift + strip_prime(&mut value, prime);
        if v >= precision {
            return Self::zero(prime, precision);
        }
        let unit = value.mod_floor(&pow_p(prime, span(precision, v)));
        PadicScalar {
            prime,
            precision,
            valuation: Some(v),
            unit,
        }
    }

    pub fn from_integer(n: &BigInt, prime: u64, precision: i64) -> Self {
        Self::normalize(prime, precision, 0, n.clone())
    }

    pub fn from_i64(n: i64, prime: u64, precision: i64) -> Self {
        Self::from_integer(&BigInt::from(n), prime, precision)
    }

    /// The expansion of `num/den` to absolute precision `O(p^precision)`.
    pub fn from_rational(num: &BigInt, den: &BigInt, prime: u64, precision: i64) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::domain("zero denominator"));
        }
        if num.is_zero() {
            return Ok(Self::zero(prime, precision));
        }
        let mut n = num.clone();
        let mut d = den.clone();
        let v = strip_prime(&mut n, prime) - strip_prime(&mut d, prime);
        if v >= precision {
            return Ok(Self::zero(prime, precision));
        }
        let modulus = pow_p(prime, span(precision, v));
        let inv = mod_inverse(&d, &modulus).expect("denominator is a unit after stripping p");
        Ok(PadicScalar {
            prime,
            precision,
            valuation: Some(v),
            unit: (n * inv).mod_floor(&modulus),
        })
    }

    pub fn from_big_rational(r: &BigRational, prime: u64, precision: i64) -> Result<Self> {
        Self::from_rational(r.numer(), r.denom(), prime, precision)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    /// The unit part `u` of `u * p^v`; zero for the zero-at-precision element.
    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    pub fn valuation(&self) -> Valuation {
        match self.valuation {
            Some(v) => Valuation::Finite(v),
            None => Valuation::AtLeast(self.precision),
        }
    }

    /// True when the value is indistinguishable from zero at its precision.
    pub fn is_zero(&self) -> bool {
        self.valuation.is_none()
    }

    pub fn is_unit(&self) -> bool {
        self.valuation == Some(0)
    }

    /// Drops digits so that the result is known modulo `p^precision`. Never gains precision.
    pub fn reduce_precision(&self, precision: i64) -> Self {
        if precision >= self.precision {
            return self.clone();
        }
        match self.valuation {
            Some(v) if v < precision => PadicScalar {
                prime: self.prime,
                precision,
                valuation: Some(v),
                unit: self.unit.mod_floor(&pow_p(self.prime, span(precision, v))),
            },
            _ => Self::zero(self.prime, precision),
        }
    }

    /// The rational representative `unit * p^valuation`.
    pub fn lift(&self) -> BigRational {
        match self.valuation {
            None => BigRational::zero(),
            Some(v) if v >= 0 => BigRational::from_integer(&self.unit * pow_p(self.prime, v as u32)),
            Some(v) => BigRational::new(self.unit.clone(), pow_p(self.prime, (-v) as u32)),
        }
    }

    /// The integer representative in `[0, p^precision)`, for elements of Z_p.
    pub fn to_integer(&self) -> Option<BigInt> {
        match self.valuation {
            None => Some(BigInt::zero()),
            Some(v) if v >= 0 => Some(&self.unit * pow_p(self.prime, v as u32)),
            Some(_) => None,
        }
    }

    /// Base-p digits `d_v, ..., d_{M-1}` of the unit part, least significant first.
    pub fn digits(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut n = self.unit.clone();
        let bp = BigInt::from(self.prime);
        while !n.is_zero() {
            let (q, r) = n.div_rem(&bp);
            out.push(r.to_u64().unwrap());
            n = q;
        }
        out
    }

    fn check_prime(&self, other: &Self) -> Result<()> {
        if self.prime == other.prime {
            Ok(())
        } else {
            Err(Error::PrimeMismatch {
                left: self.prime,
                right: other.prime,
            })
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        let precision = min(self.precision, other.precision);
        Ok(match (self.valuation, other.valuation) {
            (None, None) => Self::zero(self.prime, precision),
            (Some(_), None) => self.reduce_precision(precision),
            (None, Some(_)) => other.reduce_precision(precision),
            (Some(a), Some(b)) => {
                let low = min(a, b);
                let p = self.prime;
                let sum = &self.unit * pow_p(p, (a - low) as u32) + &other.unit * pow_p(p, (b - low) as u32);
                Self::normalize(p, precision, low, sum)
            }
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        let p = self.prime;
        Ok(match (self.valuation, other.valuation) {
            (Some(a), Some(b)) => {
                let precision = min(self.precision + b, other.precision + a);
                Self::normalize(p, precision, a + b, &self.unit * &other.unit)
            }
            (None, Some(b)) => Self::zero(p, self.precision + b),
            (Some(a), None) => Self::zero(p, other.precision + a),
            (None, None) => Self::zero(p, self.precision + other.precision),
        })
    }

    /// Multiplicative inverse; an element of valuation `v` and absolute precision `M`
    /// inverts to valuation `-v` and absolute precision `M - 2v`.
    pub fn inverse(&self) -> Result<Self> {
        let v = self.valuation.ok_or(Error::IndeterminateDivision {
            prime: self.prime,
            precision: self.precision,
        })?;
        let relative = span(self.precision, v);
        let modulus = pow_p(self.prime, relative);
        let unit = mod_inverse(&self.unit, &modulus).expect("unit part is coprime to p");
        Ok(PadicScalar {
            prime: self.prime,
            precision: relative as i64 - v,
            valuation: Some(-v),
            unit,
        })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        self.checked_mul(&other.inverse()?)
    }

    /// Binary exponentiation; `x^0` is `1` at the operand's precision (at least one digit).
    pub fn pow(&self, mut e: u64) -> Self {
        if e == 0 {
            return Self::one(self.prime, self.precision.max(1));
        }
        let mut base = self.clone();
        let mut acc: Option<Self> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => &a * &base,
                });
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc.unwrap()
    }

    /// Three-valued comparison: digits that differ within both precisions make the
    /// elements unequal; otherwise equality cannot be decided.
    pub fn compare(&self, other: &Self) -> Comparison {
        match self.checked_sub(other) {
            Ok(d) if d.is_zero() => Comparison::Indeterminate,
            Ok(_) => Comparison::Unequal,
            Err(_) => Comparison::Unequal,
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&PadicScalar> for &PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: &PadicScalar) -> PadicScalar {
                self.$checked(rhs).expect("p-adic operands must share a prime")
            }
        }
        impl $trait<PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: PadicScalar) -> PadicScalar {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        match self.valuation {
            None => self.clone(),
            Some(v) => {
                let modulus = pow_p(self.prime, span(self.precision, v));
                PadicScalar {
                    unit: modulus - &self.unit,
                    ..self.clone()
                }
            }
        }
    }
}

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        -&self
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prime;
        let tail = format!("O({p}^{})", self.precision);
        let v = match self.valuation {
            None => return f.write_str(&tail),
            Some(v) => v,
        };
        if v < 0 {
            return write!(f, "{}*{p}^{v} + {tail}", self.unit);
        }
        for (i, d) in self.digits().into_iter().enumerate() {
            if d == 0 {
                continue;
            }
            match v + i as i64 {
                0 => write!(f, "{d} + ")?,
                1 => write!(f, "{d}*{p} + ")?,
                e => write!(f, "{d}*{p}^{e} + ")?,
            }
        }
        f.write_str(&tail)
    }
}

impl FromStr for PadicScalar {
    type Err = Error;

    /// Parses the canonical rendering, e.g. `2 + 1*3 + 1*3^2 + O(3^3)` or `5*7^-2 + O(7^4)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let terms: Vec<&str> = s.split(" + ").collect();
        let (tail, body) = terms.split_last().ok_or_else(|| Error::parse(0, "empty input"))?;
        let tail_at = s.len() - tail.len();
        let inner = tail
            .strip_prefix("O(")
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::parse(tail_at, "expected O(p^M) precision term"))?;
        let (p_str, m_str) = inner
            .split_once('^')
            .ok_or_else(|| Error::parse(tail_at, "expected O(p^M)"))?;
        let prime: u64 = p_str.parse().map_err(|_| Error::parse(tail_at + 2, "bad prime"))?;
        let precision: i64 = m_str
            .parse()
            .map_err(|_| Error::parse(tail_at + 3 + p_str.len(), "bad precision"))?;
        if prime < 3 {
            return Err(Error::parse(tail_at + 2, "prime must be an odd prime"));
        }

        let mut value = BigRational::zero();
        let mut offset = 0;
        for term in body {
            let (coef, exp) = match term.split_once('*') {
                None => (*term, 0i64),
                Some((c, rest)) => {
                    let (base, e) = match rest.split_once('^') {
                        Some((b, e)) => (b, e.parse::<i64>().map_err(|_| Error::parse(offset, "bad exponent"))?),
                        None => (rest, 1),
                    };
                    if base != p_str {
                        return Err(Error::parse(offset, "term base differs from the prime"));
                    }
                    (c, e)
                }
            };
            let c: BigInt = coef.parse().map_err(|_| Error::parse(offset, "bad digit"))?;
            let scale = pow_p(prime, exp.unsigned_abs() as u32);
            let term_value = if exp >= 0 {
                BigRational::from_integer(c * scale)
            } else {
                BigRational::new(c, scale)
            };
            value += term_value;
            offset += term.len() + 3;
        }
        Self::from_big_rational(&value, prime, precision)
    }
}

/// Reduces an exact rational into Q_p when its denominator allows it.
pub fn reduce_rational(r: &BigRational, prime: u64, precision: i64) -> Result<PadicScalar> {
    PadicScalar::from_big_rational(r, prime, precision)
}

/// Valuation agreement of two p-adic values: `min(v(a - b), precision of a - b)`.
pub fn agreement(a: &PadicScalar, b: &PadicScalar) -> i64 {
    (a - b).valuation().lower_bound()
}

impl PadicScalar {
    /// Is the exact rational `r` compatible with this element to its precision?
    pub fn agrees_with_rational(&self, r: &BigRational) -> bool {
        match rational::valuation(r, self.prime) {
            Valuation::Finite(v) if v >= self.precision => self.is_zero(),
            _ => match Self::from_big_rational(r, self.prime, self.precision) {
                Ok(x) => (self - &x).is_zero(),
                Err(_) => false,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn one_half_in_z3() {
        let x = PadicScalar::from_rational(&big(1), &big(2), 3, 3).unwrap();
        assert_eq!(x.valuation(), Valuation::Finite(0));
        assert_eq!(x.unit(), &big(14));
    }

    #[test]
    fn eighteen_in_z3() {
        let x = PadicScalar::from_rational(&big(18), &big(1), 3, 5).unwrap();
        assert_eq!(x.valuation(), Valuation::Finite(2));
        assert_eq!(x.unit(), &big(2));
    }

    #[test]
    fn zero_numerator_is_zero_at_precision() {
        let x = PadicScalar::from_rational(&big(0), &big(5), 3, 4).unwrap();
        assert!(x.is_zero());
        assert_eq!(x.precision(), 4);
        assert_eq!(x.to_string(), "O(3^4)");
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(matches!(
            PadicScalar::from_rational(&big(1), &big(0), 3, 4),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn valuations() {
        assert_eq!(PadicScalar::from_i64(3, 3, 5).valuation(), Valuation::Finite(1));
        let third = PadicScalar::from_rational(&big(1), &big(3), 3, 5).unwrap();
        assert_eq!(third.valuation(), Valuation::Finite(-1));
    }

    #[test]
    fn cancellation_gives_zero_at_precision() {
        let a = PadicScalar::from_i64(1, 3, 4);
        let b = PadicScalar::from_i64(-1, 3, 4);
        let s = &a + &b;
        assert!(s.is_zero());
        assert_eq!(s.precision(), 4);
    }

    #[test]
    fn division_by_p_times_unit_loses_one_digit() {
        let x = PadicScalar::from_i64(1, 3, 4);
        // 6 known to relative precision 4, i.e. absolute precision 5.
        let y = PadicScalar::from_i64(6, 3, 5);
        let q = x.checked_div(&y).unwrap();
        assert_eq!(q.precision(), 3);
        assert_eq!(q.valuation(), Valuation::Finite(-1));
        assert!((&q * &y).checked_sub(&x).unwrap().is_zero());
    }

    #[test]
    fn division_by_zero_at_precision() {
        let x = PadicScalar::from_i64(1, 3, 4);
        let z = PadicScalar::zero(3, 4);
        assert_eq!(
            x.checked_div(&z),
            Err(Error::IndeterminateDivision { prime: 3, precision: 4 })
        );
    }

    #[test]
    fn prime_mismatch() {
        let x = PadicScalar::from_i64(1, 3, 4);
        let y = PadicScalar::from_i64(1, 5, 4);
        assert!(matches!(x.checked_add(&y), Err(Error::PrimeMismatch { .. })));
    }

    #[test]
    fn rendering() {
        let x = PadicScalar::from_rational(&big(1), &big(2), 3, 3).unwrap();
        assert_eq!(x.to_string(), "2 + 1*3 + 1*3^2 + O(3^3)");
        let y = PadicScalar::from_i64(18, 3, 5);
        assert_eq!(y.to_string(), "2*3^2 + O(3^5)");
        let z = PadicScalar::from_rational(&big(5), &big(9), 7, 4).unwrap();
        assert_eq!(z.to_string().parse::<PadicScalar>().unwrap(), z);
        let w = PadicScalar::from_rational(&big(2), &big(9), 3, 4).unwrap();
        assert_eq!(w.to_string(), "2*3^-2 + O(3^4)");
        assert_eq!(w.to_string().parse::<PadicScalar>().unwrap(), w);
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!("2 + 1*3".parse::<PadicScalar>(), Err(Error::Parse { .. })));
        assert!(matches!(
            "x + O(3^2)".parse::<PadicScalar>(),
            Err(Error::Parse { position: 0, .. })
        ));
    }

    #[test]
    fn multiplication_precision_tracks_valuation() {
        let a = PadicScalar::from_i64(3, 3, 5);
        let b = PadicScalar::from_i64(9, 3, 5);
        let c = &a * &b;
        assert_eq!(c.valuation(), Valuation::Finite(3));
        assert_eq!(c.precision(), 6);
    }

    #[test]
    fn pow_matches_repeated_product() {
        let q = PadicScalar::from_i64(4, 3, 10);
        let mut acc = PadicScalar::one(3, 10);
        for e in 0..20u64 {
            assert_eq!(q.pow(e).reduce_precision(10), acc.reduce_precision(10));
            acc = &acc * &q;
        }
    }

    #[test]
    fn negative_valuation_lift() {
        let x = PadicScalar::from_rational(&big(2), &big(9), 3, 4).unwrap();
        assert_eq!(x.lift(), BigRational::new(big(2), big(9)));
    }
}
