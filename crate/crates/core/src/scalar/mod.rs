//! Scalar backends: exact rationals and fixed-precision p-adic numbers, behind a
//! common [`Backend`] trait, plus the p-adic analytic functions.

pub mod analytic;
pub mod padic;
mod qparam;
pub mod rational;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub use analytic::{exp_p, log_p, q_pow, teichmuller};
pub use padic::PadicScalar;
pub use qparam::{QParam, Regime};
pub use rational::RationalScalar;

use crate::error::{Error, Result};

/// A p-adic valuation as far as it can be known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    /// Zero at precision `O(p^k)`: the true valuation is at least `k`.
    AtLeast(i64),
    /// Exact zero.
    Infinite,
}

impl Valuation {
    /// Certified lower bound on the valuation.
    pub fn lower_bound(self) -> i64 {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => v,
            Valuation::Infinite => i64::MAX,
        }
    }

    pub fn is_at_least(self, k: i64) -> bool {
        self.lower_bound() >= k
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::AtLeast(k) => write!(f, ">={k}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

/// Outcome of comparing two scalars.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    Unequal,
    /// Equal to every digit known; only possible with finite precision.
    Indeterminate,
}

/// Arithmetic over one scalar field (Q, or Q_p at a working precision) with a fixed prime.
pub trait Backend: Clone + fmt::Debug + Send + Sync {
    type Elem: Clone + fmt::Debug + fmt::Display + PartialEq + Send + Sync;

    fn prime(&self) -> u64;
    fn name(&self) -> &'static str;
    /// Exact arithmetic (no precision loss).
    fn is_exact(&self) -> bool;

    #[allow(clippy::wrong_self_convention)]
    fn from_rational(&self, r: &BigRational) -> Result<Self::Elem>;
    #[allow(clippy::wrong_self_convention)]
    fn from_integer(&self, n: &BigInt) -> Self::Elem;

    fn int(&self, n: i64) -> Self::Elem {
        self.from_integer(&BigInt::from(n))
    }
    fn zero(&self) -> Self::Elem {
        self.from_integer(&BigInt::zero())
    }
    fn one(&self) -> Self::Elem {
        self.from_integer(&BigInt::one())
    }

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;

    fn pow(&self, a: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    fn valuation(&self, a: &Self::Elem) -> Valuation;
    fn compare(&self, a: &Self::Elem, b: &Self::Elem) -> Comparison;

    /// Zero, or zero to the available precision.
    fn is_zero(&self, a: &Self::Elem) -> bool {
        !matches!(self.valuation(a), Valuation::Finite(_))
    }

    /// `v_p(a - b)` as a certified lower bound (agreement in p-adic digits).
    fn agreement(&self, a: &Self::Elem, b: &Self::Elem) -> i64 {
        self.valuation(&self.sub(a, b)).lower_bound()
    }

    /// `zeta_n^k` for a fixed primitive `n`-th root of unity `zeta_n`.
    fn root_of_unity(&self, order: u64, index: u64) -> Result<Self::Elem>;

    /// Reduces a value to a p-adic element known modulo `p^precision`.
    fn to_padic(&self, a: &Self::Elem, precision: i64) -> Result<PadicScalar>;

    fn parse(&self, s: &str) -> Result<Self::Elem>;
}

fn sign_root(order: u64, index: u64) -> Option<i64> {
    match order {
        1 => Some(1),
        2 => Some(if index.is_multiple_of(2) { 1 } else { -1 }),
        _ => None,
    }
}

/// Exact rational arithmetic; the prime is used only for valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalBackend {
    prime: u64,
}

impl RationalBackend {
    pub fn new(prime: u64) -> Result<Self> {
        check_odd_prime(prime)?;
        Ok(RationalBackend { prime })
    }
}

impl Backend for RationalBackend {
    type Elem = BigRational;

    fn prime(&self) -> u64 {
        self.prime
    }
    fn name(&self) -> &'static str {
        "rational"
    }
    fn is_exact(&self) -> bool {
        true
    }
    fn from_rational(&self, r: &BigRational) -> Result<BigRational> {
        Ok(r.clone())
    }
    fn from_integer(&self, n: &BigInt) -> BigRational {
        BigRational::from_integer(n.clone())
    }
    // Integer operands skip the gcd normalization; it dominates on huge integers.
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        if a.is_integer() && b.is_integer() {
            return BigRational::from_integer(a.numer() + b.numer());
        }
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        if a.is_integer() && b.is_integer() {
            return BigRational::from_integer(a.numer() - b.numer());
        }
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        if a.is_integer() && b.is_integer() {
            return BigRational::from_integer(a.numer() * b.numer());
        }
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn div(&self, a: &BigRational, b: &BigRational) -> Result<BigRational> {
        if b.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(a / b)
    }
    fn valuation(&self, a: &BigRational) -> Valuation {
        rational::valuation(a, self.prime)
    }
    fn compare(&self, a: &BigRational, b: &BigRational) -> Comparison {
        if a == b {
            Comparison::Equal
        } else {
            Comparison::Unequal
        }
    }
    fn root_of_unity(&self, order: u64, index: u64) -> Result<BigRational> {
        sign_root(order, index)
            .map(|s| BigRational::from_integer(BigInt::from(s)))
            .ok_or_else(|| Error::UnsupportedCharacterValue {
                order,
                backend: self.name().to_string(),
            })
    }
    fn to_padic(&self, a: &BigRational, precision: i64) -> Result<PadicScalar> {
        PadicScalar::from_big_rational(a, self.prime, precision)
    }
    fn parse(&self, s: &str) -> Result<BigRational> {
        rational::parse(s)
    }
}

/// Q_p with a default absolute precision for constructed elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicBackend {
    prime: u64,
    precision: i64,
}

impl PadicBackend {
    pub fn new(prime: u64, precision: i64) -> Result<Self> {
        check_odd_prime(prime)?;
        if precision < 1 {
            return Err(Error::domain(format!("precision must be at least 1, got {precision}")));
        }
        Ok(PadicBackend { prime, precision })
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }
}

impl Backend for PadicBackend {
    type Elem = PadicScalar;

    fn prime(&self) -> u64 {
        self.prime
    }
    fn name(&self) -> &'static str {
        "padic"
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn from_rational(&self, r: &BigRational) -> Result<PadicScalar> {
        PadicScalar::from_big_rational(r, self.prime, self.precision)
    }
    fn from_integer(&self, n: &BigInt) -> PadicScalar {
        PadicScalar::from_integer(n, self.prime, self.precision)
    }
    fn add(&self, a: &PadicScalar, b: &PadicScalar) -> PadicScalar {
        a + b
    }
    fn sub(&self, a: &PadicScalar, b: &PadicScalar) -> PadicScalar {
        a - b
    }
    fn mul(&self, a: &PadicScalar, b: &PadicScalar) -> PadicScalar {
        a * b
    }
    fn neg(&self, a: &PadicScalar) -> PadicScalar {
        -a
    }
    fn div(&self, a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar> {
        a.checked_div(b)
    }
    fn pow(&self, a: &PadicScalar, e: u64) -> PadicScalar {
        if e == 0 {
            self.one()
        } else {
            a.pow(e)
        }
    }
    fn valuation(&self, a: &PadicScalar) -> Valuation {
        a.valuation()
    }
    fn compare(&self, a: &PadicScalar, b: &PadicScalar) -> Comparison {
        a.compare(b)
    }
    fn root_of_unity(&self, order: u64, index: u64) -> Result<PadicScalar> {
        if let Some(s) = sign_root(order, index) {
            return Ok(self.int(s));
        }
        if order == 0 || !(self.prime - 1).is_multiple_of(order) {
            return Err(Error::UnsupportedCharacterValue {
                order,
                backend: format!("{}-adic", self.prime),
            });
        }
        let g = crate::dirichlet::primitive_root(self.prime);
        let omega = teichmuller(&BigInt::from(g), self.prime, self.precision)?;
        let zeta = omega.pow((self.prime - 1) / order);
        Ok(self.pow(&zeta, index % order))
    }
    fn to_padic(&self, a: &PadicScalar, precision: i64) -> Result<PadicScalar> {
        Ok(a.reduce_precision(precision))
    }
    fn parse(&self, s: &str) -> Result<PadicScalar> {
        let x: PadicScalar = s.parse()?;
        if x.prime() != self.prime {
            return Err(Error::PrimeMismatch {
                left: self.prime,
                right: x.prime(),
            });
        }
        Ok(x)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn check_odd_prime(p: u64) -> Result<()> {
    if p >= 3 && is_prime(p) {
        Ok(())
    } else {
        Err(Error::domain(format!("{p} is not an odd prime")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_primes() {
        assert!(check_odd_prime(3).is_ok());
        assert!(check_odd_prime(13).is_ok());
        assert!(check_odd_prime(2).is_err());
        assert!(check_odd_prime(9).is_err());
    }

    #[test]
    fn valuation_of_p_is_one() {
        let b = PadicBackend::new(5, 6).unwrap();
        assert_eq!(b.valuation(&b.int(5)), Valuation::Finite(1));
        let r = RationalBackend::new(5).unwrap();
        assert_eq!(r.valuation(&r.int(5)), Valuation::Finite(1));
    }

    #[test]
    fn three_valued_comparison() {
        let b = PadicBackend::new(3, 4).unwrap();
        assert_eq!(b.compare(&b.int(1), &b.int(82)), Comparison::Indeterminate);
        assert_eq!(b.compare(&b.int(1), &b.int(2)), Comparison::Unequal);
        let r = RationalBackend::new(3).unwrap();
        assert_eq!(r.compare(&r.int(1), &r.int(1)), Comparison::Equal);
        assert_eq!(r.compare(&r.int(1), &r.int(82)), Comparison::Unequal);
    }

    #[test]
    fn roots_of_unity() {
        let b = PadicBackend::new(13, 6).unwrap();
        let z = b.root_of_unity(4, 1).unwrap();
        assert!(b.is_zero(&b.sub(&b.pow(&z, 4), &b.one())));
        assert!(!b.is_zero(&b.sub(&b.pow(&z, 2), &b.one())));
        assert!(matches!(
            b.root_of_unity(5, 1),
            Err(Error::UnsupportedCharacterValue { order: 5, .. })
        ));
        let r = RationalBackend::new(13).unwrap();
        assert_eq!(r.root_of_unity(2, 1).unwrap(), r.int(-1));
        assert!(r.root_of_unity(4, 1).is_err());
    }
}
