//! Exact rationals, the oracle backend.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::padic::strip_prime;
use super::Valuation;
use crate::error::{Error, Result};

/// Exact rational number in lowest terms with positive denominator.
pub type RationalScalar = BigRational;

pub fn rational(num: i64, den: i64) -> RationalScalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// p-adic valuation of an exact rational; exact zero has infinite valuation.
pub fn valuation(r: &BigRational, p: u64) -> Valuation {
    if r.is_zero() {
        return Valuation::Infinite;
    }
    let mut n = r.numer().abs();
    let mut d = r.denom().clone();
    Valuation::Finite(strip_prime(&mut n, p) - strip_prime(&mut d, p))
}

pub fn integer_valuation(n: &BigInt, p: u64) -> Valuation {
    if n.is_zero() {
        return Valuation::Infinite;
    }
    let mut m = n.abs();
    Valuation::Finite(strip_prime(&mut m, p))
}

/// Renders `num/den`, or just `num` when the denominator is one.
pub fn render(r: &BigRational) -> String {
    r.to_string()
}

/// Parses `num`, `num/den` or `-num/den`.
pub fn parse(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let offset = s.len() - s.trim_start().len();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (t, None),
    };
    let n: BigInt = num
        .trim()
        .parse()
        .map_err(|_| Error::parse(offset, format!("invalid numerator in {t:?}")))?;
    let d: BigInt = match den {
        Some(d) => d
            .trim()
            .parse()
            .map_err(|_| Error::parse(offset + num.len() + 1, format!("invalid denominator in {t:?}")))?,
        None => BigInt::from(1),
    };
    if d.is_zero() {
        return Err(Error::domain("zero denominator"));
    }
    Ok(BigRational::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_term_sum_example() {
        // 1/5 - 2/17 + 1/65
        let r = rational(1, 5) - rational(2, 17) + rational(1, 65);
        assert_eq!(r, rational(108, 1105));
    }

    #[test]
    fn valuations() {
        assert_eq!(valuation(&rational(18, 1), 3), Valuation::Finite(2));
        assert_eq!(valuation(&rational(1, 3), 3), Valuation::Finite(-1));
        assert_eq!(valuation(&rational(0, 7), 3), Valuation::Infinite);
        assert_eq!(valuation(&rational(-5, 27), 3), Valuation::Finite(-3));
    }

    #[test]
    fn parse_and_render() {
        assert_eq!(parse("-4/17").unwrap(), rational(-4, 17));
        assert_eq!(parse("6").unwrap(), rational(6, 1));
        assert_eq!(parse("9/5").unwrap(), rational(9, 5));
        assert_eq!(render(&rational(12, 221)), "12/221");
        assert!(matches!(parse("4/x"), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(parse("1/0"), Err(Error::Domain(_))));
    }
}
