//! p-adic exponential, logarithm, real powers `q^x` and the Teichmüller lift.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::padic::{pow_p, PadicScalar};
use super::Valuation;
use crate::error::{Error, Result};

/// Extra digits carried past the target precision before a series is truncated.
pub const SERIES_GUARD: i64 = 2;

fn floor_log(p: u64, k: u64) -> i64 {
    let mut e = 0;
    let mut n = k;
    while n >= p {
        n /= p;
        e += 1;
    }
    e
}

/// `exp(x) = sum x^k / k!`, defined for `v_p(x) >= 1`.
///
/// The result carries the precision of `x`.
pub fn exp_p(x: &PadicScalar) -> Result<PadicScalar> {
    let p = x.prime();
    let precision = x.precision();
    let v = match x.valuation() {
        Valuation::Finite(v) if v >= 1 => v,
        Valuation::Finite(v) => {
            return Err(Error::ConvergenceDomain(format!(
                "exp needs v_p(x) >= 1, got v_p(x) = {v}"
            )))
        }
        _ => return Ok(PadicScalar::one(p, precision)),
    };
    let target = precision + SERIES_GUARD;
    let xr = x.lift();
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut k: i64 = 0;
    loop {
        sum += &term;
        k += 1;
        // v_p(x^k / k!) >= k v - (k - 1)/(p - 1), increasing in k.
        if k * v - (k - 1) / (p as i64 - 1) >= target {
            break;
        }
        term = term * &xr / BigRational::from_integer(BigInt::from(k));
    }
    PadicScalar::from_big_rational(&sum, p, precision)
}

/// `log(x) = sum (-1)^(k+1) (x - 1)^k / k`, defined for `v_p(x - 1) >= 1`.
pub fn log_p(x: &PadicScalar) -> Result<PadicScalar> {
    let p = x.prime();
    let precision = x.precision();
    let y = x - &PadicScalar::one(p, precision);
    let v = match y.valuation() {
        Valuation::Finite(v) if v >= 1 => v,
        Valuation::Finite(_) => return Err(Error::ConvergenceDomain("log needs v_p(x - 1) >= 1".to_string())),
        _ => return Ok(PadicScalar::zero(p, precision)),
    };
    let target = precision + SERIES_GUARD;
    let yr = y.lift();
    let mut sum = BigRational::zero();
    let mut power = yr.clone();
    let mut k: u64 = 1;
    loop {
        let term = &power / BigRational::from_integer(BigInt::from(k));
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        k += 1;
        // v_p(y^k / k) >= k v - floor(log_p k), nondecreasing in k.
        if k as i64 * v - floor_log(p, k) >= target {
            break;
        }
        power *= &yr;
    }
    PadicScalar::from_big_rational(&sum, p, precision)
}

/// `q^x = exp(x log q)` for `v_p(q - 1) >= 1` and `x` in Z_p.
pub fn q_pow(q: &PadicScalar, x: &PadicScalar) -> Result<PadicScalar> {
    if q.prime() != x.prime() {
        return Err(Error::PrimeMismatch {
            left: q.prime(),
            right: x.prime(),
        });
    }
    if let Valuation::Finite(v) = x.valuation() {
        if v < 0 {
            return Err(Error::ConvergenceDomain(format!(
                "q^x needs |x|_p <= 1, got v_p(x) = {v}"
            )));
        }
    }
    let one = PadicScalar::one(q.prime(), q.precision());
    if !(q - &one).valuation().is_at_least(1) {
        return Err(Error::ConvergenceDomain("q^x needs v_p(q - 1) >= 1".to_string()));
    }
    exp_p(&(x * &log_p(q)?))
}

/// The `(p-1)`-th root of unity congruent to `a` modulo `p`, to precision `O(p^precision)`.
pub fn teichmuller(a: &BigInt, p: u64, precision: i64) -> Result<PadicScalar> {
    if a.is_multiple_of(&BigInt::from(p)) {
        return Err(Error::domain(format!("{a} is divisible by {p}")));
    }
    let bits = u32::try_from(precision.max(1)).map_err(|_| Error::domain("precision too large"))?;
    let modulus = pow_p(p, bits);
    let bp = BigInt::from(p);
    let mut x = a.mod_floor(&modulus);
    // x -> x^p gains one digit of agreement with the limit per step.
    loop {
        let next = x.modpow(&bp, &modulus);
        if next == x {
            break;
        }
        x = next;
    }
    Ok(PadicScalar::from_integer(&x, p, precision))
}
