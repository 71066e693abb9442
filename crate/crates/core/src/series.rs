//! The generating function `F_q(t) = sum_k E_{k,q} t^k / k!`, kept as a truncated
//! list of EGF coefficients, and its q-difference equation
//!
//! ```text
//! F_q(t) = -q e^t F_q(qt) + [2]_q
//! ```
//!
//! read coefficientwise as `E_n = -q sum_k C(n,k) q^k E_k + [2]_q delta_{n,0}`.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::Result;
use crate::euler::{binomial_row, classical_euler_table, q_euler_closed_with_cap};
use crate::qnum::QContext;
use crate::scalar::Backend;

/// Printed with every q-difference report.
pub const CONSTANT_NOTE: &str = "the constant term of the q-difference equation is [2]_q = 1 + q; \
     with a constant of 1 the t^0 coefficient would force E_{0,q} = 1/(1+q) instead of 1";

/// `sum_{k <= K} c_k t^k / k! + O(t^(K+1))`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedEGF<E> {
    pub coefficients: Vec<E>,
}

impl<E> TruncatedEGF<E> {
    /// The truncation order `K`.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }
}

/// `E_{0,q}, ..., E_{K,q}` from the closed form. At `q = 1` in an exact backend the
/// classical Euler numbers are used instead.
pub fn build_egf<B: Backend>(ctx: &QContext<B>, order: u32) -> Result<TruncatedEGF<B::Elem>> {
    let b = ctx.backend();
    let coefficients = if ctx.q_is_one() {
        classical_euler_table(order)
            .iter()
            .map(|e| b.from_rational(e))
            .collect::<Result<_>>()?
    } else {
        (0..=order)
            .map(|k| q_euler_closed_with_cap(k, ctx, order))
            .collect::<Result<_>>()?
    };
    Ok(TruncatedEGF { coefficients })
}

/// `E_n + q sum_k C(n,k) q^k E_k - [2]_q delta_{n,0}` for `n = 0..=K`.
pub fn check_q_difference<B: Backend>(egf: &TruncatedEGF<B::Elem>, ctx: &QContext<B>) -> Vec<B::Elem> {
    let b = ctx.backend();
    let c = &egf.coefficients;
    (0..c.len())
        .map(|n| {
            let mut sum = b.zero();
            let mut qk = b.one();
            for (k, binom) in binomial_row(n as u64).into_iter().enumerate() {
                sum = b.add(&sum, &b.mul(&b.mul(&b.from_integer(&binom), &qk), &c[k]));
                qk = b.mul(&qk, ctx.q());
            }
            let mut residual = b.add(&c[n], &b.mul(ctx.q(), &sum));
            if n == 0 {
                residual = b.sub(&residual, &ctx.two_q());
            }
            residual
        })
        .collect()
}

/// EGF coefficients of `2 / (e^t + 1)` through `t^K`, by power-series division.
pub fn classical_egf(order: u32) -> Vec<BigRational> {
    let n = order as usize + 1;
    // Ordinary coefficients of e^t + 1.
    let mut den = vec![BigRational::zero(); n];
    let mut fact = BigRational::one();
    for (k, slot) in den.iter_mut().enumerate() {
        if k > 0 {
            fact *= BigRational::from_integer(k.into());
        }
        *slot = fact.recip();
    }
    den[0] += BigRational::one();
    let mut ordinary = vec![BigRational::zero(); n];
    for k in 0..n {
        let mut acc = if k == 0 {
            BigRational::from_integer(2.into())
        } else {
            BigRational::zero()
        };
        for j in 0..k {
            acc -= &ordinary[j] * &den[k - j];
        }
        ordinary[k] = acc / &den[0];
    }
    let mut fact = BigRational::one();
    ordinary
        .into_iter()
        .enumerate()
        .map(|(k, a)| {
            if k > 0 {
                fact *= BigRational::from_integer(k.into());
            }
            a * &fact
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational::rational;
    use crate::scalar::RationalBackend;

    fn ctx(q: BigRational) -> QContext<RationalBackend> {
        QContext::from_rational(RationalBackend::new(3).unwrap(), &q).unwrap()
    }

    #[test]
    fn coefficients() {
        assert_eq!(
            build_egf(&ctx(rational(4, 1)), 0).unwrap().coefficients,
            vec![rational(1, 1)]
        );
        let egf = build_egf(&ctx(rational(4, 1)), 2).unwrap();
        assert_eq!(
            egf.coefficients,
            vec![rational(1, 1), rational(-4, 17), rational(12, 221)]
        );
        assert_eq!(egf.order(), 2);
        let classical = build_egf(&ctx(rational(1, 1)), 3).unwrap();
        assert_eq!(
            classical.coefficients,
            vec![rational(1, 1), rational(-1, 2), rational(0, 1), rational(1, 4)]
        );
    }

    #[test]
    fn classical_expansion() {
        assert_eq!(classical_egf(10), classical_euler_table(10));
    }

    #[test]
    fn residuals_vanish() {
        for q in [rational(4, 1), rational(1, 1), rational(7, 3), rational(-8, 5)] {
            let c = ctx(q);
            let egf = build_egf(&c, 12).unwrap();
            for r in check_q_difference(&egf, &c) {
                assert_eq!(r, rational(0, 1));
            }
        }
    }

    #[test]
    fn unit_constant_does_not_fit() {
        // With constant 1 the t^0 residual would be 1 - (-q + 1) = q.
        let c = ctx(rational(4, 1));
        let egf = build_egf(&c, 1).unwrap();
        let with_one = &egf.coefficients[0] + rational(4, 1) * &egf.coefficients[0] - rational(1, 1);
        assert_eq!(with_one, rational(4, 1));
    }
}
