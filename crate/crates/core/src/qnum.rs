//! q-deformed integers: `[x]_q`, `[x]_{-q}` and `[2]_q`.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::scalar::{q_pow, Backend, Comparison, PadicBackend, PadicScalar, QParam};

/// A backend together with a fixed `q`.
#[derive(Clone, Debug)]
pub struct QContext<B: Backend> {
    backend: B,
    q: QParam<B::Elem>,
    neg_q: B::Elem,
}

impl<B: Backend> QContext<B> {
    pub fn new(backend: B, q: QParam<B::Elem>) -> Self {
        let neg_q = backend.neg(q.value());
        QContext { backend, q, neg_q }
    }

    pub fn from_rational(backend: B, q: &BigRational) -> Result<Self> {
        let q = QParam::from_rational(&backend, q)?;
        Ok(Self::new(backend, q))
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn param(&self) -> &QParam<B::Elem> {
        &self.q
    }

    pub fn q(&self) -> &B::Elem {
        self.q.value()
    }

    pub fn neg_q(&self) -> &B::Elem {
        &self.neg_q
    }

    pub fn prime(&self) -> u64 {
        self.backend.prime()
    }

    /// True when `q = 1` exactly, or to every known digit.
    pub fn q_is_one(&self) -> bool {
        self.backend.compare(self.q(), &self.backend.one()) != Comparison::Unequal
    }

    /// `q^n` by binary exponentiation.
    pub fn q_pow_int(&self, n: u64) -> B::Elem {
        self.backend.pow(self.q(), n)
    }

    /// `(-q)^n`.
    pub fn neg_q_pow_int(&self, n: u64) -> B::Elem {
        self.backend.pow(&self.neg_q, n)
    }

    /// `[x]_q = 1 + q + ... + q^(x-1)`; equals `(1 - q^x)/(1 - q)` and is `x` at `q = 1`.
    pub fn bracket(&self, x: u64) -> B::Elem {
        geometric(&self.backend, self.q(), x).0
    }

    /// `[x]_{-q} = (1 - (-q)^x)/(1 + q)`, the geometric sum in `-q`.
    pub fn bracket_neg(&self, x: u64) -> B::Elem {
        geometric(&self.backend, &self.neg_q, x).0
    }

    /// `[2]_q = 1 + q`.
    pub fn two_q(&self) -> B::Elem {
        self.backend.add(&self.backend.one(), self.q())
    }

    /// `[x]_q` through the quotient `(1 - q^x)/(1 - q)`; fails at `q = 1`.
    pub fn bracket_by_quotient(&self, x: u64) -> Result<B::Elem> {
        let b = &self.backend;
        let one = b.one();
        b.div(&b.sub(&one, &self.q_pow_int(x)), &b.sub(&one, self.q()))
    }
}

impl QContext<PadicBackend> {
    /// `[x]_q = (1 - q^x)/(1 - q)` for `x` in Z_p, with `q^x = exp(x log q)`.
    pub fn bracket_padic(&self, x: &PadicScalar) -> Result<PadicScalar> {
        if self.q_is_one() {
            return Err(Error::domain("[x]_q at q = 1 is only defined here for integer x"));
        }
        self.q.require_strict()?;
        let one = self.backend.one();
        let qx = q_pow(self.q(), x)?;
        (&one - &qx).checked_div(&(&one - self.q()))
    }
}

/// Returns `(1 + r + ... + r^(n-1), r^n)` using `O(log n)` multiplications and no division.
pub fn geometric<B: Backend>(backend: &B, r: &B::Elem, n: u64) -> (B::Elem, B::Elem) {
    let mut sum = backend.zero();
    let mut power = backend.one();
    if n == 0 {
        return (sum, power);
    }
    for bit in (0..64 - n.leading_zeros()).rev() {
        // k -> 2k
        sum = backend.mul(&sum, &backend.add(&backend.one(), &power));
        power = backend.mul(&power, &power);
        if (n >> bit) & 1 == 1 {
            // k -> k + 1
            sum = backend.add(&backend.one(), &backend.mul(r, &sum));
            power = backend.mul(&power, r);
        }
    }
    (sum, power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational::rational;
    use crate::scalar::{RationalBackend, Valuation};
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn rat_ctx(p: u64, q: BigRational) -> QContext<RationalBackend> {
        QContext::from_rational(RationalBackend::new(p).unwrap(), &q).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let c = rat_ctx(3, rational(4, 1));
        assert_eq!(c.bracket(3), rational(21, 1));
        assert_eq!(c.bracket(0), rational(0, 1));
        let c = rat_ctx(3, rational(9, 5));
        assert_eq!(c.bracket(2), rational(14, 5));
        assert_eq!(c.bracket_by_quotient(2).unwrap(), rational(14, 5));
    }

    #[test]
    fn bracket_at_q_one_is_x() {
        let c = rat_ctx(3, rational(1, 1));
        for x in 0..20 {
            assert_eq!(c.bracket(x), rational(x as i64, 1));
        }
        assert!(c.bracket_by_quotient(3).is_err());
    }

    #[test]
    fn bracket_neg_examples() {
        let c = rat_ctx(3, rational(4, 1));
        assert_eq!(c.bracket_neg(3), rational(13, 1));
        assert_eq!(c.bracket_neg(1), rational(1, 1));
        assert_eq!(c.bracket_neg(0), rational(0, 1));
        // odd x: (1 + q^x)/(1 + q)
        assert_eq!(c.bracket_neg(5), rational(1 + 1024, 5));
    }

    #[test]
    fn two_q_examples() {
        assert_eq!(rat_ctx(3, rational(4, 1)).two_q(), rational(5, 1));
        assert_eq!(rat_ctx(3, rational(1, 1)).two_q(), rational(2, 1));
        assert_eq!(rat_ctx(3, rational(9, 5)).two_q(), rational(14, 5));
    }

    #[test]
    fn bracket_neg_identity() {
        let c = rat_ctx(5, rational(6, 1));
        let b = c.backend();
        for x in 0..=64 {
            let lhs = b.add(&b.mul(&c.bracket_neg(x), &c.two_q()), &c.neg_q_pow_int(x));
            assert_eq!(lhs, b.one(), "x = {x}");
        }
    }

    #[test]
    fn cocycle_on_integers() {
        let c = rat_ctx(3, rational(4, 1));
        let b = c.backend();
        for x in 0..=32 {
            for y in 0..=32 {
                let rhs = b.add(&c.bracket(x), &b.mul(&c.q_pow_int(x), &c.bracket(y)));
                assert_eq!(c.bracket(x + y), rhs);
            }
        }
    }

    #[test]
    fn q_to_one_limit() {
        let p = 3u64;
        let b = RationalBackend::new(p).unwrap();
        for k in 1..=4u32 {
            let q = BigRational::from_integer(BigInt::from(p).pow(k) + 1);
            let c = QContext::from_rational(b.clone(), &q).unwrap();
            for x in 0..30u64 {
                let diff = b.sub(&c.bracket(x), &b.int(x as i64));
                assert!(b.valuation(&diff).is_at_least(k as i64), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn padic_bracket_matches_integer_bracket() {
        let b = PadicBackend::new(5, 10).unwrap();
        let c = QContext::from_rational(b.clone(), &rational(6, 1)).unwrap();
        for x in 0..12 {
            let via_exp = c.bracket_padic(&b.int(x)).unwrap();
            assert_eq!(via_exp.reduce_precision(8), c.bracket(x as u64).reduce_precision(8));
        }
        let one = QContext::from_rational(b.clone(), &rational(1, 1)).unwrap();
        assert!(matches!(one.bracket_padic(&b.int(2)), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn cocycle_padic(x in 0i64..5000, y in 0i64..5000, xd in 1i64..50, yd in 1i64..50) {
            let p = 7;
            let b = PadicBackend::new(p, 12).unwrap();
            let c = QContext::from_rational(b.clone(), &rational(8, 1)).unwrap();
            // x/xd, y/yd with denominators prime to p sample Z_p beyond the integers.
            prop_assume!(xd % 7 != 0 && yd % 7 != 0);
            let xs = b.from_rational(&rational(x, xd)).unwrap();
            let ys = b.from_rational(&rational(y, yd)).unwrap();
            let lhs = c.bracket_padic(&(&xs + &ys)).unwrap();
            let qx = q_pow(c.q(), &xs).unwrap();
            let rhs = &c.bracket_padic(&xs).unwrap() + &(&qx * &c.bracket_padic(&ys).unwrap());
            prop_assert!((&lhs - &rhs).valuation().is_at_least(10));
            prop_assert!(!matches!(lhs.valuation(), Valuation::Finite(v) if v < 0));
        }
    }
}
