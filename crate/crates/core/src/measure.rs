//! The fermionic q-measure on the residue discs `a + d p^N Z_p` of
//! `X = lim Z / d p^N Z`.

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::qnum::QContext;
use crate::scalar::Backend;

/// The ball `a + d p^N Z_p`, with `0 <= a < d p^N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ball {
    residue: u64,
    modulus_d: u64,
    level: u32,
    prime: u64,
}

/// `d p^N`, guarded against overflow.
pub fn level_modulus(d: u64, p: u64, level: u32) -> Result<u64> {
    p.checked_pow(level)
        .and_then(|pn| pn.checked_mul(d))
        .ok_or_else(|| Error::domain(format!("d*p^N overflows for d={d}, p={p}, N={level}")))
}

/// Checks that `d` is odd, positive and prime to `p`.
pub fn check_modulus(d: u64, p: u64) -> Result<()> {
    if d == 0 || d.is_multiple_of(2) {
        return Err(Error::domain(format!("d must be a positive odd integer, got {d}")));
    }
    if d.gcd(&p) != 1 {
        return Err(Error::domain(format!("d = {d} is not prime to p = {p}")));
    }
    Ok(())
}

impl Ball {
    pub fn new(residue: u64, d: u64, level: u32, prime: u64) -> Result<Self> {
        crate::scalar::check_odd_prime(prime)?;
        check_modulus(d, prime)?;
        let m = level_modulus(d, prime, level)?;
        if residue >= m {
            return Err(Error::domain(format!("residue {residue} not in [0, {m})")));
        }
        Ok(Ball {
            residue,
            modulus_d: d,
            level,
            prime,
        })
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn d(&self) -> u64 {
        self.modulus_d
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// `d p^N`.
    pub fn modulus(&self) -> u64 {
        level_modulus(self.modulus_d, self.prime, self.level).unwrap()
    }

    /// The `p` balls `a + i d p^N + d p^(N+1) Z_p`, `i = 0..p`, partitioning this one.
    pub fn children(&self) -> Result<Vec<Ball>> {
        let step = self.modulus();
        level_modulus(self.modulus_d, self.prime, self.level + 1)?;
        Ok((0..self.prime)
            .map(|i| Ball {
                residue: self.residue + i * step,
                modulus_d: self.modulus_d,
                level: self.level + 1,
                prime: self.prime,
            })
            .collect())
    }

    pub fn contains(&self, x: u64) -> bool {
        x % self.modulus() == self.residue
    }
}

/// A measure value kept as `numerator / denominator` before the final division.
#[derive(Clone, Debug)]
pub struct Fraction<E> {
    pub numerator: E,
    pub denominator: E,
}

/// Outcome of an additivity check on one ball.
#[derive(Clone, Debug)]
pub struct Additivity<E> {
    pub ball: Ball,
    /// `sum_i mu(child_i) - mu(ball)`.
    pub residual: E,
    pub holds: bool,
}

/// `mu_{-q}` for a fixed `q` in the regime `v_p(q - 1) >= 1`.
#[derive(Clone, Debug)]
pub struct MeasureContext<B: Backend> {
    ctx: QContext<B>,
}

impl<B: Backend> MeasureContext<B> {
    pub fn new(ctx: QContext<B>) -> Result<Self> {
        ctx.param().require_strict()?;
        Ok(MeasureContext { ctx })
    }

    pub fn q_context(&self) -> &QContext<B> {
        &self.ctx
    }

    fn check_ball(&self, ball: &Ball) -> Result<()> {
        if ball.prime != self.ctx.prime() {
            return Err(Error::PrimeMismatch {
                left: self.ctx.prime(),
                right: ball.prime,
            });
        }
        Ok(())
    }

    /// `(-q)^a` over `[d p^N]_{-q}`, undivided.
    pub fn mu_fraction(&self, ball: &Ball) -> Result<Fraction<B::Elem>> {
        self.check_ball(ball)?;
        Ok(Fraction {
            numerator: self.ctx.neg_q_pow_int(ball.residue),
            denominator: self.ctx.bracket_neg(ball.modulus()),
        })
    }

    /// `mu_{-q}(a + d p^N Z_p) = (-q)^a / [d p^N]_{-q}`.
    pub fn mu(&self, ball: &Ball) -> Result<B::Elem> {
        let f = self.mu_fraction(ball)?;
        self.ctx.backend().div(&f.numerator, &f.denominator)
    }

    /// The same value in product form `(1 + q) (-1)^a q^a / (1 + q^(d p^N))`.
    pub fn mu_product_form(&self, ball: &Ball) -> Result<B::Elem> {
        self.check_ball(ball)?;
        let b = self.ctx.backend();
        let mut num = b.mul(&self.ctx.two_q(), &self.ctx.q_pow_int(ball.residue));
        if ball.residue % 2 == 1 {
            num = b.neg(&num);
        }
        let den = b.add(&b.one(), &self.ctx.q_pow_int(ball.modulus()));
        b.div(&num, &den)
    }

    /// Compares the sum of the measures of the `p` children with the measure of the ball.
    pub fn check_additivity(&self, ball: &Ball) -> Result<Additivity<B::Elem>> {
        let b = self.ctx.backend();
        let parent = self.mu_fraction(ball)?;
        let children = ball.children()?;
        // Children share the denominator [d p^(N+1)]_{-q}; (-q)^(a + i d p^N) is built
        // from (-q)^a and the powers of (-q)^(d p^N).
        let child_den = self.ctx.bracket_neg(children[0].modulus());
        let step = self.ctx.neg_q_pow_int(ball.modulus());
        let mut power = parent.numerator.clone();
        let mut child_sum = b.zero();
        for _ in &children {
            child_sum = b.add(&child_sum, &power);
            power = b.mul(&power, &step);
        }
        let cross = b.sub(
            &b.mul(&child_sum, &parent.denominator),
            &b.mul(&parent.numerator, &child_den),
        );
        let residual = b.div(&cross, &b.mul(&parent.denominator, &child_den))?;
        Ok(Additivity {
            ball: *ball,
            holds: b.is_zero(&residual),
            residual,
        })
    }

    /// `sum_{a < d p^N} mu(a + d p^N Z_p)`; equal to one.
    pub fn total_mass(&self, d: u64, level: u32) -> Result<B::Elem> {
        let p = self.ctx.prime();
        check_modulus(d, p)?;
        let m = level_modulus(d, p, level)?;
        let b = self.ctx.backend();
        let mut num = b.zero();
        let mut power = b.one();
        for _ in 0..m {
            num = b.add(&num, &power);
            power = b.mul(&power, self.ctx.neg_q());
        }
        b.div(&num, &self.ctx.bracket_neg(m))
    }

    /// Every ball at level `N` for the modulus `d`.
    pub fn balls(&self, d: u64, level: u32) -> Result<Vec<Ball>> {
        let p = self.ctx.prime();
        let m = level_modulus(d, p, level)?;
        (0..m).map(|a| Ball::new(a, d, level, p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational::rational;
    use crate::scalar::{PadicBackend, RationalBackend, Valuation};
    use num_rational::BigRational;

    fn rat(p: u64, q: BigRational) -> MeasureContext<RationalBackend> {
        MeasureContext::new(QContext::from_rational(RationalBackend::new(p).unwrap(), &q).unwrap()).unwrap()
    }

    #[test]
    fn ball_validation() {
        assert!(Ball::new(0, 2, 1, 3).is_err());
        assert!(Ball::new(0, 3, 1, 3).is_err());
        assert!(Ball::new(15, 3, 1, 5).is_err());
        assert!(Ball::new(14, 3, 1, 5).is_ok());
        assert!(Ball::new(0, 1, 1, 4).is_err());
        assert!(Ball::new(0, 1, 60, 7).is_err());
    }

    #[test]
    fn requires_strict_regime() {
        let c = QContext::from_rational(RationalBackend::new(3).unwrap(), &rational(2, 1)).unwrap();
        assert!(MeasureContext::new(c).is_err());
    }

    #[test]
    fn q_one_is_alternating_sign() {
        let m = rat(5, rational(1, 1));
        for a in 0..15 {
            let ball = Ball::new(a, 3, 1, 5).unwrap();
            let expected = if a % 2 == 0 { 1 } else { -1 };
            assert_eq!(m.mu(&ball).unwrap(), rational(expected, 1));
        }
    }

    #[test]
    fn level_one_values() {
        let m = rat(3, rational(4, 1));
        assert_eq!(m.mu(&Ball::new(2, 1, 1, 3).unwrap()).unwrap(), rational(16, 13));
        assert_eq!(m.mu(&Ball::new(1, 1, 1, 3).unwrap()).unwrap(), rational(-4, 13));
    }

    #[test]
    fn product_form_agrees() {
        let m = rat(5, rational(11, 1));
        for ball in m.balls(3, 1).unwrap() {
            assert_eq!(m.mu(&ball).unwrap(), m.mu_product_form(&ball).unwrap());
        }
    }

    #[test]
    fn additivity_examples() {
        let m = rat(3, rational(4, 1));
        let r = m.check_additivity(&Ball::new(0, 1, 1, 3).unwrap()).unwrap();
        assert!(r.holds);
        assert_eq!(r.residual, rational(0, 1));

        let m1 = rat(3, rational(1, 1));
        for ball in m1.balls(1, 2).unwrap() {
            assert_eq!(m1.check_additivity(&ball).unwrap().residual, rational(0, 1));
        }

        let b = PadicBackend::new(5, 12).unwrap();
        let mp = MeasureContext::new(QContext::from_rational(b, &rational(6, 1)).unwrap()).unwrap();
        let r = mp.check_additivity(&Ball::new(7, 3, 2, 5).unwrap()).unwrap();
        assert!(r.holds);
        assert_eq!(r.residual.valuation(), Valuation::AtLeast(12));
    }

    #[test]
    fn additivity_by_direct_summation() {
        // Independent of check_additivity: divide every child separately.
        let m = rat(3, rational(4, 1));
        for ball in m.balls(1, 2).unwrap() {
            let sum = ball
                .children()
                .unwrap()
                .iter()
                .map(|c| m.mu(c).unwrap())
                .fold(rational(0, 1), |acc, x| acc + x);
            assert_eq!(sum, m.mu(&ball).unwrap());
        }
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(rat(3, rational(4, 1)).total_mass(1, 2).unwrap(), rational(1, 1));
        assert_eq!(rat(3, rational(1, 1)).total_mass(1, 1).unwrap(), rational(1, 1));
        assert_eq!(rat(5, rational(6, 1)).total_mass(3, 1).unwrap(), rational(1, 1));
    }

    #[test]
    fn measure_is_bounded() {
        let b = PadicBackend::new(7, 8).unwrap();
        let m = MeasureContext::new(QContext::from_rational(b, &rational(15, 1)).unwrap()).unwrap();
        for ball in m.balls(5, 1).unwrap() {
            assert!(m.mu(&ball).unwrap().is_unit());
        }
    }
}
