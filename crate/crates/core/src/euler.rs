//! q-Euler numbers `E_{m,q}`, q-Euler polynomials `E_{n,q}(x)`, their character
//! twists `E_{m,chi,q}`, and the classical Euler numbers `E_m` (the `q = 1` column).
//!
//! The closed form
//!
//! ```text
//! E_{m,q} = [2]_q (1/(1-q))^m sum_{k=0}^m C(m,k) (-1)^k / (1 + q^(k+1))
//! ```
//!
//! is checked against the fermionic integral of `[x]_q^m`, computed independently
//! as a limit of q-Riemann sums.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::dirichlet::Character;
use crate::error::{Error, Result};
use crate::integral::{integrate, BracketPower, IntegralResult, IntegrateOptions, TwistedBracketPower};
use crate::qnum::QContext;
use crate::scalar::{q_pow, Backend, PadicBackend, PadicScalar};

/// Degrees above this need [`q_euler_closed_with_cap`].
pub const DEFAULT_DEGREE_CAP: u32 = 64;

/// `C(n, k)` via the multiplicative recurrence.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `C(n, 0), ..., C(n, n)`.
pub fn binomial_row(n: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Integral,
}

/// `E_{0,q}, ..., E_{K,q}` with how they were obtained.
#[derive(Clone, Debug)]
pub struct EulerTable<E> {
    pub entries: Vec<E>,
    pub method: Method,
    /// Certified p-adic digits per entry (integral method only).
    pub precision: Option<Vec<i64>>,
}

impl<E: Clone + Send + Sync> EulerTable<E> {
    pub fn closed<B: Backend<Elem = E>>(ctx: &QContext<B>, max_degree: u32) -> Result<Self> {
        let entries = (0..=max_degree)
            .map(|m| q_euler_closed(m, ctx))
            .collect::<Result<_>>()?;
        Ok(EulerTable {
            entries,
            method: Method::ClosedForm,
            precision: None,
        })
    }

    pub fn integral<B: Backend<Elem = E> + 'static>(
        ctx: &QContext<B>,
        max_degree: u32,
        opts: &IntegrateOptions,
    ) -> Result<Self> {
        let results: Vec<IntegralResult<E>> = (0..=max_degree)
            .into_par_iter()
            .map(|m| q_euler_integral(m, ctx, opts)?.require_converged(opts.target_precision))
            .collect::<Result<_>>()?;
        Ok(EulerTable {
            precision: Some(results.iter().map(|r| r.achieved_precision).collect()),
            entries: results.into_iter().map(|r| r.value).collect(),
            method: Method::Integral,
        })
    }

    pub fn get(&self, m: u32) -> Option<&E> {
        self.entries.get(m as usize)
    }
}

fn require_closed_form_domain<B: Backend>(ctx: &QContext<B>) -> Result<B::Elem> {
    let b = ctx.backend();
    if !b.is_exact() {
        ctx.param().require_strict()?;
    }
    let one_minus_q = b.sub(&b.one(), ctx.q());
    if b.is_zero(&one_minus_q) {
        return Err(Error::Singular {
            factor: "1 - q".to_string(),
        });
    }
    b.div(&b.one(), &one_minus_q)
}

/// `E_{m,q}` from the closed form, for `m <= 64`.
pub fn q_euler_closed<B: Backend>(m: u32, ctx: &QContext<B>) -> Result<B::Elem> {
    q_euler_closed_with_cap(m, ctx, DEFAULT_DEGREE_CAP)
}

pub fn q_euler_closed_with_cap<B: Backend>(m: u32, ctx: &QContext<B>, cap: u32) -> Result<B::Elem> {
    if m > cap {
        return Err(Error::domain(format!("degree {m} exceeds the cap {cap}")));
    }
    let b = ctx.backend();
    let inv = require_closed_form_domain(ctx)?;
    let mut sum = b.zero();
    let mut q_power = ctx.q().clone();
    for (k, c) in binomial_row(m as u64).into_iter().enumerate() {
        let den = b.add(&b.one(), &q_power);
        if b.is_zero(&den) {
            return Err(Error::Singular {
                factor: format!("1 + q^{}", k + 1),
            });
        }
        let mut term = b.div(&b.from_integer(&c), &den)?;
        if k % 2 == 1 {
            term = b.neg(&term);
        }
        sum = b.add(&sum, &term);
        q_power = b.mul(&q_power, ctx.q());
    }
    Ok(b.mul(&b.mul(&ctx.two_q(), &b.pow(&inv, m as u64)), &sum))
}

/// `E_{m,q}` as the fermionic integral of `[x]_q^m`.
pub fn q_euler_integral<B: Backend + 'static>(
    m: u32,
    ctx: &QContext<B>,
    opts: &IntegrateOptions,
) -> Result<IntegralResult<B::Elem>> {
    integrate(&BracketPower::new(ctx.clone(), m), ctx, opts)
}

/// `E_0, ..., E_n` from `sum_k C(n,k) E_k + E_n = 2 delta_{n,0}`.
pub fn classical_euler_table(n: u32) -> Vec<BigRational> {
    let mut table: Vec<BigRational> = Vec::with_capacity(n as usize + 1);
    for k in 0..=n as u64 {
        let row = binomial_row(k);
        let rest = table.iter().zip(&row).fold(BigRational::zero(), |acc, (e, c)| {
            acc + e * BigRational::from_integer(c.clone())
        });
        let rhs = if k == 0 {
            BigRational::from_integer(2.into())
        } else {
            BigRational::zero()
        };
        table.push((rhs - rest) / BigRational::from_integer(2.into()));
    }
    table
}

pub fn classical_euler(m: u32) -> BigRational {
    classical_euler_table(m).pop().unwrap()
}

/// `E_{n,q}(x) = sum_l C(n,l) q^(l x) E_{l,q} [x]_q^(n-l)` for integer `x >= 0`.
pub fn q_euler_poly<B: Backend>(n: u32, x: u64, ctx: &QContext<B>) -> Result<B::Elem> {
    let b = ctx.backend();
    let qx = ctx.q_pow_int(x);
    let bracket = ctx.bracket(x);
    combine_poly(b, n, &qx, &bracket, |l| q_euler_closed(l, ctx))
}

/// `E_{n,q}(x)` for `x` in Z_p, with `q^x = exp(x log q)`.
pub fn q_euler_poly_padic(n: u32, x: &PadicScalar, ctx: &QContext<PadicBackend>) -> Result<PadicScalar> {
    let b = ctx.backend();
    let qx = q_pow(ctx.q(), x)?;
    let bracket = ctx.bracket_padic(x)?;
    combine_poly(b, n, &qx, &bracket, |l| q_euler_closed(l, ctx))
}

fn combine_poly<B: Backend>(
    b: &B,
    n: u32,
    qx: &B::Elem,
    bracket: &B::Elem,
    euler: impl Fn(u32) -> Result<B::Elem>,
) -> Result<B::Elem> {
    let mut acc = b.zero();
    let mut qlx = b.one();
    for (l, c) in binomial_row(n as u64).into_iter().enumerate() {
        let l = l as u32;
        let term = b.mul(
            &b.mul(&b.from_integer(&c), &qlx),
            &b.mul(&euler(l)?, &b.pow(bracket, (n - l) as u64)),
        );
        acc = b.add(&acc, &term);
        qlx = b.mul(&qlx, qx);
    }
    Ok(acc)
}

/// `E_{n,q}(x)` as the fermionic integral of `t -> [x + t]_q^n`.
pub fn q_euler_poly_integral<B: Backend + 'static>(
    n: u32,
    x: u64,
    ctx: &QContext<B>,
    opts: &IntegrateOptions,
) -> Result<IntegralResult<B::Elem>> {
    integrate(&BracketPower::shifted(ctx.clone(), x, n), ctx, opts)
}

/// `q E_{m,q}(1) + E_{m,q} - [2]_q delta_{m,0}`: the translation identity applied to
/// `[x]_q^m`, evaluated through closed forms. Exactly zero in the rational backend.
pub fn functional_equation_closed_residual<B: Backend>(m: u32, ctx: &QContext<B>) -> Result<B::Elem> {
    let b = ctx.backend();
    let shifted = q_euler_poly(m, 1, ctx)?;
    let lhs = b.add(&b.mul(ctx.q(), &shifted), &q_euler_closed(m, ctx)?);
    let rhs = if m == 0 { ctx.two_q() } else { b.zero() };
    Ok(b.sub(&lhs, &rhs))
}

/// Closed form for the twisted numbers, from splitting `a = i + d t`:
///
/// ```text
/// E_{m,chi,q} = [2]_q / (1-q)^m  sum_j C(m,j) (-1)^j
///               * sum_{i<d} chi(i) (-1)^i q^(i(j+1)) / (1 + q^(d(j+1)))
/// ```
pub fn generalized_q_euler_closed<B: Backend>(m: u32, chi: &Character, ctx: &QContext<B>) -> Result<B::Elem> {
    let b = ctx.backend();
    let inv = require_closed_form_domain(ctx)?;
    let d = chi.modulus();
    let values = chi.realize(b)?;
    let mut total = b.zero();
    for (j, c) in binomial_row(m as u64).into_iter().enumerate() {
        let step = ctx.q_pow_int(j as u64 + 1);
        let mut inner = b.zero();
        let mut qi = b.one();
        for (i, chi_i) in values.iter().enumerate() {
            let mut term = b.mul(chi_i, &qi);
            if i % 2 == 1 {
                term = b.neg(&term);
            }
            inner = b.add(&inner, &term);
            qi = b.mul(&qi, &step);
        }
        let den = b.add(&b.one(), &b.pow(&step, d));
        if b.is_zero(&den) {
            return Err(Error::Singular {
                factor: format!("1 + q^{}", d * (j as u64 + 1)),
            });
        }
        let mut term = b.mul(&b.from_integer(&c), &b.div(&inner, &den)?);
        if j % 2 == 1 {
            term = b.neg(&term);
        }
        total = b.add(&total, &term);
    }
    Ok(b.mul(&b.mul(&ctx.two_q(), &b.pow(&inv, m as u64)), &total))
}

/// `E_{m,chi,q}` as the limit of `1/[d p^N]_{-q} sum_{a < d p^N} chi(a) [a]_q^m (-q)^a`.
pub fn generalized_q_euler<B: Backend + 'static>(
    m: u32,
    chi: &Character,
    ctx: &QContext<B>,
    opts: &IntegrateOptions,
) -> Result<IntegralResult<B::Elem>> {
    let values = chi.realize(ctx.backend())?;
    let f = TwistedBracketPower::new(ctx.clone(), values, format!("chi[{chi}]"), m)?;
    let opts = opts.clone().with_modulus(chi.modulus());
    integrate(&f, ctx, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integral::riemann_sum;
    use crate::scalar::rational::rational;
    use crate::scalar::RationalBackend;

    fn rat_ctx(p: u64, q: BigRational) -> QContext<RationalBackend> {
        QContext::from_rational(RationalBackend::new(p).unwrap(), &q).unwrap()
    }

    fn pad_ctx(p: u64, q: i64, m: i64) -> QContext<PadicBackend> {
        QContext::from_rational(PadicBackend::new(p, m).unwrap(), &rational(q, 1)).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), BigInt::from(120));
        assert_eq!(binomial(3, 5), BigInt::zero());
        let row = binomial_row(6);
        for k in 0..=6 {
            assert_eq!(row[k as usize], binomial(6, k));
        }
    }

    #[test]
    fn closed_form_examples() {
        let c = rat_ctx(3, rational(4, 1));
        assert_eq!(q_euler_closed(0, &c).unwrap(), rational(1, 1));
        assert_eq!(q_euler_closed(1, &c).unwrap(), rational(-4, 17));
        assert_eq!(q_euler_closed(2, &c).unwrap(), rational(12, 221));
    }

    #[test]
    fn second_number_from_three_term_sum() {
        // [2]_q / (1-q)^2 * (1/5 - 2/17 + 1/65) at q = 4
        let inner = rational(1, 5) - rational(2, 17) + rational(1, 65);
        assert_eq!(rational(5, 9) * inner, rational(12, 221));
    }

    #[test]
    fn singular_parameters() {
        let c = rat_ctx(3, rational(1, 1));
        assert_eq!(
            q_euler_closed(1, &c),
            Err(Error::Singular {
                factor: "1 - q".to_string()
            })
        );
        let c = rat_ctx(3, rational(-1, 1));
        assert!(matches!(q_euler_closed(2, &c), Err(Error::Singular { factor }) if factor == "1 + q^1"));
        let c = rat_ctx(3, rational(4, 1));
        assert!(q_euler_closed(65, &c).is_err());
        assert!(q_euler_closed_with_cap(65, &c, 80).is_ok());
        // p-adic backend requires the convergence regime.
        let b = PadicBackend::new(3, 8).unwrap();
        let c = QContext::from_rational(b, &rational(2, 1)).unwrap();
        assert!(matches!(q_euler_closed(1, &c), Err(Error::ConvergenceDomain(_))));
    }

    #[test]
    fn first_number_identity_for_many_q() {
        for (n, d) in [(4, 1), (9, 5), (-7, 3), (2, 11), (13, 4), (-5, 2), (22, 7), (3, 8)] {
            let q = rational(n, d);
            let c = rat_ctx(3, q.clone());
            let expected = -q.clone() / (rational(1, 1) + &q * &q);
            assert_eq!(q_euler_closed(1, &c).unwrap(), expected);
        }
    }

    #[test]
    fn classical_numbers() {
        let t = classical_euler_table(10);
        let expected = [
            rational(1, 1),
            rational(-1, 2),
            rational(0, 1),
            rational(1, 4),
            rational(0, 1),
            rational(-1, 2),
            rational(0, 1),
            rational(17, 8),
            rational(0, 1),
            rational(-31, 2),
            rational(0, 1),
        ];
        assert_eq!(t, expected);
        assert_eq!(classical_euler(5), rational(-1, 2));
    }

    #[test]
    fn integral_route_small() {
        let c = pad_ctx(3, 4, 14);
        let r = q_euler_integral(0, &c, &IntegrateOptions::new(6)).unwrap();
        assert!(r.level_values.iter().all(|v| *v == c.backend().one()));
        let r = q_euler_integral(1, &c, &IntegrateOptions::new(6)).unwrap();
        let closed = c.backend().from_rational(&rational(-4, 17)).unwrap();
        assert!(c.backend().agreement(&r.value, &closed) >= 6);

        let c5 = pad_ctx(5, 6, 14);
        let r = q_euler_integral(2, &c5, &IntegrateOptions::new(6)).unwrap();
        let closed = q_euler_closed(2, &c5).unwrap();
        assert!(r.is_converged());
        assert!(c5.backend().agreement(&r.value, &closed) >= 6);
    }

    #[test]
    fn polynomial_examples() {
        let c = rat_ctx(3, rational(4, 1));
        for n in 0..6 {
            assert_eq!(q_euler_poly(n, 0, &c).unwrap(), q_euler_closed(n, &c).unwrap());
        }
        for x in 0..4 {
            assert_eq!(q_euler_poly(0, x, &c).unwrap(), rational(1, 1));
        }
        assert_eq!(q_euler_poly(1, 1, &c).unwrap(), rational(1, 17));
    }

    #[test]
    fn polynomial_integral_route() {
        let c = pad_ctx(3, 4, 14);
        let b = c.backend();
        let r = q_euler_poly_integral(1, 1, &c, &IntegrateOptions::new(6)).unwrap();
        assert!(b.agreement(&r.value, &b.from_rational(&rational(1, 17)).unwrap()) >= 6);
        let r = q_euler_poly_integral(2, 2, &c, &IntegrateOptions::new(6)).unwrap();
        assert!(b.agreement(&r.value, &q_euler_poly(2, 2, &c).unwrap()) >= 6);
    }

    #[test]
    fn padic_argument_polynomial_matches_integer_argument() {
        let c = pad_ctx(5, 6, 16);
        for x in 0..4u64 {
            let xs = c.backend().int(x as i64);
            let a = q_euler_poly_padic(3, &xs, &c).unwrap();
            let b = q_euler_poly(3, x, &c).unwrap();
            assert!(c.backend().agreement(&a, &b) >= 10);
        }
    }

    #[test]
    fn functional_equation_closed_exact() {
        for q in [rational(4, 1), rational(9, 5), rational(-2, 7)] {
            let c = rat_ctx(3, q);
            for m in 0..=10 {
                assert_eq!(
                    functional_equation_closed_residual(m, &c).unwrap(),
                    rational(0, 1),
                    "m = {m}"
                );
            }
        }
    }

    #[test]
    fn twisted_trivial_reduces() {
        let c = rat_ctx(5, rational(6, 1));
        let chi = Character::trivial();
        for m in 0..5 {
            assert_eq!(
                generalized_q_euler_closed(m, &chi, &c).unwrap(),
                q_euler_closed(m, &c).unwrap()
            );
        }
    }

    #[test]
    fn twisted_closed_form_matches_level_sums() {
        // m = 0: [2]_q (-q - q^2)/(1 + q^3) for the quadratic character mod 3.
        let chi = Character::parse("3:0,1,-1").unwrap();
        let c = rat_ctx(5, rational(6, 1));
        let q = rational(6, 1);
        let expected = (rational(1, 1) + &q) * (-q.clone() - &q * &q) / (rational(1, 1) + &q * &q * &q);
        assert_eq!(generalized_q_euler_closed(0, &chi, &c).unwrap(), expected);

        let cp = pad_ctx(5, 6, 14);
        for m in 0..3 {
            let r = generalized_q_euler(m, &chi, &cp, &IntegrateOptions::new(6)).unwrap();
            assert!(r.is_converged());
            let closed = generalized_q_euler_closed(m, &chi, &cp).unwrap();
            assert!(cp.backend().agreement(&r.value, &closed) >= 6, "m = {m}");
        }
    }

    #[test]
    fn twisted_level_sum_is_exact_rational_at_level_zero() {
        // At level 0 the sum runs over a < d only.
        let chi = Character::parse("3:0,1,-1").unwrap();
        let c = rat_ctx(5, rational(6, 1));
        let f = TwistedBracketPower::new(c.clone(), chi.realize(c.backend()).unwrap(), "chi", 1).unwrap();
        // (chi(1)(-6)[1] + chi(2)(36)[2]) / [3]_{-6} = (-6 - 252)/31
        assert_eq!(riemann_sum(&f, &c, 3, 0).unwrap(), rational(-258, 31));
    }

    #[test]
    fn tables() {
        let c = rat_ctx(3, rational(4, 1));
        let t = EulerTable::closed(&c, 2).unwrap();
        assert_eq!(t.entries, vec![rational(1, 1), rational(-4, 17), rational(12, 221)]);
        assert_eq!(t.method, Method::ClosedForm);
        let cp = pad_ctx(3, 4, 12);
        let ti = EulerTable::integral(&cp, 3, &IntegrateOptions::new(6)).unwrap();
        let tc = EulerTable::closed(&cp, 3).unwrap();
        for m in 0..=3 {
            assert!(cp.backend().agreement(ti.get(m).unwrap(), tc.get(m).unwrap()) >= 6);
        }
    }
}
