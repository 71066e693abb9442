//! The fermionic p-adic q-integral
//!
//! ```text
//! I_{-q}(f) = lim_{N -> oo} 1/[d p^N]_{-q} * sum_{x < d p^N} f(x) (-q)^x
//! ```
//!
//! computed as a sequence of exact level sums, stopped once two consecutive
//! levels agree to the requested number of p-adic digits.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{check_modulus, level_modulus};
use crate::qnum::QContext;
use crate::scalar::{Backend, Valuation};

/// Number of sample points evaluated per work unit in a level sum.
const CHUNK: u64 = 2048;

/// A function on the sample points `0, 1, 2, ...` of Z_p (or of X).
pub trait Integrand<B: Backend>: Send + Sync {
    fn eval(&self, x: u64) -> B::Elem;

    /// Values at `start..end`. Implementations may evaluate incrementally.
    fn eval_range(&self, start: u64, end: u64) -> Vec<B::Elem> {
        (start..end).map(|x| self.eval(x)).collect()
    }

    fn describe(&self) -> String;

    /// The translate `f_1(x) = f(x + 1)`.
    fn translate(&self) -> Arc<dyn Integrand<B>>;

    /// Degree as a polynomial in `[x]_q`, when known; bounds the number of levels needed.
    fn degree(&self) -> Option<u32> {
        None
    }

    /// A period of the integrand when it has one (character twists).
    fn period(&self) -> Option<u64> {
        None
    }
}

/// `f(x) = [x + shift]_q^m`.
#[derive(Clone, Debug)]
pub struct BracketPower<B: Backend> {
    ctx: QContext<B>,
    shift: u64,
    exponent: u32,
}

impl<B: Backend + 'static> BracketPower<B> {
    pub fn new(ctx: QContext<B>, exponent: u32) -> Self {
        Self::shifted(ctx, 0, exponent)
    }

    pub fn shifted(ctx: QContext<B>, shift: u64, exponent: u32) -> Self {
        BracketPower { ctx, shift, exponent }
    }
}

impl<B: Backend + 'static> Integrand<B> for BracketPower<B> {
    fn eval(&self, x: u64) -> B::Elem {
        let b = self.ctx.backend();
        b.pow(&self.ctx.bracket(x + self.shift), self.exponent as u64)
    }

    fn eval_range(&self, start: u64, end: u64) -> Vec<B::Elem> {
        let b = self.ctx.backend();
        let first = start + self.shift;
        let mut bracket = self.ctx.bracket(first);
        let mut power = self.ctx.q_pow_int(first);
        let mut out = Vec::with_capacity((end - start) as usize);
        for _ in start..end {
            out.push(b.pow(&bracket, self.exponent as u64));
            // [y + 1]_q = [y]_q + q^y
            bracket = b.add(&bracket, &power);
            power = b.mul(&power, self.ctx.q());
        }
        out
    }

    fn describe(&self) -> String {
        match self.shift {
            0 => format!("[x]_q^{}", self.exponent),
            s => format!("[x+{s}]_q^{}", self.exponent),
        }
    }

    fn translate(&self) -> Arc<dyn Integrand<B>> {
        Arc::new(Self::shifted(self.ctx.clone(), self.shift + 1, self.exponent))
    }

    fn degree(&self) -> Option<u32> {
        Some(self.exponent)
    }
}

/// `f(x) = chi(x + shift) [x + shift]_q^m` for a periodic table of values `chi`.
#[derive(Clone, Debug)]
pub struct TwistedBracketPower<B: Backend> {
    inner: BracketPower<B>,
    values: Arc<Vec<B::Elem>>,
    label: String,
}

impl<B: Backend + 'static> TwistedBracketPower<B> {
    /// `values[i]` is the twist at residues `i` modulo `values.len()`.
    pub fn new(ctx: QContext<B>, values: Vec<B::Elem>, label: impl Into<String>, exponent: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("twist table is empty"));
        }
        Ok(TwistedBracketPower {
            inner: BracketPower::new(ctx, exponent),
            values: Arc::new(values),
            label: label.into(),
        })
    }

    fn twist(&self, y: u64) -> &B::Elem {
        &self.values[(y % self.values.len() as u64) as usize]
    }
}

impl<B: Backend + 'static> Integrand<B> for TwistedBracketPower<B> {
    fn eval(&self, x: u64) -> B::Elem {
        let b = self.inner.ctx.backend();
        b.mul(self.twist(x + self.inner.shift), &self.inner.eval(x))
    }

    fn eval_range(&self, start: u64, end: u64) -> Vec<B::Elem> {
        let b = self.inner.ctx.backend();
        let shift = self.inner.shift;
        self.inner
            .eval_range(start, end)
            .into_iter()
            .zip(start..end)
            .map(|(v, x)| b.mul(self.twist(x + shift), &v))
            .collect()
    }

    fn describe(&self) -> String {
        match self.inner.shift {
            0 => format!("{}(x)*{}", self.label, self.inner.describe()),
            s => format!("{}(x+{s})*{}", self.label, self.inner.describe()),
        }
    }

    fn translate(&self) -> Arc<dyn Integrand<B>> {
        let mut next = self.clone();
        next.inner.shift += 1;
        Arc::new(next)
    }

    fn degree(&self) -> Option<u32> {
        Some(self.inner.exponent)
    }

    fn period(&self) -> Option<u64> {
        Some(self.values.len() as u64)
    }
}

type SampleFn<E> = dyn Fn(u64) -> E + Send + Sync;

/// An integrand given by a closure.
#[derive(Clone)]
pub struct FnIntegrand<B: Backend> {
    f: Arc<SampleFn<B::Elem>>,
    shift: u64,
    label: String,
    degree: Option<u32>,
}

impl<B: Backend> fmt::Debug for FnIntegrand<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnIntegrand")
            .field("label", &self.label)
            .field("shift", &self.shift)
            .finish()
    }
}

impl<B: Backend + 'static> FnIntegrand<B> {
    pub fn new(
        label: impl Into<String>,
        degree: Option<u32>,
        f: impl Fn(u64) -> B::Elem + Send + Sync + 'static,
    ) -> Self {
        FnIntegrand {
            f: Arc::new(f),
            shift: 0,
            label: label.into(),
            degree,
        }
    }
}

impl<B: Backend + 'static> Integrand<B> for FnIntegrand<B> {
    fn eval(&self, x: u64) -> B::Elem {
        (self.f)(x + self.shift)
    }

    fn describe(&self) -> String {
        match self.shift {
            0 => self.label.clone(),
            s => format!("({})(x+{s})", self.label),
        }
    }

    fn translate(&self) -> Arc<dyn Integrand<B>> {
        let mut next = self.clone();
        next.shift += 1;
        Arc::new(next)
    }

    fn degree(&self) -> Option<u32> {
        self.degree
    }
}

/// `sum_i c_i f_i`.
#[derive(Clone)]
pub struct LinearCombination<B: Backend> {
    backend: B,
    terms: Vec<(B::Elem, Arc<dyn Integrand<B>>)>,
}

impl<B: Backend + 'static> LinearCombination<B> {
    pub fn new(backend: B, terms: Vec<(B::Elem, Arc<dyn Integrand<B>>)>) -> Self {
        LinearCombination { backend, terms }
    }
}

impl<B: Backend + 'static> Integrand<B> for LinearCombination<B> {
    fn eval(&self, x: u64) -> B::Elem {
        let b = &self.backend;
        self.terms
            .iter()
            .fold(b.zero(), |acc, (c, f)| b.add(&acc, &b.mul(c, &f.eval(x))))
    }

    fn eval_range(&self, start: u64, end: u64) -> Vec<B::Elem> {
        let b = &self.backend;
        let mut out = vec![b.zero(); (end - start) as usize];
        for (c, f) in &self.terms {
            for (slot, v) in out.iter_mut().zip(f.eval_range(start, end)) {
                *slot = b.add(slot, &b.mul(c, &v));
            }
        }
        out
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, f)| format!("({c})*{}", f.describe()))
            .collect();
        parts.join(" + ")
    }

    fn translate(&self) -> Arc<dyn Integrand<B>> {
        Arc::new(LinearCombination {
            backend: self.backend.clone(),
            terms: self.terms.iter().map(|(c, f)| (c.clone(), f.translate())).collect(),
        })
    }

    fn degree(&self) -> Option<u32> {
        self.terms
            .iter()
            .map(|(_, f)| f.degree())
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }
}

/// `sum_{start <= x < end} f(x) (-q)^x`, undivided.
fn weighted_chunk<B: Backend>(f: &dyn Integrand<B>, ctx: &QContext<B>, start: u64, end: u64) -> B::Elem {
    let b = ctx.backend();
    let mut weight = ctx.neg_q_pow_int(start);
    let mut acc = b.zero();
    for v in f.eval_range(start, end) {
        acc = b.add(&acc, &b.mul(&v, &weight));
        weight = b.mul(&weight, ctx.neg_q());
    }
    acc
}

/// Undivided level sum evaluated sequentially.
pub fn weighted_sum_sequential<B: Backend>(f: &dyn Integrand<B>, ctx: &QContext<B>, modulus: u64) -> B::Elem {
    weighted_chunk(f, ctx, 0, modulus)
}

/// Undivided level sum evaluated over disjoint chunks in parallel.
pub fn weighted_sum<B: Backend>(f: &dyn Integrand<B>, ctx: &QContext<B>, modulus: u64) -> B::Elem {
    let b = ctx.backend();
    if modulus <= CHUNK {
        return weighted_chunk(f, ctx, 0, modulus);
    }
    let chunks = modulus.div_ceil(CHUNK);
    let partials: Vec<B::Elem> = (0..chunks)
        .into_par_iter()
        .map(|i| weighted_chunk(f, ctx, i * CHUNK, ((i + 1) * CHUNK).min(modulus)))
        .collect();
    partials.iter().fold(b.zero(), |acc, x| b.add(&acc, x))
}

/// The level-`N` q-Riemann sum `1/[d p^N]_{-q} sum_{x < d p^N} f(x) (-q)^x`.
pub fn riemann_sum<B: Backend>(f: &dyn Integrand<B>, ctx: &QContext<B>, d: u64, level: u32) -> Result<B::Elem> {
    ctx.param().require_strict()?;
    check_modulus(d, ctx.prime())?;
    let modulus = level_modulus(d, ctx.prime(), level)?;
    let b = ctx.backend();
    b.div(&weighted_sum(f, ctx, modulus), &ctx.bracket_neg(modulus))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    Converged,
    NotConverged,
}

#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    /// Digits that must agree between consecutive levels.
    pub target_precision: i64,
    /// Highest level tried; defaults to `M + m + 2` for degree-`m` integrands.
    pub max_level: Option<u32>,
    /// Modulus `d` of the space `X = lim Z / d p^N Z`.
    pub d: u64,
}

impl IntegrateOptions {
    pub fn new(target_precision: i64) -> Self {
        IntegrateOptions {
            target_precision,
            max_level: None,
            d: 1,
        }
    }

    pub fn with_max_level(mut self, level: u32) -> Self {
        self.max_level = Some(level);
        self
    }

    pub fn with_modulus(mut self, d: u64) -> Self {
        self.d = d;
        self
    }

    fn level_cap(&self, f_degree: Option<u32>) -> u32 {
        self.max_level
            .unwrap_or_else(|| (self.target_precision.max(0) as u32) + f_degree.unwrap_or(0) + 2)
    }
}

#[derive(Clone, Debug)]
pub struct IntegralResult<E> {
    /// The last level sum.
    pub value: E,
    /// Digits on which the last two levels agree, capped at the target.
    pub achieved_precision: i64,
    pub levels_used: u32,
    /// Level sums `S_0, S_1, ..., S_N`.
    pub level_values: Vec<E>,
    pub status: Convergence,
}

impl<E> IntegralResult<E> {
    pub fn is_converged(&self) -> bool {
        self.status == Convergence::Converged
    }

    /// Turns a non-converged result into [`Error::NotConverged`].
    pub fn require_converged(self, target: i64) -> Result<Self> {
        match self.status {
            Convergence::Converged => Ok(self),
            Convergence::NotConverged => Err(Error::NotConverged {
                target,
                achieved: self.achieved_precision,
                levels: self.levels_used,
            }),
        }
    }
}

/// Computes level sums `S_0, S_1, ...` until `v_p(S_N - S_(N-1)) >= M` or the level cap.
pub fn integrate<B: Backend>(
    f: &dyn Integrand<B>,
    ctx: &QContext<B>,
    opts: &IntegrateOptions,
) -> Result<IntegralResult<B::Elem>> {
    let b = ctx.backend();
    let target = opts.target_precision;
    let cap = opts.level_cap(f.degree()).max(1);
    let mut values = vec![riemann_sum(f, ctx, opts.d, 0)?];
    let mut achieved = i64::MIN;
    for level in 1..=cap {
        let s = riemann_sum(f, ctx, opts.d, level)?;
        let agreement = b.agreement(&s, values.last().unwrap());
        values.push(s);
        achieved = agreement.min(target);
        if agreement >= target {
            return Ok(IntegralResult {
                value: values.last().unwrap().clone(),
                achieved_precision: achieved,
                levels_used: level,
                level_values: values,
                status: Convergence::Converged,
            });
        }
    }
    Ok(IntegralResult {
        value: values.last().unwrap().clone(),
        achieved_precision: achieved,
        levels_used: cap,
        level_values: values,
        status: Convergence::NotConverged,
    })
}

/// Residual of `q I(f_1) + I(f) - [2]_q f(0)`.
#[derive(Clone, Debug)]
pub struct FunctionalEquationCheck<E> {
    pub residual: E,
    pub valuation: Valuation,
    /// Digits to which the residual is known to vanish: `min(v(residual), precision of both integrals)`.
    pub certified: i64,
    pub integral: IntegralResult<E>,
    pub translated_integral: IntegralResult<E>,
}

impl<E> FunctionalEquationCheck<E> {
    pub fn holds_to(&self, precision: i64) -> bool {
        self.certified >= precision
    }
}

pub fn check_functional_equation<B: Backend>(
    f: &dyn Integrand<B>,
    ctx: &QContext<B>,
    opts: &IntegrateOptions,
) -> Result<FunctionalEquationCheck<B::Elem>> {
    let b = ctx.backend();
    let target = opts.target_precision;
    let plain = integrate(f, ctx, opts)?.require_converged(target)?;
    let f1 = f.translate();
    let translated = integrate(f1.as_ref(), ctx, opts)?.require_converged(target)?;
    let lhs = b.add(&b.mul(ctx.q(), &translated.value), &plain.value);
    let residual = b.sub(&lhs, &b.mul(&ctx.two_q(), &f.eval(0)));
    let valuation = b.valuation(&residual);
    let certified = valuation
        .lower_bound()
        .min(plain.achieved_precision)
        .min(translated.achieved_precision);
    Ok(FunctionalEquationCheck {
        residual,
        valuation,
        certified,
        integral: plain,
        translated_integral: translated,
    })
}

/// The `q = 1` specialization `lim_N sum_{x < p^N} f(x) (-1)^x`.
pub fn q1_limit_integral<B: Backend>(
    f: &dyn Integrand<B>,
    backend: B,
    opts: &IntegrateOptions,
) -> Result<IntegralResult<B::Elem>> {
    let ctx = QContext::from_rational(backend, &BigRational::one())?;
    integrate(f, &ctx, opts)
}
