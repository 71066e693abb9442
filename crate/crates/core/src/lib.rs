//! Fermionic p-adic q-integrals and q-Euler numbers.
//!
//! Two independent routes are provided for every number: closed forms evaluated in
//! exact arithmetic, and limits of signed q-Riemann sums
//! `1/[d p^N]_{-q} sum_{x < d p^N} f(x) (-q)^x` evaluated level by level in Q_p.
//!
//! Scalars come from a [`scalar::Backend`]: exact rationals, or fixed-precision
//! p-adic numbers with explicit `O(p^M)` error terms.

pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod euler;
pub mod integral;
pub mod measure;
pub mod qnum;
pub mod scalar;
pub mod series;

pub use dirichlet::{CharValue, Character};
pub use error::{Error, Result};
pub use euler::{
    classical_euler, classical_euler_table, generalized_q_euler, generalized_q_euler_closed, q_euler_closed,
    q_euler_integral, q_euler_poly, q_euler_poly_integral, EulerTable,
};
pub use integral::{integrate, riemann_sum, IntegralResult, Integrand, IntegrateOptions};
pub use measure::{Ball, MeasureContext};
pub use qnum::QContext;
pub use scalar::{Backend, Comparison, PadicBackend, PadicScalar, RationalBackend, Valuation};
pub use series::{build_egf, check_q_difference, TruncatedEGF};
