use num_rational::BigRational;

use super::Backend;
use crate::error::{Error, Result};

/// Where `q` sits relative to the convergence disc `v_p(q - 1) >= 1`.
///
/// Inside Q_p with p odd this single condition covers both disc conditions
/// `|q - 1|_p < p^(-1/(p-1))` and `|q - 1|_p < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Strict,
    Outside,
}

/// The deformation parameter `q`, tagged with its regime.
#[derive(Clone, Debug, PartialEq)]
pub struct QParam<E> {
    value: E,
    regime: Regime,
    rational: Option<BigRational>,
}

impl<E: Clone> QParam<E> {
    pub fn new<B: Backend<Elem = E>>(backend: &B, value: E) -> Self {
        let diff = backend.sub(&value, &backend.one());
        let regime = if backend.valuation(&diff).is_at_least(1) {
            Regime::Strict
        } else {
            Regime::Outside
        };
        QParam {
            value,
            regime,
            rational: None,
        }
    }

    pub fn from_rational<B: Backend<Elem = E>>(backend: &B, q: &BigRational) -> Result<Self> {
        let value = backend.from_rational(q)?;
        let mut param = Self::new(backend, value);
        param.rational = Some(q.clone());
        Ok(param)
    }

    pub fn value(&self) -> &E {
        &self.value
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn is_strict(&self) -> bool {
        self.regime == Regime::Strict
    }

    /// The exact rational `q` was built from, when there is one.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.rational.as_ref()
    }

    pub fn require_strict(&self) -> Result<()> {
        match self.regime {
            Regime::Strict => Ok(()),
            Regime::Outside => Err(Error::ConvergenceDomain("q must satisfy v_p(q - 1) >= 1".to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational::rational;
    use crate::scalar::{PadicBackend, RationalBackend};

    #[test]
    fn regimes() {
        let r = RationalBackend::new(3).unwrap();
        assert!(QParam::from_rational(&r, &rational(4, 1)).unwrap().is_strict());
        assert!(QParam::from_rational(&r, &rational(1, 1)).unwrap().is_strict());
        assert!(QParam::from_rational(&r, &rational(10, 1)).unwrap().is_strict());
        assert_eq!(
            QParam::from_rational(&r, &rational(9, 5)).unwrap().regime(),
            Regime::Outside
        );
        assert!(QParam::from_rational(&r, &rational(2, 1))
            .unwrap()
            .require_strict()
            .is_err());

        let p = PadicBackend::new(5, 6).unwrap();
        let q = QParam::from_rational(&p, &rational(6, 1)).unwrap();
        assert!(q.is_strict());
        assert_eq!(q.as_rational(), Some(&rational(6, 1)));
    }
}
