//! Dirichlet characters of odd modulus given by explicit value tables.

use std::fmt;
use std::ops::Mul;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::scalar::Backend;

/// A character value: zero or the root of unity `zeta_n^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CharValue {
    Zero,
    /// `zeta_order^index`, kept reduced: `0 <= index < order` and `gcd(index, order) = 1`.
    Root {
        order: u64,
        index: u64,
    },
}

impl CharValue {
    pub const ONE: CharValue = CharValue::Root { order: 1, index: 0 };
    pub const MINUS_ONE: CharValue = CharValue::Root { order: 2, index: 1 };

    pub fn root(order: u64, index: u64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidCharacter("root of unity of order 0".to_string()));
        }
        let k = index % order;
        let g = k.gcd(&order);
        Ok(CharValue::Root {
            order: order / g,
            index: k / g,
        })
    }

    /// Multiplicative order; zero has none.
    pub fn order(&self) -> Option<u64> {
        match self {
            CharValue::Zero => None,
            CharValue::Root { order, .. } => Some(*order),
        }
    }

    pub fn pow(self, e: u64) -> CharValue {
        match self {
            CharValue::Zero if e == 0 => CharValue::ONE,
            CharValue::Zero => CharValue::Zero,
            CharValue::Root { order, index } => {
                CharValue::root(order, (index as u128 * e as u128 % order as u128) as u64).unwrap()
            }
        }
    }

    pub fn parse(token: &str, position: usize) -> Result<Self> {
        let t = token.trim();
        match t {
            "0" => return Ok(CharValue::Zero),
            "1" => return Ok(CharValue::ONE),
            "-1" => return Ok(CharValue::MINUS_ONE),
            _ => {}
        }
        let inner = t
            .strip_prefix("zeta(")
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::parse(position, format!("expected 0, 1, -1 or zeta(n,k), got {t:?}")))?;
        let (n, k) = inner
            .split_once(',')
            .ok_or_else(|| Error::parse(position, "zeta needs two arguments"))?;
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| Error::parse(position, "bad order in zeta(n,k)"))?;
        let k: u64 = k
            .trim()
            .parse()
            .map_err(|_| Error::parse(position, "bad index in zeta(n,k)"))?;
        CharValue::root(n, k).map_err(|_| Error::parse(position, "zeta order must be positive"))
    }
}

impl Mul for CharValue {
    type Output = CharValue;

    fn mul(self, other: CharValue) -> CharValue {
        match (self, other) {
            (CharValue::Root { order: n, index: k }, CharValue::Root { order: m, index: l }) => {
                let lcm = n.lcm(&m);
                CharValue::root(lcm, k * (lcm / n) + l * (lcm / m)).unwrap()
            }
            _ => CharValue::Zero,
        }
    }
}

impl fmt::Display for CharValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CharValue::Zero => f.write_str("0"),
            CharValue::Root { order: 1, .. } => f.write_str("1"),
            CharValue::Root { order: 2, .. } => f.write_str("-1"),
            CharValue::Root { order, index } => write!(f, "zeta({order},{index})"),
        }
    }
}

/// A validated Dirichlet character modulo an odd `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Character {
    modulus: u64,
    values: Vec<CharValue>,
    order: u64,
}

impl Character {
    pub fn trivial() -> Self {
        Character {
            modulus: 1,
            values: vec![CharValue::ONE],
            order: 1,
        }
    }

    /// Validates a full value table on `[0, d)`.
    pub fn new(d: u64, values: Vec<CharValue>) -> Result<Self> {
        if d == 0 || d.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "character modulus must be odd and positive, got {d}"
            )));
        }
        if values.len() as u64 != d {
            return Err(Error::InvalidCharacter(format!(
                "periodicity: table has {} entries, expected one per residue mod {d}",
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            let unit = (i as u64).gcd(&d) == 1;
            match (unit, v) {
                (true, CharValue::Zero) => {
                    return Err(Error::InvalidCharacter(format!(
                        "chi({i}) = 0 although gcd({i}, {d}) = 1"
                    )))
                }
                (false, CharValue::Root { .. }) => {
                    return Err(Error::InvalidCharacter(format!(
                        "chi({i}) must vanish since gcd({i}, {d}) > 1"
                    )))
                }
                _ => {}
            }
        }
        if values[(1 % d) as usize] != CharValue::ONE {
            return Err(Error::InvalidCharacter("chi(1) = 1 is violated".to_string()));
        }
        for a in 0..d {
            for b in a..d {
                let lhs = values[((a * b) % d) as usize];
                let rhs = values[a as usize] * values[b as usize];
                if lhs != rhs {
                    return Err(Error::InvalidCharacter(format!(
                        "multiplicativity chi({a}*{b}) = chi({a}) chi({b}) is violated"
                    )));
                }
            }
        }
        let order = values.iter().filter_map(|v| v.order()).fold(1, |acc, n| acc.lcm(&n));
        Ok(Character {
            modulus: d,
            values,
            order,
        })
    }

    /// Parses `d:v0,v1,...` with values `0`, `1`, `-1` or `zeta(n,k)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (d_str, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse(0, "expected d:v0,v1,..."))?;
        let d: u64 = d_str
            .trim()
            .parse()
            .map_err(|_| Error::parse(0, format!("invalid modulus {d_str:?}")))?;
        let mut values = Vec::new();
        let mut depth = 0usize;
        let mut start = 0usize;
        let base = d_str.len() + 1;
        for (i, c) in rest.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    values.push(CharValue::parse(&rest[start..i], base + start)?);
                    start = i + 1;
                }
                _ => {}
            }
        }
        values.push(CharValue::parse(&rest[start..], base + start)?);
        Self::new(d, values)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Least common multiple of the orders of the values.
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn values(&self) -> &[CharValue] {
        &self.values
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn eval(&self, i: u64) -> CharValue {
        self.values[(i % self.modulus) as usize]
    }

    /// Is `chi` induced from a character modulo the proper divisor `e` of `d`?
    fn induced_from(&self, e: u64) -> bool {
        (0..self.modulus)
            .filter(|&a| a.gcd(&self.modulus) == 1 && a % e == 1 % e)
            .all(|a| self.values[a as usize] == CharValue::ONE)
    }

    /// Smallest modulus from which `chi` is induced.
    pub fn conductor(&self) -> u64 {
        (1..self.modulus)
            .filter(|e| self.modulus.is_multiple_of(*e))
            .find(|&e| self.induced_from(e))
            .unwrap_or(self.modulus)
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }

    /// `chi(i)` as a scalar of the backend.
    pub fn eval_in<B: Backend>(&self, i: u64, backend: &B) -> Result<B::Elem> {
        match self.eval(i) {
            CharValue::Zero => Ok(backend.zero()),
            CharValue::Root { order, index } => backend.root_of_unity(order, index),
        }
    }

    /// `chi(0), ..., chi(d - 1)` as backend scalars.
    pub fn realize<B: Backend>(&self, backend: &B) -> Result<Vec<B::Elem>> {
        (0..self.modulus).map(|i| self.eval_in(i, backend)).collect()
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{}:{}", self.modulus, vals.join(","))
    }
}

/// Smallest primitive root modulo the odd prime `p`.
pub fn primitive_root(p: u64) -> u64 {
    let n = p - 1;
    let mut factors = Vec::new();
    let mut m = n;
    let mut f = 2;
    while f * f <= m {
        if m.is_multiple_of(f) {
            factors.push(f);
            while m.is_multiple_of(f) {
                m /= f;
            }
        }
        f += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p)
        .find(|&g| factors.iter().all(|&r| pow_mod(g, n / r, p) != 1))
        .unwrap_or(1)
}

fn pow_mod(base: u64, mut e: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut acc = 1u128;
    let mut b = base as u128 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc as u64
}
