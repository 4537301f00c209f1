//! Small finite fields F_{p^m} in polynomial basis.
//!
//! Elements are stored as the integer index `sum c_i p^i` of their coordinate
//! vector, so the canonical element order is plain numeric order. Products and
//! inverses go through exp/log tables built from the smallest primitive element.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on the field order.
pub const MAX_ORDER: u64 = 1 << 16;

/// Largest odd-characteristic extension that gets a full addition table.
const ADD_TABLE_MAX: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{m} exceeds 2^16")]
    FieldTooLarge { p: u32, m: u32 },
    #[error("modulus must be a monic degree-{m} polynomial with coefficients below {p}")]
    BadModulus { p: u32, m: u32 },
    #[error("modulus {0:?} is reducible")]
    ReducibleModulus(Vec<u32>),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cubing is not a bijection of F_{0}")]
    CubingNotBijective(u32),
    #[error("element index {index} is outside F_{q}")]
    OutOfRange { index: u32, q: u32 },
    #[error("characteristic 2 required, field has characteristic {0}")]
    NotCharTwo(u32),
    #[error("invalid field description: {0}")]
    Parse(String),
}

/// A field element, identified by its coordinate index.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FieldElem(u32);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    pub(crate) const fn raw(index: u32) -> Self {
        FieldElem(index)
    }

    pub const fn index(self) -> u32 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// F_{p^m} with its acceleration tables. Immutable once built.
#[derive(Debug)]
pub struct Field {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    generator: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
    neg: Vec<u32>,
    add_table: Option<Vec<u16>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.m == other.m && self.modulus == other.modulus
    }
}

impl Eq for Field {}

/// Serializable field description: `p`, `m`, optional `modulus`
/// (coefficients, constant term first, leading 1 included).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub p: u32,
    #[serde(default = "one")]
    pub m: u32,
    #[serde(default)]
    pub modulus: Option<Vec<u32>>,
}

fn one() -> u32 {
    1
}

impl FieldConfig {
    pub fn build(&self) -> Result<Arc<Field>, GfError> {
        build_field(self.p, self.m, self.modulus.as_deref())
    }

    pub fn from_toml(text: &str) -> Result<Self, GfError> {
        toml::from_str(text).map_err(|e| GfError::Parse(e.to_string()))
    }
}

/// Parses the CLI selector `q`, `p^m` or `p^m:c0,c1,...,cm`.
impl FromStr for FieldConfig {
    type Err = GfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, modulus) = match s.split_once(':') {
            Some((h, tail)) => {
                let coeffs = tail
                    .split(',')
                    .map(|c| c.trim().parse::<u32>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| GfError::Parse(format!("modulus: {e}")))?;
                (h, Some(coeffs))
            }
            None => (s, None),
        };
        let bad = |e: std::num::ParseIntError| GfError::Parse(format!("{head}: {e}"));
        let (p, m) = match head.split_once('^') {
            Some((p, m)) => (p.trim().parse().map_err(bad)?, m.trim().parse().map_err(bad)?),
            None => {
                let q: u32 = head.parse().map_err(bad)?;
                prime_power(q).ok_or_else(|| GfError::Parse(format!("{q} is not a prime power")))?
            }
        };
        Ok(FieldConfig { p, m, modulus })
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `q = p^m`, or `None` when `q` is not a prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let (mut r, mut m) = (q, 0);
    while r % p == 0 {
        r /= p;
        m += 1;
    }
    (r == 1).then_some((p, m))
}

// Dense polynomials over Z_p, constant term first. Only used while building.

fn zp_trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn zp_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    zp_trim(&mut r);
    let db = b.len() - 1;
    let inv_lead = zp_inv(b[db], p);
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let c = (r[r.len() - 1] as u64 * inv_lead as u64 % p as u64) as u32;
        for (i, &bi) in b.iter().enumerate() {
            let t = (c as u64 * bi as u64 % p as u64) as u32;
            r[shift + i] = (r[shift + i] + p - t) % p;
        }
        zp_trim(&mut r);
    }
    r
}

fn zp_inv(a: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let (mut b, mut e) = (a as u64 % p as u64, p as u64 - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

fn digits(mut index: u32, p: u32, m: u32) -> Vec<u32> {
    let mut d = Vec::with_capacity(m as usize);
    for _ in 0..m {
        d.push(index % p);
        index /= p;
    }
    d
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Monic irreducibility by trial division over all monic divisors of degree <= m/2.
fn is_irreducible(modulus: &[u32], p: u32) -> bool {
    let m = modulus.len() - 1;
    for d in 1..=m / 2 {
        let count = (p as u64).pow(d as u32);
        for low in 0..count {
            let mut div = digits(low as u32, p, d as u32);
            div.push(1);
            if zp_rem(modulus, &div, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn default_modulus(p: u32, m: u32) -> Vec<u32> {
    let count = (p as u64).pow(m);
    for low in 0..count {
        let mut cand = digits(low as u32, p, m);
        cand.push(1);
        if m == 1 || is_irreducible(&cand, p) {
            return cand;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

/// Builds F_{p^m}; with no modulus the smallest monic irreducible is used.
pub fn build_field(p: u32, m: u32, modulus: Option<&[u32]>) -> Result<Arc<Field>, GfError> {
    if !is_prime(p) {
        return Err(GfError::NotPrime(p));
    }
    if m == 0 {
        return Err(GfError::ZeroDegree);
    }
    let q = (p as u64)
        .checked_pow(m)
        .filter(|&q| q <= MAX_ORDER)
        .ok_or(GfError::FieldTooLarge { p, m })? as u32;
    let modulus = match modulus {
        Some(c) => {
            if c.len() != m as usize + 1 || c[m as usize] != 1 || c.iter().any(|&x| x >= p) {
                return Err(GfError::BadModulus { p, m });
            }
            if !is_irreducible(c, p) {
                return Err(GfError::ReducibleModulus(c.to_vec()));
            }
            c.to_vec()
        }
        None => default_modulus(p, m),
    };
    Ok(Arc::new(Field::with_modulus(p, m, q, modulus)))
}

impl Field {
    fn with_modulus(p: u32, m: u32, q: u32, modulus: Vec<u32>) -> Self {
        let slow_mul = |a: u32, b: u32| -> u32 {
            let (da, db) = (digits(a, p, m), digits(b, p, m));
            let mut prod = vec![0u32; 2 * m as usize];
            for (i, &x) in da.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in db.iter().enumerate() {
                    prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p as u64) as u32;
                }
            }
            let mut r = zp_rem(&prod, &modulus, p);
            r.resize(m as usize, 0);
            undigits(&r, p)
        };

        let order = q - 1;
        let mut generator = 1;
        let mut exp = vec![1u32; 2 * order as usize];
        for g in 1..q {
            let mut x = 1u32;
            let mut ok = true;
            for k in 0..order {
                exp[k as usize] = x;
                x = slow_mul(x, g);
                if x == 1 && k + 1 < order {
                    ok = false;
                    break;
                }
            }
            if ok {
                generator = g;
                break;
            }
        }
        for k in order as usize..exp.len() {
            exp[k] = exp[k - order as usize];
        }
        let mut log = vec![0u32; q as usize];
        for k in 0..order {
            log[exp[k as usize] as usize] = k;
        }
        let neg = (0..q)
            .map(|a| undigits(&digits(a, p, m).iter().map(|&c| (p - c) % p).collect::<Vec<_>>(), p))
            .collect();

        let mut field =
            Field { p, m, q, modulus, generator, exp, log, neg, add_table: None };
        if p != 2 && m > 1 && q <= ADD_TABLE_MAX {
            let mut table = vec![0u16; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    table[(a * q + b) as usize] = field.add_digits(a, b) as u16;
                }
            }
            field.add_table = Some(table);
        }
        field
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn generator(&self) -> FieldElem {
        FieldElem(self.generator)
    }

    pub fn config(&self) -> FieldConfig {
        FieldConfig { p: self.p, m: self.m, modulus: Some(self.modulus.clone()) }
    }

    /// Checked conversion from an index.
    pub fn elem(&self, index: u32) -> Result<FieldElem, GfError> {
        if index < self.q {
            Ok(FieldElem(index))
        } else {
            Err(GfError::OutOfRange { index, q: self.q })
        }
    }

    pub fn contains(&self, e: FieldElem) -> bool {
        e.0 < self.q
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElem {
        FieldElem(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn from_coords(&self, coords: &[u32]) -> Result<FieldElem, GfError> {
        if coords.len() > self.m as usize || coords.iter().any(|&c| c >= self.p) {
            return Err(GfError::Parse(format!("bad coordinates {coords:?}")));
        }
        Ok(FieldElem(undigits(coords, self.p)))
    }

    pub fn coords(&self, e: FieldElem) -> Vec<u32> {
        digits(e.0, self.p, self.m)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + Clone {
        (0..self.q).map(FieldElem)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = FieldElem> + Clone {
        (1..self.q).map(FieldElem)
    }

    fn add_digits(&self, mut a: u32, mut b: u32) -> u32 {
        let (mut r, mut pw) = (0, 1);
        for _ in 0..self.m {
            r += ((a % self.p + b % self.p) % self.p) * pw;
            pw *= self.p;
            a /= self.p;
            b /= self.p;
        }
        r
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(if self.p == 2 {
            a.0 ^ b.0
        } else if self.m == 1 {
            let s = a.0 + b.0;
            if s >= self.p {
                s - self.p
            } else {
                s
            }
        } else if let Some(t) = &self.add_table {
            t[(a.0 * self.q + b.0) as usize] as u32
        } else {
            self.add_digits(a.0, b.0)
        })
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        FieldElem(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if a.0 == 0 || b.0 == 0 {
            return FieldElem::ZERO;
        }
        FieldElem(self.exp[(self.log[a.0 as usize] + self.log[b.0 as usize]) as usize])
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem, GfError> {
        if a.0 == 0 {
            return Err(GfError::DivisionByZero);
        }
        let order = self.q - 1;
        Ok(FieldElem(self.exp[((order - self.log[a.0 as usize]) % order) as usize]))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e` with `0^0 = 1`.
    #[inline]
    pub fn pow(&self, a: FieldElem, e: u64) -> FieldElem {
        if e == 0 {
            return FieldElem::ONE;
        }
        if a.0 == 0 {
            return FieldElem::ZERO;
        }
        let order = (self.q - 1) as u64;
        let k = (self.log[a.0 as usize] as u64 * (e % order)) % order;
        FieldElem(self.exp[k as usize])
    }

    /// Discrete log base the table generator; `None` for zero.
    pub fn log(&self, a: FieldElem) -> Option<u32> {
        (a.0 != 0).then(|| self.log[a.0 as usize])
    }

    pub fn exp(&self, k: u64) -> FieldElem {
        FieldElem(self.exp[(k % (self.q - 1) as u64) as usize])
    }

    pub fn is_square(&self, e: FieldElem) -> bool {
        self.p == 2 || e.0 == 0 || self.log[e.0 as usize] % 2 == 0
    }

    /// A square root when one exists. In odd characteristic the root with the
    /// smaller index is returned.
    pub fn qr_sqrt(&self, e: FieldElem) -> Option<FieldElem> {
        if e.0 == 0 {
            return Some(FieldElem::ZERO);
        }
        if self.p == 2 {
            return Some(self.pow(e, (self.q / 2) as u64));
        }
        let k = self.log[e.0 as usize];
        if k % 2 == 1 {
            return None;
        }
        let s = FieldElem(self.exp[(k / 2) as usize]);
        Some(s.min(self.neg(s)))
    }

    /// Smallest quadratic nonresidue; `None` in characteristic 2.
    pub fn smallest_nonresidue(&self) -> Option<FieldElem> {
        self.nonzero().find(|&e| !self.is_square(e))
    }

    pub fn cbrt(&self, e: FieldElem) -> Result<FieldElem, GfError> {
        let order = self.q - 1;
        if order % 3 == 0 {
            return Err(GfError::CubingNotBijective(self.q));
        }
        if e.0 == 0 {
            return Ok(FieldElem::ZERO);
        }
        let inv3 = (1..order.max(2)).find(|k| (3 * k) % order == 1 % order).unwrap_or(0);
        Ok(FieldElem(self.exp[((self.log[e.0 as usize] as u64 * inv3 as u64) % order as u64) as usize]))
    }

    pub fn frobenius(&self, e: FieldElem, i: u32) -> FieldElem {
        self.pow(e, (self.p as u64).pow(i))
    }

    /// Lowercase text form: decimal in prime fields, `0x..` otherwise.
    pub fn format_elem(&self, e: FieldElem) -> String {
        if self.m == 1 {
            e.0.to_string()
        } else {
            format!("{:#x}", e.0)
        }
    }

    /// JSON form matching [`Field::format_elem`].
    pub fn elem_json(&self, e: FieldElem) -> serde_json::Value {
        if self.m == 1 {
            serde_json::Value::from(e.0)
        } else {
            serde_json::Value::from(format!("{:#x}", e.0))
        }
    }

    /// Reads an element written as a decimal or `0x` index.
    pub fn parse_elem(&self, s: &str) -> Result<FieldElem, GfError> {
        let s = s.trim();
        let index = match s.strip_prefix("0x") {
            Some(h) => u32::from_str_radix(h, 16),
            None => s.parse::<u32>(),
        }
        .map_err(|e| GfError::Parse(format!("{s}: {e}")))?;
        self.elem(index)
    }

    pub fn elem_from_json(&self, v: &serde_json::Value) -> Result<FieldElem, GfError> {
        match v {
            serde_json::Value::Number(n) => n
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| GfError::Parse(format!("bad element {n}")))
                .and_then(|i| self.elem(i)),
            serde_json::Value::String(s) => self.parse_elem(s),
            other => Err(GfError::Parse(format!("bad element {other}"))),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 1 {
            write!(f, "F_{}", self.p)
        } else {
            write!(f, "F_{}^{}", self.p, self.m)
        }
    }
}

/// Roots of the linearized polynomial `sum L_i y^{p^i}` by exhaustive scan.
pub fn linearized_roots(field: &Field, coeffs: &[FieldElem]) -> Vec<FieldElem> {
    field.elements().filter(|&y| eval_linearized(field, coeffs, y).is_zero()).collect()
}

pub fn eval_linearized(field: &Field, coeffs: &[FieldElem], y: FieldElem) -> FieldElem {
    coeffs.iter().enumerate().fold(FieldElem::ZERO, |acc, (i, &c)| {
        field.add(acc, field.mul(c, field.frobenius(y, i as u32)))
    })
}

/// A linearized polynomial permutes the field iff its only root is zero.
pub fn linearized_is_perm(field: &Field, coeffs: &[FieldElem]) -> bool {
    linearized_roots(field, coeffs).len() == 1
}

/// Exhaustively decides whether `x^3 + L(x)` permutes F_{2^m}.
///
/// `L` is additive, so it is evaluated on the coordinate basis once and
/// extended by XOR.
pub fn x3_plus_l_is_perm(field: &Field, coeffs: &[FieldElem]) -> Result<bool, GfError> {
    if field.p != 2 {
        return Err(GfError::NotCharTwo(field.p));
    }
    let q = field.q as usize;
    let basis: Vec<u32> = (0..field.m)
        .map(|j| eval_linearized(field, coeffs, FieldElem(1 << j)).0)
        .collect();
    let mut seen = vec![0u64; q.div_ceil(64)];
    let mut l_val = 0u32;
    for x in 0..field.q {
        if x > 0 {
            // x and x - 1 differ exactly in the bits of x ^ (x - 1).
            let mut bits = x ^ (x - 1);
            while bits != 0 {
                let j = bits.trailing_zeros();
                l_val ^= basis[j as usize];
                bits &= bits - 1;
            }
        }
        let y = (field.pow(FieldElem(x), 3).0 ^ l_val) as usize;
        if seen[y / 64] >> (y % 64) & 1 == 1 {
            return Ok(false);
        }
        seen[y / 64] |= 1 << (y % 64);
    }
    Ok(true)
}

/// The predicted answer for `x^3 + L(x)`: m odd and `L = theta^2 x + theta x^2`
/// for some theta (theta = 0 gives `L = 0`).
pub fn x3_plus_l_predicted(field: &Field, coeffs: &[FieldElem]) -> bool {
    if field.m % 2 == 0 {
        return false;
    }
    let theta = coeffs.get(1).copied().unwrap_or(FieldElem::ZERO);
    coeffs.first().copied().unwrap_or(FieldElem::ZERO) == field.mul(theta, theta)
        && coeffs.iter().skip(2).all(|c| c.is_zero())
}
