//! Sparse multivariate polynomials over F_q and polynomial systems.
//!
//! Exponents are folded by `x^q = x` (0 stays 0, `e > 0` becomes
//! `((e - 1) mod (q - 1)) + 1`). Arithmetic always returns reduced
//! polynomials; [`MultiPoly::from_terms`] and [`MultiPoly::mul_unreduced`]
//! may keep raw exponents until [`MultiPoly::reduce`] is called.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::Value;
use thiserror::Error;

use crate::gf::{Field, FieldElem, GfError};
use crate::linalg::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("operands live over different fields")]
    FieldMismatch,
    #[error("expected {expected} variables, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("system has {polys} polynomials in {nvars} variables")]
    NotSquare { polys: usize, nvars: usize },
    #[error("empty system")]
    Empty,
    #[error("matrix is {got} x {got}, system has {expected} variables")]
    MatrixSize { expected: usize, got: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error(transparent)]
    Field(#[from] GfError),
}

#[inline]
pub fn reduce_exp(e: u32, q: u32) -> u32 {
    if e == 0 {
        0
    } else {
        (e - 1) % (q - 1) + 1
    }
}

#[derive(Clone, Debug)]
pub struct MultiPoly {
    field: Arc<Field>,
    nvars: usize,
    terms: BTreeMap<Vec<u32>, FieldElem>,
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.field == other.field && self.terms == other.terms
    }
}

impl Eq for MultiPoly {}

impl MultiPoly {
    pub fn zero(field: &Arc<Field>, nvars: usize) -> Self {
        MultiPoly { field: field.clone(), nvars, terms: BTreeMap::new() }
    }

    pub fn constant(field: &Arc<Field>, nvars: usize, c: FieldElem) -> Self {
        let mut p = Self::zero(field, nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The variable `x_{i+1}` (0-based `i`).
    pub fn var(field: &Arc<Field>, nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(field, FieldElem::ONE, e)
    }

    pub fn monomial(field: &Arc<Field>, c: FieldElem, exps: Vec<u32>) -> Self {
        let mut p = Self::zero(field, exps.len());
        p.add_term(exps, c);
        p
    }

    /// Collects terms as given, merging equal exponent vectors. No reduction.
    pub fn from_terms<I>(field: &Arc<Field>, nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (FieldElem, Vec<u32>)>,
    {
        let mut p = Self::zero(field, nvars);
        for (c, e) in terms {
            if e.len() != nvars {
                return Err(PolyError::ArityMismatch { expected: nvars, got: e.len() });
            }
            if !field.contains(c) {
                return Err(GfError::OutOfRange { index: c.index(), q: field.q() }.into());
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exps: Vec<u32>, c: FieldElem) {
        if c.is_zero() {
            return;
        }
        let f = &self.field;
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = f.add(*o.get(), c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in increasing lexicographic order of exponent vectors.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&[u32], FieldElem)> + '_ {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn coefficient_of(&self, exps: &[u32]) -> FieldElem {
        self.terms.get(exps).copied().unwrap_or(FieldElem::ZERO)
    }

    pub fn is_reduced(&self) -> bool {
        let q = self.field.q();
        self.terms.keys().all(|e| e.iter().all(|&x| reduce_exp(x, q) == x))
    }

    pub fn reduce(&self) -> Self {
        let q = self.field.q();
        let mut out = Self::zero(&self.field, self.nvars);
        for (e, &c) in &self.terms {
            out.add_term(e.iter().map(|&x| reduce_exp(x, q)).collect(), c);
        }
        out
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Which variables occur with a nonzero exponent.
    pub fn uses_var(&self, i: usize) -> bool {
        self.terms.keys().any(|e| e[i] > 0)
    }

    pub fn variables(&self) -> Vec<usize> {
        (0..self.nvars).filter(|&i| self.uses_var(i)).collect()
    }

    /// Constant term.
    pub fn constant_term(&self) -> FieldElem {
        self.coefficient_of(&vec![0; self.nvars])
    }

    fn check(&self, other: &Self) -> Result<(), PolyError> {
        if self.field != other.field {
            return Err(PolyError::FieldMismatch);
        }
        if self.nvars != other.nvars {
            return Err(PolyError::ArityMismatch { expected: self.nvars, got: other.nvars });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut out = self.reduce();
        let q = self.field.q();
        for (e, &c) in &other.terms {
            out.add_term(e.iter().map(|&x| reduce_exp(x, q)).collect(), c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.scale(self.field.neg(FieldElem::ONE))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: FieldElem) -> Self {
        let mut out = Self::zero(&self.field, self.nvars);
        if c.is_zero() {
            return out;
        }
        for (e, &v) in &self.terms {
            out.terms.insert(e.clone(), self.field.mul(v, c));
        }
        out.reduce()
    }

    pub fn mul_unreduced(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut out = Self::zero(&self.field, self.nvars);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, self.field.mul(ca, cb));
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let q = self.field.q();
        let mut out = Self::zero(&self.field, self.nvars);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| reduce_exp(a + b, q)).collect();
                out.add_term(e, self.field.mul(ca, cb));
            }
        }
        Ok(out)
    }

    /// `self^t`, reduced at every step.
    pub fn pow(&self, t: u32) -> Self {
        let mut acc = Self::constant(&self.field, self.nvars, FieldElem::ONE);
        let mut base = self.reduce();
        let mut t = t;
        while t > 0 {
            if t & 1 == 1 {
                acc = acc.mul(&base).expect("same field");
            }
            t >>= 1;
            if t > 0 {
                base = base.mul(&base).expect("same field");
            }
        }
        acc
    }

    pub fn eval(&self, point: &[FieldElem]) -> Result<FieldElem, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::ArityMismatch { expected: self.nvars, got: point.len() });
        }
        let f = &self.field;
        Ok(self.terms.iter().fold(FieldElem::ZERO, |acc, (e, &c)| {
            let v = e
                .iter()
                .zip(point)
                .fold(c, |m, (&k, &x)| f.mul(m, f.pow(x, k as u64)));
            f.add(acc, v)
        }))
    }

    /// Substitutes `x_i := args[i]`. All arguments must share the field; their
    /// arity becomes the arity of the result.
    pub fn substitute(&self, args: &[MultiPoly]) -> Result<Self, PolyError> {
        if args.len() != self.nvars {
            return Err(PolyError::ArityMismatch { expected: self.nvars, got: args.len() });
        }
        let out_vars = args.first().map_or(0, |a| a.nvars);
        for a in args {
            if a.field != self.field {
                return Err(PolyError::FieldMismatch);
            }
            if a.nvars != out_vars {
                return Err(PolyError::ArityMismatch { expected: out_vars, got: a.nvars });
            }
        }
        let mut cache: Vec<BTreeMap<u32, MultiPoly>> = vec![BTreeMap::new(); self.nvars];
        let mut out = Self::zero(&self.field, out_vars);
        for (e, &c) in &self.terms {
            let mut term = Self::constant(&self.field, out_vars, c);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let pw = cache[i].entry(k).or_insert_with(|| args[i].pow(k)).clone();
                term = term.mul(&pw)?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Term-list form `[[coef, [e1, ..., en]], ...]`.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(e, &c)| Value::Array(vec![self.field.elem_json(c), Value::from(e.clone())]))
                .collect(),
        )
    }

    pub fn from_json(field: &Arc<Field>, nvars: usize, v: &Value) -> Result<Self, PolyError> {
        let bad = |msg: &str| PolyError::Parse { pos: 0, msg: msg.to_string() };
        let arr = v.as_array().ok_or_else(|| bad("polynomial must be a list of terms"))?;
        let mut terms = Vec::with_capacity(arr.len());
        for t in arr {
            let pair = t.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("term must be [coef, exps]"))?;
            let c = field.elem_from_json(&pair[0])?;
            let e = pair[1]
                .as_array()
                .ok_or_else(|| bad("exponents must be a list"))?
                .iter()
                .map(|x| x.as_u64().and_then(|x| u32::try_from(x).ok()).ok_or_else(|| bad("bad exponent")))
                .collect::<Result<Vec<_>, _>>()?;
            terms.push((c, e));
        }
        Self::from_terms(field, nvars, terms)
    }
}

pub(crate) fn var_name(nvars: usize, i: usize) -> String {
    if nvars <= 3 {
        ["x", "y", "z"][i].to_string()
    } else {
        format!("x{}", i + 1)
    }
}

/// Infix form readable by [`crate::text`]. Highest exponent vectors first.
impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, &c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let coef = if self.field.m() == 1 {
                c.index().to_string()
            } else {
                format!("{{{:#x}}}", c.index())
            };
            let mut parts = Vec::new();
            if c != FieldElem::ONE || e.iter().all(|&x| x == 0) {
                parts.push(coef);
            }
            for (i, &x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => parts.push(var_name(self.nvars, i)),
                    _ => parts.push(format!("{}^{}", var_name(self.nvars, i), x)),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// An ordered n-tuple of polynomials in n variables over one field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolySystem {
    polys: Vec<MultiPoly>,
}

impl PolySystem {
    pub fn new(polys: Vec<MultiPoly>) -> Result<Self, PolyError> {
        let first = polys.first().ok_or(PolyError::Empty)?;
        for p in &polys {
            if p.field != first.field {
                return Err(PolyError::FieldMismatch);
            }
            if p.nvars != polys.len() {
                return Err(PolyError::NotSquare { polys: polys.len(), nvars: p.nvars });
            }
        }
        Ok(PolySystem { polys })
    }

    /// The identity system `(x_1, ..., x_n)`.
    pub fn identity(field: &Arc<Field>, n: usize) -> Self {
        PolySystem { polys: (0..n).map(|i| MultiPoly::var(field, n, i)).collect() }
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.polys[0].field
    }

    pub fn n(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[MultiPoly] {
        &self.polys
    }

    pub fn into_polys(self) -> Vec<MultiPoly> {
        self.polys
    }

    pub fn reduce(&self) -> Self {
        PolySystem { polys: self.polys.iter().map(MultiPoly::reduce).collect() }
    }

    pub fn eval(&self, point: &[FieldElem]) -> Result<Vec<FieldElem>, PolyError> {
        self.polys.iter().map(|p| p.eval(point)).collect()
    }

    /// `F o sigma_M` with `sigma_M(x) = Mx`, i.e. `x_j := sum_l M[j][l] x_l`.
    pub fn compose_linear(&self, m: &Matrix) -> Result<Self, PolyError> {
        let n = self.n();
        if m.n() != n {
            return Err(PolyError::MatrixSize { expected: n, got: m.n() });
        }
        let field = self.field();
        let args: Vec<MultiPoly> = (0..n)
            .map(|j| {
                let terms = (0..n).map(|l| {
                    let mut e = vec![0; n];
                    e[l] = 1;
                    (m.get(j, l), e)
                });
                MultiPoly::from_terms(field, n, terms).expect("well-formed")
            })
            .collect();
        let polys = self.polys.iter().map(|p| p.substitute(&args)).collect::<Result<_, _>>()?;
        Ok(PolySystem { polys })
    }

    /// `M o F`: coordinate `i` becomes `sum_j M[i][j] F_j`.
    pub fn left_linear(&self, m: &Matrix) -> Result<Self, PolyError> {
        let n = self.n();
        if m.n() != n {
            return Err(PolyError::MatrixSize { expected: n, got: m.n() });
        }
        let field = self.field();
        let polys = (0..n)
            .map(|i| {
                (0..n).try_fold(MultiPoly::zero(field, n), |acc, j| acc.add(&self.polys[j].scale(m.get(i, j))))
            })
            .collect::<Result<_, _>>()?;
        Ok(PolySystem { polys })
    }

    /// `F + c` for a constant vector `c`.
    pub fn add_constant(&self, c: &[FieldElem]) -> Result<Self, PolyError> {
        if c.len() != self.n() {
            return Err(PolyError::ArityMismatch { expected: self.n(), got: c.len() });
        }
        let field = self.field();
        let polys = self
            .polys
            .iter()
            .zip(c)
            .map(|(p, &k)| p.add(&MultiPoly::constant(field, self.n(), k)))
            .collect::<Result<_, _>>()?;
        Ok(PolySystem { polys })
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.polys.iter().map(MultiPoly::to_json).collect())
    }

    pub fn from_json(field: &Arc<Field>, v: &Value) -> Result<Self, PolyError> {
        let arr = v
            .as_array()
            .ok_or_else(|| PolyError::Parse { pos: 0, msg: "system must be a list".into() })?;
        let polys = arr
            .iter()
            .map(|p| MultiPoly::from_json(field, arr.len(), p))
            .collect::<Result<_, _>>()?;
        Self::new(polys)
    }
}

impl fmt::Display for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.polys.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Flattened evaluator for repeated evaluation over the whole domain.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    field: Arc<Field>,
    n: usize,
    polys: Vec<Vec<(FieldElem, Vec<u32>)>>,
}

impl CompiledSystem {
    pub fn new(sys: &PolySystem) -> Self {
        let polys = sys
            .polys
            .iter()
            .map(|p| p.reduce().terms.into_iter().map(|(e, c)| (c, e)).collect())
            .collect();
        CompiledSystem { field: sys.field().clone(), n: sys.n(), polys }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    /// Evaluates coordinate values into `out` (length n).
    #[inline]
    pub fn eval_into(&self, point: &[FieldElem], out: &mut [FieldElem]) {
        let f = &*self.field;
        for (slot, poly) in out.iter_mut().zip(&self.polys) {
            let mut acc = FieldElem::ZERO;
            for (c, e) in poly {
                let mut v = *c;
                for (&k, &x) in e.iter().zip(point) {
                    if k != 0 {
                        v = f.mul(v, f.pow(x, k as u64));
                    }
                }
                acc = f.add(acc, v);
            }
            *slot = acc;
        }
    }
}

/// Point with rank `k`: coordinate `i` is digit `i` of `k` in base q.
pub fn point_from_rank(q: u32, n: usize, mut k: u64, out: &mut [FieldElem]) {
    for slot in out.iter_mut().take(n) {
        *slot = FieldElem::raw((k % q as u64) as u32);
        k /= q as u64;
    }
}

pub fn rank_of(q: u32, v: &[FieldElem]) -> u64 {
    v.iter().rev().fold(0u64, |acc, e| acc * q as u64 + e.index() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_field;

    fn all_points(field: &Field, n: usize) -> Vec<Vec<FieldElem>> {
        let total = (field.q() as u64).pow(n as u32);
        (0..total)
            .map(|k| {
                let mut p = vec![FieldElem::ZERO; n];
                point_from_rank(field.q(), n, k, &mut p);
                p
            })
            .collect()
    }

    #[test]
    fn reduce_examples() {
        let f3 = build_field(3, 1, None).unwrap();
        let one = FieldElem::ONE;
        let x4 = MultiPoly::monomial(&f3, one, vec![4]).reduce();
        assert_eq!(x4, MultiPoly::monomial(&f3, one, vec![2]));
        let x3 = MultiPoly::monomial(&f3, one, vec![3]).reduce();
        assert_eq!(x3, MultiPoly::var(&f3, 1, 0));

        let s = MultiPoly::from_terms(&f3, 2, [(one, vec![2, 0]), (one, vec![0, 2])]).unwrap();
        let sq = s.mul_unreduced(&s).unwrap();
        assert!(!sq.is_reduced());
        let r = sq.reduce();
        let expect = MultiPoly::from_terms(
            &f3,
            2,
            [(one, vec![2, 0]), (f3.from_int(2), vec![2, 2]), (one, vec![0, 2])],
        )
        .unwrap();
        assert_eq!(r, expect);
        assert_eq!(r.coefficient_of(&[2, 2]), f3.from_int(2));
        for p in all_points(&f3, 2) {
            assert_eq!(sq.eval(&p).unwrap(), r.eval(&p).unwrap());
        }
    }

    #[test]
    fn mul_examples() {
        let f5 = build_field(5, 1, None).unwrap();
        let x = MultiPoly::var(&f5, 2, 0);
        let y = MultiPoly::var(&f5, 2, 1);
        let prod = x.add(&y).unwrap().mul(&x.sub(&y).unwrap()).unwrap();
        let expect =
            MultiPoly::from_terms(&f5, 2, [(FieldElem::ONE, vec![2, 0]), (f5.from_int(4), vec![0, 2])])
                .unwrap();
        assert_eq!(prod, expect);
        let one = MultiPoly::constant(&f5, 2, FieldElem::ONE);
        assert_eq!(prod.mul(&one).unwrap(), prod);
        assert!(prod.mul(&MultiPoly::zero(&f5, 2)).unwrap().is_zero());

        let f7 = build_field(7, 1, None).unwrap();
        let m = MultiPoly::monomial(&f7, FieldElem::ONE, vec![2, 1]);
        assert_eq!(m.eval(&[f7.from_int(2), f7.from_int(3)]).unwrap(), f7.from_int(5));
        assert!(matches!(m.eval(&[FieldElem::ZERO]), Err(PolyError::ArityMismatch { .. })));
        assert_eq!(prod.add(&m).unwrap_err(), PolyError::FieldMismatch);
    }

    #[test]
    fn coefficient_of_top() {
        let f5 = build_field(5, 1, None).unwrap();
        let top = MultiPoly::monomial(&f5, FieldElem::ONE, vec![4, 4, 4]);
        assert_eq!(top.coefficient_of(&[4, 4, 4]), FieldElem::ONE);
        assert_eq!(MultiPoly::zero(&f5, 3).coefficient_of(&[1, 0, 0]), FieldElem::ZERO);
    }

    #[test]
    fn compose_swap_and_identity() {
        let f3 = build_field(3, 1, None).unwrap();
        let id = PolySystem::identity(&f3, 2);
        assert_eq!(id.compose_linear(&Matrix::identity(2)).unwrap(), id);
        let swapped = id.compose_linear(&Matrix::swap2()).unwrap();
        let expect = PolySystem::new(vec![MultiPoly::var(&f3, 2, 1), MultiPoly::var(&f3, 2, 0)]).unwrap();
        assert_eq!(swapped, expect);
    }

    #[test]
    fn json_roundtrip() {
        let f9 = build_field(3, 2, None).unwrap();
        let p = MultiPoly::from_terms(&f9, 2, [(f9.elem(7).unwrap(), vec![1, 2]), (FieldElem::ONE, vec![0, 0])])
            .unwrap();
        let v = p.to_json();
        assert_eq!(v.to_string(), r#"[["0x1",[0,0]],["0x7",[1,2]]]"#);
        assert_eq!(MultiPoly::from_json(&f9, 2, &v).unwrap(), p);
    }
}
