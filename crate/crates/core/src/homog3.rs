//! 3-homogeneous bivariate systems `(x Q1, y Q2)` and their rational
//! functions on the projective line.
//!
//! A system `(f1, f2)` with `f1 = a1 x^3 + a2 x^2 y + a3 x y^2` and
//! `f2 = b2 x^2 y + b3 x y^2 + b4 y^3` permutes F_q^2 exactly when cubing is
//! bijective on F_q, `a1 b4 != 0`, neither `Q1(1, t)` nor `Q2(s, 1)` has a
//! root in F_q, and `f1(1, t) / f2(1, t)` permutes `P^1(F_q)`.
//! [`irreducibility_criterion`] keeps the stronger "both quadratic forms irreducible"
//! wording for comparison; it wrongly rejects `(a1 x^3, b4 y^3)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::gf::{Field, FieldElem};
use crate::mpoly::{MultiPoly, PolySystem};
use crate::permoracle::{brute_force, OracleError};

/// Largest field for which [`decompose_char3`] enumerates PGL(2, q).
pub const CHAR3_MAX_Q: u32 = 27;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Homog3Error {
    #[error("denominator b2 t + b3 t^2 + b4 t^3 is identically zero")]
    ZeroDenominator,
    #[error("rational map with zero numerator and denominator")]
    ZeroMap,
    #[error("quadratic form is identically zero")]
    ZeroForm,
    #[error("q = {0} is not 2 mod 3")]
    WrongResidueClass(u32),
    #[error("characteristic {0} is not 3")]
    WrongCharacteristic(u32),
    #[error("map is not of the form (c0 + c1 t + c2 t^2) / (t (e0 + e1 t + t^2)) with c0 != 0")]
    ShapeViolation,
    #[error("rational map has degree {0}, expected 3")]
    WrongDegree(usize),
    #[error("PGL(2, {q}) enumeration exceeds the cap q <= {cap}")]
    BudgetExceeded { q: u32, cap: u32 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Univariate polynomial, coefficients from the constant term up, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UniPoly(Vec<FieldElem>);

impl UniPoly {
    pub fn new(mut c: Vec<FieldElem>) -> Self {
        while c.last().is_some_and(|e| e.is_zero()) {
            c.pop();
        }
        UniPoly(c)
    }

    pub fn zero() -> Self {
        UniPoly(Vec::new())
    }

    pub fn constant(c: FieldElem) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.0
    }

    pub fn coeff(&self, i: usize) -> FieldElem {
        self.0.get(i).copied().unwrap_or(FieldElem::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn lead(&self) -> FieldElem {
        self.0.last().copied().unwrap_or(FieldElem::ZERO)
    }

    pub fn eval(&self, f: &Field, t: FieldElem) -> FieldElem {
        self.0.iter().rev().fold(FieldElem::ZERO, |acc, &c| f.add(f.mul(acc, t), c))
    }

    pub fn scale(&self, f: &Field, k: FieldElem) -> Self {
        Self::new(self.0.iter().map(|&c| f.mul(c, k)).collect())
    }

    pub fn add(&self, f: &Field, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self::new((0..n).map(|i| f.add(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn sub(&self, f: &Field, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self::new((0..n).map(|i| f.sub(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn mul(&self, f: &Field, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![FieldElem::ZERO; self.0.len() + o.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in o.0.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(a, b));
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, f: &Field, e: u32) -> Self {
        (0..e).fold(Self::constant(FieldElem::ONE), |acc, _| acc.mul(f, self))
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn divrem(&self, f: &Field, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let inv = f.inv(d.lead()).expect("nonzero leading coefficient");
        let mut r = self.0.clone();
        let mut quo = vec![FieldElem::ZERO; r.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let c = f.mul(*r.last().expect("nonempty"), inv);
            quo[k] = c;
            for (i, &dc) in d.0.iter().enumerate() {
                r[k + i] = f.sub(r[k + i], f.mul(c, dc));
            }
            r.pop();
            while r.last().is_some_and(|e| e.is_zero()) {
                r.pop();
            }
        }
        (Self::new(quo), Self::new(r))
    }

    pub fn monic(&self, f: &Field) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(f, f.inv(self.lead()).expect("nonzero"))
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, f: &Field, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(f, &b).1;
            a = b;
            b = r;
        }
        a.monic(f)
    }

    pub fn has_root(&self, f: &Field) -> bool {
        f.elements().any(|t| self.eval(f, t).is_zero())
    }
}

/// A point of `P^1(F_q)`. Enumeration order: finite points by index, then infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProjPoint {
    Finite(FieldElem),
    Infinity,
}

impl ProjPoint {
    pub fn all(f: &Field) -> impl Iterator<Item = ProjPoint> + '_ {
        f.elements().map(ProjPoint::Finite).chain(std::iter::once(ProjPoint::Infinity))
    }

    /// Dense index: element index for finite points, `q` for infinity.
    pub fn index(&self, q: u32) -> usize {
        match self {
            ProjPoint::Finite(e) => e.index() as usize,
            ProjPoint::Infinity => q as usize,
        }
    }

    /// Homogeneous coordinates `(t : 1)` or `(1 : 0)`.
    fn homog(&self) -> [FieldElem; 2] {
        match *self {
            ProjPoint::Finite(t) => [t, FieldElem::ONE],
            ProjPoint::Infinity => [FieldElem::ONE, FieldElem::ZERO],
        }
    }

    fn from_homog(f: &Field, h: [FieldElem; 2]) -> Self {
        if h[1].is_zero() {
            ProjPoint::Infinity
        } else {
            ProjPoint::Finite(f.div(h[0], h[1]).expect("nonzero"))
        }
    }

    pub fn format(&self, f: &Field) -> String {
        match self {
            ProjPoint::Finite(e) => f.format_elem(*e),
            ProjPoint::Infinity => "inf".to_string(),
        }
    }
}

/// `num / den`, coprime, with `den` monic (or `num` monic when `den = 0`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalMap {
    num: UniPoly,
    den: UniPoly,
}

impl RationalMap {
    pub fn new(f: &Field, num: UniPoly, den: UniPoly) -> Result<Self, Homog3Error> {
        if num.is_zero() && den.is_zero() {
            return Err(Homog3Error::ZeroMap);
        }
        let g = num.gcd(f, &den);
        let (mut num, mut den) = (num.divrem(f, &g).0, den.divrem(f, &g).0);
        let lead = if den.is_zero() { num.lead() } else { den.lead() };
        let inv = f.inv(lead).expect("nonzero");
        num = num.scale(f, inv);
        den = den.scale(f, inv);
        Ok(RationalMap { num, den })
    }

    pub fn num(&self) -> &UniPoly {
        &self.num
    }

    pub fn den(&self) -> &UniPoly {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0))
    }

    pub fn format(&self, f: &Field) -> String {
        let show = |p: &UniPoly| {
            if p.is_zero() {
                return "0".to_string();
            }
            let terms: Vec<String> = p
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, &c)| match i {
                    0 => f.format_elem(c),
                    1 => format!("{}*t", f.format_elem(c)),
                    _ => format!("{}*t^{i}", f.format_elem(c)),
                })
                .collect();
            terms.join(" + ")
        };
        format!("({}) / ({})", show(&self.num), show(&self.den))
    }
}

/// Evaluates a reduced map; at infinity the degrees decide.
pub fn rat_eval(f: &Field, r: &RationalMap, t: ProjPoint) -> ProjPoint {
    match t {
        ProjPoint::Finite(t) => {
            let d = r.den.eval(f, t);
            if d.is_zero() {
                ProjPoint::Infinity
            } else {
                ProjPoint::Finite(f.div(r.num.eval(f, t), d).expect("nonzero"))
            }
        }
        ProjPoint::Infinity => {
            let dn = r.num.degree().map_or(-1, |d| d as i64);
            let dd = r.den.degree().map_or(-1, |d| d as i64);
            if dn < dd {
                ProjPoint::Finite(FieldElem::ZERO)
            } else if dn > dd {
                ProjPoint::Infinity
            } else {
                ProjPoint::Finite(f.div(r.num.lead(), r.den.lead()).expect("nonzero"))
            }
        }
    }
}

/// Whether `r` is a bijection of the `q + 1` points of `P^1(F_q)`.
pub fn rat_is_perm(f: &Field, r: &RationalMap) -> bool {
    rat_collision(f, r).is_none()
}

/// First pair of points (in enumeration order of the second) with equal image.
pub fn rat_collision(f: &Field, r: &RationalMap) -> Option<(ProjPoint, ProjPoint)> {
    let q = f.q();
    let mut seen: Vec<Option<ProjPoint>> = vec![None; q as usize + 1];
    for t in ProjPoint::all(f) {
        let i = rat_eval(f, r, t).index(q);
        if let Some(prev) = seen[i] {
            return Some((prev, t));
        }
        seen[i] = Some(t);
    }
    None
}

/// Whether `a x^2 + b xy + c y^2` has no zero on `F_q^2 \ {(0, 0)}`.
pub fn quad_form_irreducible(f: &Field, a: FieldElem, b: FieldElem, c: FieldElem) -> Result<bool, Homog3Error> {
    if a.is_zero() && b.is_zero() && c.is_zero() {
        return Err(Homog3Error::ZeroForm);
    }
    if a.is_zero() || c.is_zero() {
        return Ok(false);
    }
    if f.p() == 2 {
        if b.is_zero() {
            return Ok(false);
        }
        let k = f.div(f.mul(a, c), f.mul(b, b)).expect("b != 0");
        return Ok(!f.elements().any(|y| f.add(f.add(f.mul(y, y), y), k).is_zero()));
    }
    let disc = f.sub(f.mul(b, b), f.mul(f.from_int(4), f.mul(a, c)));
    Ok(!f.is_square(disc))
}

/// Coefficients of `f1 = x Q1`, `f2 = y Q2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct HomogSystem {
    pub a1: FieldElem,
    pub a2: FieldElem,
    pub a3: FieldElem,
    pub b2: FieldElem,
    pub b3: FieldElem,
    pub b4: FieldElem,
}

impl HomogSystem {
    pub fn from_slice(c: &[FieldElem]) -> Option<Self> {
        match *c {
            [a1, a2, a3, b2, b3, b4] => Some(HomogSystem { a1, a2, a3, b2, b3, b4 }),
            _ => None,
        }
    }

    /// The tuple with index `k` in base-q order, `a1` least significant.
    pub fn from_rank(f: &Field, mut k: u64) -> Self {
        let q = f.q() as u64;
        let mut c = [FieldElem::ZERO; 6];
        for slot in &mut c {
            *slot = f.elem((k % q) as u32).expect("digit below q");
            k /= q;
        }
        Self::from_slice(&c).expect("six entries")
    }

    pub fn to_vec(&self) -> Vec<FieldElem> {
        vec![self.a1, self.a2, self.a3, self.b2, self.b3, self.b4]
    }

    /// `[a, b, c]` of `Q1 = a x^2 + b xy + c y^2`.
    pub fn q1(&self) -> [FieldElem; 3] {
        [self.a1, self.a2, self.a3]
    }

    pub fn q2(&self) -> [FieldElem; 3] {
        [self.b2, self.b3, self.b4]
    }

    /// Exponents are kept as written; reducing would break homogeneity over F_2.
    pub fn to_system(&self, field: &Arc<Field>) -> PolySystem {
        let f1 = MultiPoly::from_terms(field, 2, [(self.a1, vec![3, 0]), (self.a2, vec![2, 1]), (self.a3, vec![1, 2])]);
        let f2 = MultiPoly::from_terms(field, 2, [(self.b2, vec![2, 1]), (self.b3, vec![1, 2]), (self.b4, vec![0, 3])]);
        PolySystem::new(vec![f1.expect("arity"), f2.expect("arity")]).expect("square")
    }

    fn eval(&self, f: &Field, x: FieldElem, y: FieldElem) -> [FieldElem; 2] {
        let q = |c: [FieldElem; 3]| {
            f.add(f.add(f.mul(c[0], f.mul(x, x)), f.mul(c[1], f.mul(x, y))), f.mul(c[2], f.mul(y, y)))
        };
        [f.mul(x, q(self.q1())), f.mul(y, q(self.q2()))]
    }
}

/// `(a1 + a2 t + a3 t^2) / (b2 t + b3 t^2 + b4 t^3)`, gcd-reduced.
pub fn to_rational(f: &Field, s: &HomogSystem) -> Result<RationalMap, Homog3Error> {
    let den = UniPoly::new(vec![FieldElem::ZERO, s.b2, s.b3, s.b4]);
    if den.is_zero() {
        return Err(Homog3Error::ZeroDenominator);
    }
    RationalMap::new(f, UniPoly::new(vec![s.a1, s.a2, s.a3]), den)
}

/// `t -> (a t + b) / (c t + d)`, scaled so the first nonzero entry is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MobiusMap {
    pub a: FieldElem,
    pub b: FieldElem,
    pub c: FieldElem,
    pub d: FieldElem,
}

impl MobiusMap {
    pub fn identity() -> Self {
        MobiusMap { a: FieldElem::ONE, b: FieldElem::ZERO, c: FieldElem::ZERO, d: FieldElem::ONE }
    }

    /// `None` when singular.
    pub fn new(f: &Field, a: FieldElem, b: FieldElem, c: FieldElem, d: FieldElem) -> Option<Self> {
        if f.sub(f.mul(a, d), f.mul(b, c)).is_zero() {
            return None;
        }
        let lead = [a, b, c, d].into_iter().find(|e| !e.is_zero()).expect("nonsingular");
        let k = f.inv(lead).expect("nonzero");
        Some(MobiusMap { a: f.mul(a, k), b: f.mul(b, k), c: f.mul(c, k), d: f.mul(d, k) })
    }

    pub fn apply(&self, f: &Field, t: ProjPoint) -> ProjPoint {
        let [p0, p1] = t.homog();
        ProjPoint::from_homog(
            f,
            [f.add(f.mul(self.a, p0), f.mul(self.b, p1)), f.add(f.mul(self.c, p0), f.mul(self.d, p1))],
        )
    }

    /// `self . other`.
    pub fn compose(&self, f: &Field, o: &MobiusMap) -> MobiusMap {
        let m = |x: FieldElem, y: FieldElem, z: FieldElem, w: FieldElem| f.add(f.mul(x, y), f.mul(z, w));
        MobiusMap::new(
            f,
            m(self.a, o.a, self.b, o.c),
            m(self.a, o.b, self.b, o.d),
            m(self.c, o.a, self.d, o.c),
            m(self.c, o.b, self.d, o.d),
        )
        .expect("product of nonsingular maps")
    }

    pub fn inverse(&self, f: &Field) -> MobiusMap {
        MobiusMap::new(f, self.d, f.neg(self.b), f.neg(self.c), self.a).expect("nonsingular")
    }

    /// The map sending `z1, z2, z3` to `0, 1, infinity`; `None` unless the points are distinct.
    pub fn to_zero_one_inf(f: &Field, z: [ProjPoint; 3]) -> Option<MobiusMap> {
        let [z1, z2, z3] = z.map(|p| p.homog());
        // l_z(P) = det(P, z) vanishes exactly at z.
        let l = |z: [FieldElem; 2], p: [FieldElem; 2]| f.sub(f.mul(p[0], z[1]), f.mul(p[1], z[0]));
        let k1 = l(z3, z2);
        let k3 = l(z1, z2);
        MobiusMap::new(
            f,
            f.mul(k1, z1[1]),
            f.neg(f.mul(k1, z1[0])),
            f.mul(k3, z3[1]),
            f.neg(f.mul(k3, z3[0])),
        )
    }

    /// All of PGL(2, q): the identity first, then normalized `(a, b, c, d)` in index order.
    pub fn all(f: &Field) -> Vec<MobiusMap> {
        let mut out = vec![MobiusMap::identity()];
        let els: Vec<FieldElem> = f.elements().collect();
        for &a in &els {
            for &b in &els {
                for &c in &els {
                    for &d in &els {
                        let first = [a, b, c, d].into_iter().find(|e| !e.is_zero());
                        if first != Some(FieldElem::ONE) {
                            continue;
                        }
                        if let Some(m) = MobiusMap::new(f, a, b, c, d) {
                            if m != MobiusMap::identity() {
                                out.push(m);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn format(&self, f: &Field) -> [String; 4] {
        [self.a, self.b, self.c, self.d].map(|e| f.format_elem(e))
    }
}

fn drs_map(f: &Field, d: FieldElem, r: FieldElem, s: FieldElem) -> Option<RationalMap> {
    let lin = |c: FieldElem| UniPoly::new(vec![f.neg(c), FieldElem::ONE]);
    let (tr3, ts3) = (lin(r).pow(f, 3), lin(s).pow(f, 3));
    let num = tr3.sub(f, &ts3);
    let cube = |e: FieldElem| f.pow(e, 3);
    let den = ts3.scale(f, cube(r)).sub(f, &tr3.scale(f, cube(s))).scale(f, d);
    RationalMap::new(f, num, den).ok()
}

/// Every map `(1/d) ((t-r)^3 - (t-s)^3) / (r^3 (t-s)^3 - s^3 (t-r)^3)`, keyed by
/// normal form, with the smallest `(d, r, s)` producing it.
#[derive(Clone, Debug)]
pub struct DrsTable {
    map: HashMap<RationalMap, (FieldElem, FieldElem, FieldElem)>,
}

impl DrsTable {
    pub fn new(f: &Field) -> Result<Self, Homog3Error> {
        if f.q() % 3 != 2 {
            return Err(Homog3Error::WrongResidueClass(f.q()));
        }
        let mut map = HashMap::new();
        for d in f.nonzero() {
            for r in f.elements() {
                for s in f.elements().filter(|&s| s != r) {
                    if let Some(m) = drs_map(f, d, r, s) {
                        map.entry(m).or_insert((d, r, s));
                    }
                }
            }
        }
        Ok(DrsTable { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, r: &RationalMap) -> Option<(FieldElem, FieldElem, FieldElem)> {
        self.map.get(r).copied()
    }

    pub fn maps(&self) -> impl Iterator<Item = (&RationalMap, &(FieldElem, FieldElem, FieldElem))> {
        self.map.iter()
    }
}

/// Normalized maps `(c0 + c1 t + c2 t^2) / (t (e0 + e1 t + t^2))` with `c0 != 0`, coprime.
pub fn is_drs_shape(r: &RationalMap) -> bool {
    r.den.degree() == Some(3)
        && r.den.coeff(0).is_zero()
        && r.num.degree().is_some_and(|d| d <= 2)
        && !r.num.coeff(0).is_zero()
}

/// Smallest `(d, r, s)` with `R` equal to the parametrized map, if any.
pub fn drs_witness(f: &Field, r: &RationalMap) -> Result<Option<(FieldElem, FieldElem, FieldElem)>, Homog3Error> {
    if f.q() % 3 != 2 {
        return Err(Homog3Error::WrongResidueClass(f.q()));
    }
    if !is_drs_shape(r) {
        return Err(Homog3Error::ShapeViolation);
    }
    Ok(DrsTable::new(f)?.get(r))
}

/// The shape-conforming maps of degree 3 that permute `P^1(F_q)`, by exhaustive scan.
pub fn shape_permutations(f: &Field, exec: crate::par::Exec) -> Vec<RationalMap> {
    let q = f.q() as u64;
    let total = (q - 1) * q.pow(4);
    let found = crate::par::map_range(exec, total, |k| {
        let c0 = f.elem((k % (q - 1)) as u32 + 1).expect("nonzero digit");
        let rest = k / (q - 1);
        let pick = |i: u32| f.elem(((rest / q.pow(i)) % q) as u32).expect("digit");
        let num = UniPoly::new(vec![c0, pick(0), pick(1)]);
        let den = UniPoly::new(vec![FieldElem::ZERO, pick(2), pick(3), FieldElem::ONE]);
        let m = RationalMap::new(f, num.clone(), den.clone()).ok()?;
        (m.num == num && m.den == den && rat_is_perm(f, &m)).then_some(m)
    });
    found.into_iter().flatten().collect()
}

/// Discriminants of the numerator quadratic and of the denominator divided by `t`.
pub fn drs_discriminants(f: &Field, r: FieldElem, s: FieldElem) -> (FieldElem, FieldElem) {
    let lin = |c: FieldElem| UniPoly::new(vec![f.neg(c), FieldElem::ONE]);
    let (tr3, ts3) = (lin(r).pow(f, 3), lin(s).pow(f, 3));
    let num = tr3.sub(f, &ts3);
    let den = ts3.scale(f, f.pow(r, 3)).sub(f, &tr3.scale(f, f.pow(s, 3)));
    let disc = |c: FieldElem, b: FieldElem, a: FieldElem| f.sub(f.mul(b, b), f.mul(f.from_int(4), f.mul(a, c)));
    (
        disc(num.coeff(0), num.coeff(1), num.coeff(2)),
        disc(den.coeff(1), den.coeff(2), den.coeff(3)),
    )
}

/// `mu . (t^3 - gamma t) . nu = R` over a field of characteristic 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Char3Decomposition {
    pub mu: MobiusMap,
    pub gamma: FieldElem,
    pub nu: MobiusMap,
}

/// Searches `gamma` in `{0} + nonresidues` (outer) and `nu` in PGL(2, q) (inner).
pub fn decompose_char3(f: &Field, r: &RationalMap) -> Result<Option<Char3Decomposition>, Homog3Error> {
    if f.p() != 3 {
        return Err(Homog3Error::WrongCharacteristic(f.p()));
    }
    if f.q() > CHAR3_MAX_Q {
        return Err(Homog3Error::BudgetExceeded { q: f.q(), cap: CHAR3_MAX_Q });
    }
    if r.degree() != 3 {
        return Err(Homog3Error::WrongDegree(r.degree()));
    }
    let pts: Vec<ProjPoint> = ProjPoint::all(f).collect();
    let target: Vec<ProjPoint> = pts.iter().map(|&t| rat_eval(f, r, t)).collect();
    let gammas = std::iter::once(FieldElem::ZERO).chain(f.nonzero().filter(|&g| !f.is_square(g)));
    let pgl = MobiusMap::all(f);
    for gamma in gammas {
        let h = |t: ProjPoint| match t {
            ProjPoint::Finite(t) => ProjPoint::Finite(f.sub(f.pow(t, 3), f.mul(gamma, t))),
            ProjPoint::Infinity => ProjPoint::Infinity,
        };
        for nu in &pgl {
            let g: Vec<ProjPoint> = pts.iter().map(|&t| h(nu.apply(f, t))).collect();
            // Three points with distinct g-images determine mu.
            let mut idx = Vec::with_capacity(3);
            for i in 0..pts.len() {
                if idx.iter().all(|&j: &usize| g[j] != g[i]) {
                    idx.push(i);
                    if idx.len() == 3 {
                        break;
                    }
                }
            }
            if idx.len() < 3 {
                continue;
            }
            let (Some(tg), Some(tr)) = (
                MobiusMap::to_zero_one_inf(f, [g[idx[0]], g[idx[1]], g[idx[2]]]),
                MobiusMap::to_zero_one_inf(f, [target[idx[0]], target[idx[1]], target[idx[2]]]),
            ) else {
                continue;
            };
            let mu = tr.inverse(f).compose(f, &tg);
            if g.iter().zip(&target).all(|(&gv, &tv)| mu.apply(f, gv) == tv) {
                return Ok(Some(Char3Decomposition { mu, gamma, nu: *nu }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NotPermReason {
    /// `q = 1 mod 3`, so `(x, 0) -> (a1 x^3, 0)` is not injective.
    CubingNotBijective,
    /// `a1 b4 = 0`.
    DegenerateLeading,
    /// `Q1(1, t) = 0`.
    Q1Root(FieldElem),
    /// `Q2(s, 1) = 0`.
    Q2Root(FieldElem),
    /// The rational function repeats a value on these two points.
    RationalNotPermutation(ProjPoint, ProjPoint),
}

impl fmt::Display for NotPermReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NotPermReason::CubingNotBijective => "cubing_not_bijective",
            NotPermReason::DegenerateLeading => "degenerate_leading",
            NotPermReason::Q1Root(_) => "q1_root",
            NotPermReason::Q2Root(_) => "q2_root",
            NotPermReason::RationalNotPermutation(..) => "rational_not_permutation",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HomogCase {
    /// `Q1 = k Q2`; the rational function has degree 1.
    Proportional { k: FieldElem },
    /// Coprime forms and a degree-3 rational permutation.
    RationalPermutation,
    NotPermutation(NotPermReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    Drs { d: FieldElem, r: FieldElem, s: FieldElem },
    Char3(Char3Decomposition),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassVerdict {
    pub is_perm: bool,
    pub case: HomogCase,
    pub rational: Option<RationalMap>,
    pub certificate: Option<Certificate>,
    /// Two points of F_q^2 with the same image, when one is known without search.
    pub collision: Option<([FieldElem; 2], [FieldElem; 2])>,
}

impl ClassVerdict {
    fn no(case: NotPermReason, collision: Option<([FieldElem; 2], [FieldElem; 2])>) -> Self {
        ClassVerdict {
            is_perm: false,
            case: HomogCase::NotPermutation(case),
            rational: None,
            certificate: None,
            collision,
        }
    }
}

/// Classification with an optional precomputed `(d, r, s)` table for certificates.
pub fn classify_t32_with(f: &Field, s: &HomogSystem, table: Option<&DrsTable>) -> Result<ClassVerdict, Homog3Error> {
    let zero = FieldElem::ZERO;
    let one = FieldElem::ONE;
    if f.q() % 3 == 1 {
        let omega = f.exp(((f.q() - 1) / 3) as u64);
        return Ok(ClassVerdict::no(NotPermReason::CubingNotBijective, Some(([one, zero], [omega, zero]))));
    }
    if s.a1.is_zero() {
        return Ok(ClassVerdict::no(NotPermReason::DegenerateLeading, Some(([zero, zero], [one, zero]))));
    }
    if s.b4.is_zero() {
        return Ok(ClassVerdict::no(NotPermReason::DegenerateLeading, Some(([zero, zero], [zero, one]))));
    }
    let q1t = UniPoly::new(s.q1().to_vec());
    if let Some(t) = f.elements().find(|&t| q1t.eval(f, t).is_zero()) {
        // (1, t) and (0, y) both land on (0, f2(1, t)).
        let v = s.eval(f, one, t)[1];
        let y = f.cbrt(f.div(v, s.b4).expect("b4 != 0")).expect("cubing bijective");
        return Ok(ClassVerdict::no(NotPermReason::Q1Root(t), Some(([zero, y], [one, t]))));
    }
    let q2s = UniPoly::new(s.q2().iter().rev().copied().collect());
    if let Some(sv) = f.elements().find(|&sv| q2s.eval(f, sv).is_zero()) {
        let u = s.eval(f, sv, one)[0];
        let x = f.cbrt(f.div(u, s.a1).expect("a1 != 0")).expect("cubing bijective");
        return Ok(ClassVerdict::no(NotPermReason::Q2Root(sv), Some(([x, zero], [sv, one]))));
    }
    let rat = to_rational(f, s)?;
    let k = f.div(s.a1, s.b2).ok();
    if let Some(k) = k.filter(|&k| (0..3).all(|i| s.q1()[i] == f.mul(k, s.q2()[i]))) {
        return Ok(ClassVerdict {
            is_perm: true,
            case: HomogCase::Proportional { k },
            rational: Some(rat),
            certificate: None,
            collision: None,
        });
    }
    if let Some((t1, t2)) = rat_collision(f, &rat) {
        let mut v = ClassVerdict::no(NotPermReason::RationalNotPermutation(t1, t2), None);
        v.rational = Some(rat);
        return Ok(v);
    }
    let certificate = if f.q() % 3 == 2 && is_drs_shape(&rat) {
        let found = match table {
            Some(t) => t.get(&rat),
            None => DrsTable::new(f)?.get(&rat),
        };
        found.map(|(d, r, s)| Certificate::Drs { d, r, s })
    } else if f.p() == 3 && f.q() <= CHAR3_MAX_Q && rat.degree() == 3 {
        decompose_char3(f, &rat)?.map(Certificate::Char3)
    } else {
        None
    };
    Ok(ClassVerdict { is_perm: true, case: HomogCase::RationalPermutation, rational: Some(rat), certificate, collision: None })
}

pub fn classify_t32(f: &Field, s: &HomogSystem) -> Result<ClassVerdict, Homog3Error> {
    classify_t32_with(f, s, None)
}

/// The classification read word for word: `q != 1 mod 3`, `a1 b4 != 0`, both
/// forms irreducible, and then proportional forms or a permuting rational function.
pub fn irreducibility_criterion(f: &Field, s: &HomogSystem) -> Result<bool, Homog3Error> {
    if f.q() % 3 == 1 || s.a1.is_zero() || s.b4.is_zero() {
        return Ok(false);
    }
    let [a, b, c] = s.q1();
    let [d, e, g] = s.q2();
    if !quad_form_irreducible(f, a, b, c)? || !quad_form_irreducible(f, d, e, g)? {
        return Ok(false);
    }
    let k = f.div(s.a1, s.b2).ok();
    if k.is_some_and(|k| (0..3).all(|i| s.q1()[i] == f.mul(k, s.q2()[i]))) {
        return Ok(true);
    }
    Ok(rat_is_perm(f, &to_rational(f, s)?))
}

fn homogeneous_degree(p: &MultiPoly) -> Option<u32> {
    let mut degs = p.terms().map(|(e, _)| e.iter().sum::<u32>());
    let first = degs.next()?;
    degs.all(|d| d == first).then_some(first)
}

/// `(f1(1, t), f2(1, t))` for bivariate homogeneous polynomials of degree `n`.
fn dehomogenize(p: &MultiPoly, n: u32) -> Vec<FieldElem> {
    let mut c = vec![FieldElem::ZERO; n as usize + 1];
    for (e, v) in p.terms() {
        c[e[1] as usize] = p.field().add(c[e[1] as usize], v);
    }
    c
}

/// For coprime degree-n forms `f1` (no `y^n` term) and `f2`, and a degree-m form
/// `g` vanishing only at the origin, returns whether `(f1 g, f2 g)` permutes
/// F_q^2 (brute force) and whether `f1(1, t) / f2(1, t)` is a degree-n
/// permutation of `P^1(F_q)`. Requires `gcd(m + n, q - 1) = 1`.
pub fn product_perm_equiv(f1: &MultiPoly, f2: &MultiPoly, g: &MultiPoly) -> Result<(bool, bool), Homog3Error> {
    let field = f1.field().clone();
    let f = &*field;
    let bad = |s: &str| Homog3Error::PreconditionViolated(s.to_string());
    if f1.nvars() != 2 || f2.nvars() != 2 || g.nvars() != 2 {
        return Err(bad("polynomials must be bivariate"));
    }
    let n = homogeneous_degree(f1).ok_or_else(|| bad("f1 is not homogeneous"))?;
    if homogeneous_degree(f2) != Some(n) {
        return Err(bad("f2 is not homogeneous of the same degree as f1"));
    }
    let m = homogeneous_degree(g).ok_or_else(|| bad("g is zero or not homogeneous"))?;
    if !f1.coefficient_of(&[0, n]).is_zero() {
        return Err(bad("f1 has a y^n term"));
    }
    let (q, nm) = (f.q() as u64, (m + n) as u64);
    if gcd(nm, q - 1) != 1 {
        return Err(bad("gcd(m + n, q - 1) != 1"));
    }
    if m >= 1 {
        let zero_elsewhere = f.elements().any(|x| {
            f.elements().any(|y| (!x.is_zero() || !y.is_zero()) && g.eval(&[x, y]).expect("arity").is_zero())
        });
        if zero_elsewhere {
            return Err(bad("g has a zero other than (0, 0)"));
        }
    }
    let num = UniPoly::new(dehomogenize(f1, n));
    let den = UniPoly::new(dehomogenize(f2, n));
    // f1 is divisible by x, so coprimality needs the y^n term of f2 and coprime dehomogenizations.
    if f2.coefficient_of(&[0, n]).is_zero() || num.gcd(f, &den).degree() != Some(0) {
        return Err(bad("f1 and f2 are not coprime"));
    }
    let rat = RationalMap::new(f, num, den)?;
    let rational = rat.degree() == n as usize && rat_is_perm(f, &rat);
    let sys = PolySystem::new(vec![
        f1.mul_unreduced(g).map_err(|e| bad(&e.to_string()))?,
        f2.mul_unreduced(g).map_err(|e| bad(&e.to_string()))?,
    ])
    .map_err(|e| bad(&e.to_string()))?;
    Ok((brute_force(&sys)?.is_perm, rational))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_field;

    fn e(f: &Field, i: u32) -> FieldElem {
        f.elem(i).unwrap()
    }

    fn up(f: &Field, c: &[u32]) -> UniPoly {
        UniPoly::new(c.iter().map(|&i| e(f, i)).collect())
    }

    #[test]
    fn unipoly_gcd() {
        let f = build_field(5, 1, None).unwrap();
        // (t - 1)(t - 2) and (t - 1)(t + 1)
        let a = up(&f, &[2, 2, 1]);
        let b = up(&f, &[4, 0, 1]);
        assert_eq!(a.gcd(&f, &b), up(&f, &[4, 1]));
        let (quo, rem) = a.divrem(&f, &up(&f, &[4, 1]));
        assert!(rem.is_zero());
        assert_eq!(quo, up(&f, &[3, 1]));
    }

    #[test]
    fn rational_examples() {
        let f5 = build_field(5, 1, None).unwrap();
        let cube = RationalMap::new(&f5, up(&f5, &[0, 0, 0, 1]), up(&f5, &[1])).unwrap();
        assert_eq!(rat_eval(&f5, &cube, ProjPoint::Infinity), ProjPoint::Infinity);
        assert!(rat_is_perm(&f5, &cube));
        let f7 = build_field(7, 1, None).unwrap();
        let cube7 = RationalMap::new(&f7, up(&f7, &[0, 0, 0, 1]), up(&f7, &[1])).unwrap();
        assert!(!rat_is_perm(&f7, &cube7));
        let inv = RationalMap::new(&f5, up(&f5, &[1]), up(&f5, &[0, 1])).unwrap();
        assert_eq!(rat_eval(&f5, &inv, ProjPoint::Finite(FieldElem::ZERO)), ProjPoint::Infinity);
        let s = HomogSystem::from_slice(&[1, 0, 0, 0, 0, 1].map(|i| e(&f5, i))).unwrap();
        let r = to_rational(&f5, &s).unwrap();
        assert_eq!(r.num(), &up(&f5, &[1]));
        assert_eq!(r.den(), &up(&f5, &[0, 0, 0, 1]));
        assert_eq!(rat_eval(&f5, &r, ProjPoint::Infinity), ProjPoint::Finite(FieldElem::ZERO));
    }

    #[test]
    fn quad_forms() {
        let f3 = build_field(3, 1, None).unwrap();
        let f5 = build_field(5, 1, None).unwrap();
        let f2 = build_field(2, 1, None).unwrap();
        let one = FieldElem::ONE;
        assert!(quad_form_irreducible(&f3, one, FieldElem::ZERO, one).unwrap());
        assert!(!quad_form_irreducible(&f5, one, FieldElem::ZERO, one).unwrap());
        assert!(quad_form_irreducible(&f2, one, one, one).unwrap());
        assert_eq!(quad_form_irreducible(&f2, FieldElem::ZERO, FieldElem::ZERO, FieldElem::ZERO), Err(Homog3Error::ZeroForm));
        for f in [&f2, &f3, &f5, &build_field(2, 3, None).unwrap(), &build_field(3, 2, None).unwrap()] {
            for a in f.elements() {
                for b in f.elements() {
                    for c in f.elements() {
                        if a.is_zero() && b.is_zero() && c.is_zero() {
                            continue;
                        }
                        let exhaustive = f.elements().all(|x| {
                            f.elements().all(|y| {
                                (x.is_zero() && y.is_zero())
                                    || !f.add(f.add(f.mul(a, f.mul(x, x)), f.mul(b, f.mul(x, y))), f.mul(c, f.mul(y, y))).is_zero()
                            })
                        });
                        assert_eq!(quad_form_irreducible(f, a, b, c).unwrap(), exhaustive);
                    }
                }
            }
        }
    }

    #[test]
    fn mobius_three_points() {
        let f = build_field(7, 1, None).unwrap();
        let pts = [ProjPoint::Finite(e(&f, 3)), ProjPoint::Infinity, ProjPoint::Finite(e(&f, 5))];
        let m = MobiusMap::to_zero_one_inf(&f, pts).unwrap();
        assert_eq!(m.apply(&f, pts[0]), ProjPoint::Finite(FieldElem::ZERO));
        assert_eq!(m.apply(&f, pts[1]), ProjPoint::Finite(FieldElem::ONE));
        assert_eq!(m.apply(&f, pts[2]), ProjPoint::Infinity);
        assert_eq!(MobiusMap::all(&f).len(), 7 * 7 * 7 - 7);
        let inv = m.inverse(&f);
        for t in ProjPoint::all(&f) {
            assert_eq!(inv.apply(&f, m.apply(&f, t)), t);
        }
    }

    #[test]
    fn char3_examples() {
        let f3 = build_field(3, 1, None).unwrap();
        let cube = RationalMap::new(&f3, up(&f3, &[0, 0, 0, 1]), up(&f3, &[1])).unwrap();
        let d = decompose_char3(&f3, &cube).unwrap().unwrap();
        assert_eq!((d.mu, d.gamma, d.nu), (MobiusMap::identity(), FieldElem::ZERO, MobiusMap::identity()));
        let bad = RationalMap::new(&f3, up(&f3, &[0, 2, 0, 1]), up(&f3, &[1])).unwrap();
        assert_eq!(decompose_char3(&f3, &bad).unwrap(), None);
        assert!(!rat_is_perm(&f3, &bad));

        let f9 = build_field(3, 2, None).unwrap();
        let g = f9.smallest_nonresidue().unwrap();
        let h = RationalMap::new(&f9, UniPoly::new(vec![FieldElem::ZERO, f9.neg(g), FieldElem::ZERO, FieldElem::ONE]), up(&f9, &[1]))
            .unwrap();
        let d = decompose_char3(&f9, &h).unwrap().unwrap();
        assert_eq!((d.mu, d.gamma, d.nu), (MobiusMap::identity(), g, MobiusMap::identity()));
        assert!(rat_is_perm(&f9, &h));
    }

    #[test]
    fn drs_roundtrip() {
        let f5 = build_field(5, 1, None).unwrap();
        let m = drs_map(&f5, FieldElem::ONE, FieldElem::ONE, FieldElem::ZERO).unwrap();
        assert!(rat_is_perm(&f5, &m));
        let (d, r, s) = drs_witness(&f5, &m).unwrap().unwrap();
        assert_eq!(drs_map(&f5, d, r, s).unwrap(), m);
        // 1/t^3 permutes P^1(F_5) and has the shape, yet no (d, r, s) produces it.
        let recip = RationalMap::new(&f5, up(&f5, &[1]), up(&f5, &[0, 0, 0, 1])).unwrap();
        assert!(rat_is_perm(&f5, &recip));
        assert_eq!(drs_witness(&f5, &recip), Ok(None));
        let cube = RationalMap::new(&f5, up(&f5, &[0, 0, 0, 1]), up(&f5, &[1])).unwrap();
        assert_eq!(drs_witness(&f5, &cube), Err(Homog3Error::ShapeViolation));
        assert_eq!(drs_witness(&build_field(7, 1, None).unwrap(), &cube), Err(Homog3Error::WrongResidueClass(7)));
    }

    #[test]
    fn t32_examples() {
        let f5 = build_field(5, 1, None).unwrap();
        let s = HomogSystem::from_slice(&[1, 0, 2, 1, 0, 2].map(|i| e(&f5, i))).unwrap();
        let v = classify_t32(&f5, &s).unwrap();
        assert_eq!(v.case, HomogCase::Proportional { k: FieldElem::ONE });
        assert!(brute_force(&s.to_system(&f5)).unwrap().is_perm);
        assert!(irreducibility_criterion(&f5, &s).unwrap());

        // Q1 = x^2 + y^2 has the root t = 2.
        let s = HomogSystem::from_slice(&[1, 0, 1, 1, 0, 2].map(|i| e(&f5, i))).unwrap();
        let v = classify_t32(&f5, &s).unwrap();
        assert!(matches!(v.case, HomogCase::NotPermutation(NotPermReason::Q1Root(_))));
        let (p1, p2) = v.collision.unwrap();
        let sys = s.to_system(&f5);
        assert_eq!(sys.eval(&p1).unwrap(), sys.eval(&p2).unwrap());

        let f7 = build_field(7, 1, None).unwrap();
        let s = HomogSystem::from_slice(&[1, 0, 0, 0, 0, 1].map(|i| e(&f7, i))).unwrap();
        let v = classify_t32(&f7, &s).unwrap();
        assert_eq!(v.case, HomogCase::NotPermutation(NotPermReason::CubingNotBijective));
        let (p1, p2) = v.collision.unwrap();
        let sys = s.to_system(&f7);
        assert_eq!(sys.eval(&p1).unwrap(), sys.eval(&p2).unwrap());

        // (x^3, y^3): a permutation the literal reading rejects.
        let s = HomogSystem::from_slice(&[1, 0, 0, 0, 0, 1].map(|i| e(&f5, i))).unwrap();
        assert!(classify_t32(&f5, &s).unwrap().is_perm);
        assert!(!irreducibility_criterion(&f5, &s).unwrap());
    }

    #[test]
    fn product_bridge() {
        let f5 = build_field(5, 1, None).unwrap();
        let p = |s: &str| crate::text::parse_poly(&f5, 2, s).unwrap();
        // n = 3, m = 2, gcd(5, 4) = 1.
        let (a, b) = product_perm_equiv(&p("x^3"), &p("y^3"), &p("x^2 + 2y^2")).unwrap();
        assert!(a && b);
        let (a, b) = product_perm_equiv(&p("x^3 + 2x y^2"), &p("x^2 y + y^3"), &p("x^2 + 2y^2")).unwrap();
        assert_eq!(a, b);
        let (a, b) = product_perm_equiv(&p("x^3"), &p("y^3"), &p("1")).unwrap();
        assert!(a && b);
        let (a, b) = product_perm_equiv(&p("x^3 + x y^2"), &p("y^3"), &p("1")).unwrap();
        assert!(!a && !b);
        assert!(product_perm_equiv(&p("x^3 + 2x y^2"), &p("x^2 y + 2y^3"), &p("1")).is_err());
        assert!(product_perm_equiv(&p("x^3"), &p("y^3"), &p("x^2 + y^2")).is_err());
    }
}
