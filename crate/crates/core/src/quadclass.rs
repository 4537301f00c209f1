//! Bivariate quadratic systems
//! `f1 = a1 x^2 + a2 xy + a3 y^2 + a4 x + a5 y`, `f2 = b1 x^2 + ... + b5 y`:
//! permutation classification and reduction to a canonical representative
//! with a replayable witness.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::equiv::{apply_cs_shift, apply_witness, EquivError, EquivStep, EquivWitness};
use crate::gf::{linearized_is_perm, Field, FieldElem};
use crate::linalg::Matrix;
use crate::mpoly::{MultiPoly, PolySystem};
use crate::permoracle::{brute_force, OracleError, Witness};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("odd-characteristic classifier called over a field of characteristic 2")]
    EvenCharacteristic,
    #[error("even-characteristic classifier called over a field of odd characteristic")]
    OddCharacteristic,
    #[error("input still has a cross term a2 xy")]
    NotNormalized,
    #[error("no case matches but the oracle reports a permutation: {0:?}")]
    Unclassified(QuadCoeffs),
    #[error("witness for case {0} does not replay to its canonical class")]
    WitnessRejected(CaseLabel),
    #[error("case {0} produced a non-permuting linearized polynomial")]
    LinearizedNotPerm(CaseLabel),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
}

/// Coefficients `a = [a1..a5]`, `b = [b1..b5]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct QuadCoeffs {
    pub a: [FieldElem; 5],
    pub b: [FieldElem; 5],
}

impl QuadCoeffs {
    pub fn from_slice(c: &[FieldElem]) -> Option<Self> {
        if c.len() != 10 {
            return None;
        }
        let mut a = [FieldElem::ZERO; 5];
        let mut b = [FieldElem::ZERO; 5];
        a.copy_from_slice(&c[..5]);
        b.copy_from_slice(&c[5..]);
        Some(QuadCoeffs { a, b })
    }

    /// The tuple with index `k` in base-q order, `a1` least significant.
    pub fn from_rank(field: &Field, mut k: u64) -> Self {
        let q = field.q() as u64;
        let mut c = [FieldElem::ZERO; 10];
        for slot in c.iter_mut() {
            *slot = field.elem((k % q) as u32).expect("digit below q");
            k /= q;
        }
        Self::from_slice(&c).expect("ten entries")
    }

    pub fn to_vec(&self) -> Vec<FieldElem> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    pub fn to_system(&self, field: &Arc<Field>) -> PolySystem {
        let poly = |c: &[FieldElem; 5]| {
            let exps = [[2, 0], [1, 1], [0, 2], [1, 0], [0, 1]];
            MultiPoly::from_terms(field, 2, c.iter().zip(exps).map(|(&v, e)| (v, e.to_vec())))
                .expect("two variables")
                .reduce()
        };
        PolySystem::new(vec![poly(&self.a), poly(&self.b)]).expect("square system")
    }

    /// `F(y, x)`.
    pub fn swap_vars(&self) -> Self {
        let s = |c: [FieldElem; 5]| [c[2], c[1], c[0], c[4], c[3]];
        QuadCoeffs { a: s(self.a), b: s(self.b) }
    }

    /// `(f2, f1)`.
    pub fn swap_coords(&self) -> Self {
        QuadCoeffs { a: self.b, b: self.a }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CaseLabel {
    #[serde(rename = "Odd-i")]
    OddI,
    #[serde(rename = "Odd-ii")]
    OddII,
    #[serde(rename = "Odd-iii")]
    OddIII,
    #[serde(rename = "Even-i")]
    EvenI,
    #[serde(rename = "Even-ii")]
    EvenII,
    #[serde(rename = "Even-iii")]
    EvenIII,
    #[serde(rename = "Even-iv")]
    EvenIV,
    #[serde(rename = "Even-v")]
    EvenV,
    #[serde(rename = "Even-vi")]
    EvenVI,
    NotPP,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::OddI => "Odd-i",
            CaseLabel::OddII => "Odd-ii",
            CaseLabel::OddIII => "Odd-iii",
            CaseLabel::EvenI => "Even-i",
            CaseLabel::EvenII => "Even-ii",
            CaseLabel::EvenIII => "Even-iii",
            CaseLabel::EvenIV => "Even-iv",
            CaseLabel::EvenV => "Even-v",
            CaseLabel::EvenVI => "Even-vi",
            CaseLabel::NotPP => "NotPP",
        };
        f.write_str(s)
    }
}

const ODD_CASES: [CaseLabel; 3] = [CaseLabel::OddI, CaseLabel::OddII, CaseLabel::OddIII];
const EVEN_CASES: [CaseLabel; 6] = [
    CaseLabel::EvenI,
    CaseLabel::EvenII,
    CaseLabel::EvenIII,
    CaseLabel::EvenIV,
    CaseLabel::EvenV,
    CaseLabel::EvenVI,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CanonicalClass {
    Identity,
    /// `(x^2, y)`
    FrobX,
    /// `(x, y^2)`
    FrobY,
    /// `(x^2, y^2)`
    FrobBoth,
    /// `(y^2 + x, c1 x^2 + c2 y^2 + c3 x + c4 y)`
    Mixed { c: [FieldElem; 4] },
}

impl CanonicalClass {
    pub fn representative(&self, field: &Arc<Field>) -> PolySystem {
        let one = FieldElem::ONE;
        let mono = |e: [u32; 2]| MultiPoly::monomial(field, one, e.to_vec());
        let polys = match *self {
            CanonicalClass::Identity => vec![mono([1, 0]), mono([0, 1])],
            CanonicalClass::FrobX => vec![mono([2, 0]), mono([0, 1])],
            CanonicalClass::FrobY => vec![mono([1, 0]), mono([0, 2])],
            CanonicalClass::FrobBoth => vec![mono([2, 0]), mono([0, 2])],
            CanonicalClass::Mixed { c } => {
                let f1 = MultiPoly::from_terms(field, 2, [(one, vec![0, 2]), (one, vec![1, 0])]).expect("arity");
                let f2 = MultiPoly::from_terms(
                    field,
                    2,
                    [(c[0], vec![2, 0]), (c[1], vec![0, 2]), (c[2], vec![1, 0]), (c[3], vec![0, 1])],
                )
                .expect("arity");
                vec![f1, f2]
            }
        };
        PolySystem::new(polys.into_iter().map(|p| p.reduce()).collect()).expect("square")
    }

    pub fn label(&self) -> &'static str {
        match self {
            CanonicalClass::Identity => "(x,y)",
            CanonicalClass::FrobX => "(x^2,y)",
            CanonicalClass::FrobY => "(x,y^2)",
            CanonicalClass::FrobBoth => "(x^2,y^2)",
            CanonicalClass::Mixed { .. } => "(y^2+x,c1x^2+c2y^2+c3x+c4y)",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Symmetry {
    pub vars_swapped: bool,
    pub coords_swapped: bool,
}

/// Tried outermost: every case under the identity before any swap.
const SYMMETRIES: [Symmetry; 4] = [
    Symmetry { vars_swapped: false, coords_swapped: false },
    Symmetry { vars_swapped: true, coords_swapped: false },
    Symmetry { vars_swapped: false, coords_swapped: true },
    Symmetry { vars_swapped: true, coords_swapped: true },
];

impl Symmetry {
    fn apply(&self, c: &QuadCoeffs) -> QuadCoeffs {
        let mut out = *c;
        if self.vars_swapped {
            out = out.swap_vars();
        }
        if self.coords_swapped {
            out = out.swap_coords();
        }
        out
    }

    fn steps(&self) -> Vec<EquivStep> {
        let mut s = Vec::new();
        if self.vars_swapped {
            s.push(EquivStep::RightLinear(Matrix::swap2()));
        }
        if self.coords_swapped {
            s.push(EquivStep::LeftLinear(Matrix::swap2()));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadVerdict {
    pub is_perm: bool,
    pub case: CaseLabel,
    pub canonical: Option<CanonicalClass>,
    /// Chain from the classified input to `canonical`'s representative.
    pub witness: EquivWitness,
    pub symmetry: Symmetry,
    /// Oracle collision for non-permutations.
    pub collision: Option<(Vec<FieldElem>, Vec<FieldElem>)>,
    /// Coefficients of `y, y^2, y^4` in `c1 y^4 + (c2 + c3) y^2 + c4 y` for the mixed class.
    pub linearized: Option<[FieldElem; 3]>,
}

/// Removes `a2 xy` by a left-linear step.
pub fn normalize_cross_term(field: &Field, c: &QuadCoeffs) -> (QuadCoeffs, EquivWitness) {
    let mut w = EquivWitness::new();
    let (a2, b2) = (c.a[1], c.b[1]);
    if a2.is_zero() {
        return (*c, w);
    }
    if b2.is_zero() {
        w.push(EquivStep::LeftLinear(Matrix::swap2()));
        return (c.swap_coords(), w);
    }
    let k = field.div(a2, b2).expect("b2 != 0");
    let nk = field.neg(k);
    let m = Matrix::from_rows(vec![vec![FieldElem::ONE, nk], vec![FieldElem::ZERO, FieldElem::ONE]])
        .expect("square");
    w.push(EquivStep::LeftLinear(m));
    let mut a = c.a;
    for i in 0..5 {
        a[i] = field.add(c.a[i], field.mul(nk, c.b[i]));
    }
    (QuadCoeffs { a, b: c.b }, w)
}

struct Ops<'a> {
    f: &'a Arc<Field>,
}

impl Ops<'_> {
    fn z(&self, e: FieldElem) -> bool {
        e.is_zero()
    }
    fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.f.add(a, b)
    }
    fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.f.sub(a, b)
    }
    fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.f.mul(a, b)
    }
    fn div(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.f.div(a, b).expect("nonzero divisor guaranteed by the case")
    }
    fn inv(&self, a: FieldElem) -> FieldElem {
        self.f.inv(a).expect("nonzero guaranteed by the case")
    }
    fn sqrt(&self, a: FieldElem) -> FieldElem {
        self.f.qr_sqrt(a).expect("square roots exist in characteristic 2")
    }
    fn int(&self, n: i64) -> FieldElem {
        self.f.from_int(n)
    }
    fn mat(&self, rows: [[FieldElem; 2]; 2]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).expect("square")
    }
}

fn odd_matches(o: &Ops<'_>, case: CaseLabel, c: &QuadCoeffs) -> bool {
    let [a1, a2, a3, a4, a5] = c.a;
    let [b1, b2, b3, b4, b5] = c.b;
    if !o.z(a2) {
        return false;
    }
    match case {
        CaseLabel::OddI => {
            o.z(a1) && o.z(a3) && o.z(a4) && !o.z(a5) && o.z(b1) && o.z(b2) && !o.z(b4)
        }
        CaseLabel::OddII => {
            o.z(a1)
                && !o.z(a3)
                && !o.z(a4)
                && o.z(b1)
                && o.z(b2)
                && o.z(o.sub(o.mul(a3, b4), o.mul(a4, b3)))
                && !o.z(o.sub(o.mul(a4, b5), o.mul(a5, b4)))
        }
        CaseLabel::OddIII => {
            let t1 = o.add(o.sub(o.mul(o.mul(a5, a5), b1), o.mul(o.mul(a4, a5), b2)), o.mul(b3, o.mul(a4, a4)));
            let t2 = o.sub(o.mul(b2, a5), o.mul(o.int(2), o.mul(a4, b3)));
            o.z(a1)
                && o.z(a3)
                && !o.z(a4)
                && !o.z(a5)
                && o.z(t1)
                && o.z(t2)
                && !o.z(o.sub(o.mul(a4, b5), o.mul(a5, b4)))
        }
        _ => false,
    }
}

/// `[D1, C1, A1]`: coefficients of `y, y^2, y^4` in the linearized polynomial of the `(y^2 + x)` case with `a1 = 0`.
pub fn l1_coeffs(field: &Arc<Field>, c: &QuadCoeffs) -> [FieldElem; 3] {
    l1(&Ops { f: field }, c)
}

/// `[d3, d2, d1]`: the linearized polynomial of the case with `a1, a3 != 0`.
pub fn l2_coeffs(field: &Arc<Field>, c: &QuadCoeffs) -> [FieldElem; 3] {
    l2(&Ops { f: field }, c)
}

fn l1(o: &Ops<'_>, c: &QuadCoeffs) -> [FieldElem; 3] {
    let [_, _, a3, a4, a5] = c.a;
    let [b1, _, b3, b4, b5] = c.b;
    let a4sq = o.mul(a4, a4);
    let big_a = o.div(o.mul(b1, o.mul(a3, a3)), a4sq);
    let big_c = o.add(o.add(b3, o.div(o.mul(b1, o.mul(a5, a5)), a4sq)), o.div(o.mul(b4, a3), a4));
    let big_d = o.add(o.div(o.mul(b4, a5), a4), b5);
    [big_d, big_c, big_a]
}

fn l2(o: &Ops<'_>, c: &QuadCoeffs) -> [FieldElem; 3] {
    let [a1, _, a3, a4, a5] = c.a;
    let [b1, _, b3, b4, b5] = c.b;
    let (r1, r3) = (o.sqrt(a1), o.sqrt(a3));
    let a13 = o.mul(a1, a3);
    let r13 = o.sqrt(a13);
    let d1 = o.div(o.add(o.mul(a1, b3), o.mul(a3, b1)), a13);
    let s = o.add(o.div(a5, r3), o.div(a4, r1));
    let d2 = o.add(
        o.div(o.add(o.mul(b1, o.mul(a5, a5)), o.mul(b3, o.mul(a4, a4))), a13),
        o.mul(s, o.add(o.div(b4, r1), o.div(b5, r3))),
    );
    let d3 = o.mul(s, o.div(o.add(o.mul(a4, b5), o.mul(a5, b4)), r13));
    [d3, d2, d1]
}

fn even_matches(o: &Ops<'_>, case: CaseLabel, c: &QuadCoeffs) -> bool {
    let [a1, a2, a3, a4, a5] = c.a;
    let [b1, b2, b3, b4, b5] = c.b;
    if !o.z(a2) || !o.z(b2) {
        return false;
    }
    let f2_branch = || (o.z(b4) && !o.z(b1)) || (o.z(b1) && !o.z(b4));
    match case {
        CaseLabel::EvenI => o.z(a1) && o.z(a3) && o.z(a4) && !o.z(a5) && f2_branch(),
        CaseLabel::EvenII => {
            let p = o.z(o.add(o.mul(a4, b5), o.mul(a5, b4)));
            let q = o.z(o.add(o.mul(o.mul(a5, a5), b1), o.mul(o.mul(a4, a4), b3)));
            o.z(a1) && o.z(a3) && !o.z(a4) && !o.z(a5) && (p ^ q)
        }
        CaseLabel::EvenIII => o.z(a1) && o.z(a4) && o.z(a5) && !o.z(a3) && f2_branch(),
        CaseLabel::EvenIV => {
            o.z(a1) && !o.z(a3) && !o.z(a4) && linearized_is_perm(o.f, &l1(o, c))
        }
        CaseLabel::EvenV => {
            let p = o.z(o.add(o.mul(a1, b3), o.mul(a3, b1)));
            let q = o.z(o.add(o.mul(o.sqrt(a1), b5), o.mul(o.sqrt(a3), b4)));
            o.z(a4) && o.z(a5) && !o.z(a1) && !o.z(a3) && (p ^ q)
        }
        CaseLabel::EvenVI => {
            !o.z(a1)
                && !o.z(a3)
                && o.mul(o.sqrt(a1), a5) != o.mul(o.sqrt(a3), a4)
                && linearized_is_perm(o.f, &l2(o, c))
        }
        _ => false,
    }
}

/// Builds the steps for one matched case, starting from the symmetrized system.
struct Builder<'a> {
    o: Ops<'a>,
    sys: PolySystem,
    steps: Vec<EquivStep>,
}

impl<'a> Builder<'a> {
    fn new(f: &'a Arc<Field>, c: &QuadCoeffs) -> Self {
        Builder { o: Ops { f }, sys: c.to_system(f), steps: Vec::new() }
    }

    fn step(&mut self, s: EquivStep) -> Result<(), ClassifyError> {
        self.sys = crate::equiv::apply_step(&self.sys, &s)?;
        self.steps.push(s);
        Ok(())
    }

    /// Drops every term of coordinate `coord` that does not involve `keep`.
    fn absorb(&mut self, coord: usize, keep: usize) -> Result<(), ClassifyError> {
        let f = self.o.f;
        let target = &self.sys.polys()[coord];
        let junk = MultiPoly::from_terms(
            f,
            2,
            target.terms().filter(|(e, _)| e[keep] == 0).map(|(e, c)| (c, e.to_vec())),
        )
        .expect("arity");
        if junk.is_zero() {
            return Ok(());
        }
        let mut h = vec![MultiPoly::zero(f, 2), MultiPoly::zero(f, 2)];
        h[coord] = junk.neg();
        let shifted = apply_cs_shift(&self.sys, &h)?;
        self.sys = shifted;
        self.steps.push(EquivStep::CsShift(h));
        Ok(())
    }

    /// Both coordinates are single monomials in distinct variables: scale to
    /// 1 and put the `x` monomial first.
    fn finish(&mut self) -> Result<(), ClassifyError> {
        let o = &self.o;
        let lead = |p: &MultiPoly| -> (usize, FieldElem) {
            let (e, c) = p.terms().next().expect("monomial");
            (if e[0] > 0 { 0 } else { 1 }, c)
        };
        let (v0, c0) = lead(&self.sys.polys()[0]);
        let (_, c1) = lead(&self.sys.polys()[1]);
        let zero = FieldElem::ZERO;
        let m = if v0 == 1 {
            o.mat([[zero, o.inv(c1)], [o.inv(c0), zero]])
        } else {
            o.mat([[o.inv(c0), zero], [zero, o.inv(c1)]])
        };
        if m != Matrix::identity(2) {
            self.step(EquivStep::LeftLinear(m))?;
        }
        Ok(())
    }

    /// `(x, y^2) -> (x^2, y)` by swapping variables and coordinates.
    fn flip(&mut self) -> Result<(), ClassifyError> {
        self.step(EquivStep::RightLinear(Matrix::swap2()))?;
        self.step(EquivStep::LeftLinear(Matrix::swap2()))
    }
}

fn odd_steps(f: &Arc<Field>, case: CaseLabel, c: &QuadCoeffs) -> Result<Vec<EquivStep>, ClassifyError> {
    let mut bld = Builder::new(f, c);
    let o = Ops { f };
    let [_, _, _, a4, a5] = c.a;
    let [_, _, _, b4, b5] = c.b;
    let zero = FieldElem::ZERO;
    let one = FieldElem::ONE;
    match case {
        CaseLabel::OddI => {
            bld.absorb(1, 0)?;
        }
        CaseLabel::OddII => {
            let rho = if !o.z(b4) {
                let d = o.sub(o.mul(a5, b4), o.mul(a4, b5));
                o.mat([[o.div(b4, d), o.neg_div(a4, d)], [zero, o.inv(b4)]])
            } else {
                o.mat([[zero, o.inv(b5)], [o.inv(a4), zero]])
            };
            bld.step(EquivStep::LeftLinear(rho))?;
            bld.absorb(1, 0)?;
        }
        CaseLabel::OddIII => {
            let sigma = o.mat([[one, zero], [o.neg_div(a4, a5), o.inv(a5)]]);
            bld.step(EquivStep::RightLinear(sigma))?;
            bld.absorb(1, 0)?;
        }
        _ => unreachable!("odd case"),
    }
    bld.finish()?;
    Ok(bld.steps)
}

impl Ops<'_> {
    fn neg_div(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.f.neg(self.div(a, b))
    }
}

fn even_steps(
    f: &Arc<Field>,
    case: CaseLabel,
    c: &QuadCoeffs,
) -> Result<(Vec<EquivStep>, CanonicalClass), ClassifyError> {
    let mut bld = Builder::new(f, c);
    let o = Ops { f };
    let [a1, _, a3, a4, a5] = c.a;
    let [b1, _, b3, b4, b5] = c.b;
    let zero = FieldElem::ZERO;
    let one = FieldElem::ONE;
    let class = match case {
        CaseLabel::EvenI if !o.z(b1) => {
            let sigma = o.mat([[zero, o.inv(o.sqrt(b1))], [o.inv(a5), zero]]);
            bld.step(EquivStep::RightLinear(sigma))?;
            bld.absorb(1, 1)?;
            bld.finish()?;
            bld.flip()?;
            CanonicalClass::FrobX
        }
        CaseLabel::EvenI => {
            bld.absorb(1, 0)?;
            bld.finish()?;
            CanonicalClass::Identity
        }
        CaseLabel::EvenII => {
            let sigma = o.mat([[o.inv(a4), o.div(a5, a4)], [zero, one]]);
            bld.step(EquivStep::RightLinear(sigma))?;
            bld.absorb(1, 1)?;
            let p = o.add(b3, o.div(o.mul(b1, o.mul(a5, a5)), o.mul(a4, a4)));
            bld.finish()?;
            if o.z(p) {
                CanonicalClass::Identity
            } else {
                CanonicalClass::FrobY
            }
        }
        CaseLabel::EvenIII if !o.z(b1) => {
            bld.absorb(1, 0)?;
            bld.finish()?;
            CanonicalClass::FrobBoth
        }
        CaseLabel::EvenIII => {
            bld.absorb(1, 0)?;
            bld.finish()?;
            bld.flip()?;
            CanonicalClass::FrobX
        }
        CaseLabel::EvenIV => {
            let r3 = o.sqrt(a3);
            let sigma = o.mat([[o.inv(a4), o.div(a5, o.mul(a4, r3))], [zero, o.inv(r3)]]);
            bld.step(EquivStep::RightLinear(sigma))?;
            let a4sq = o.mul(a4, a4);
            let cc = [
                o.div(b1, a4sq),
                o.add(o.div(o.mul(b1, o.mul(a5, a5)), o.mul(a4sq, a3)), o.div(b3, a3)),
                o.div(b4, a4),
                o.add(o.div(o.mul(a5, b4), o.mul(a4, r3)), o.div(b5, r3)),
            ];
            CanonicalClass::Mixed { c: cc }
        }
        CaseLabel::EvenV => {
            let r1 = o.sqrt(a1);
            let sigma = o.mat([[o.inv(r1), o.sqrt(o.div(a3, a1))], [zero, one]]);
            bld.step(EquivStep::RightLinear(sigma))?;
            bld.absorb(1, 1)?;
            let p = o.add(b3, o.div(o.mul(a3, b1), a1));
            bld.finish()?;
            if o.z(p) {
                CanonicalClass::FrobX
            } else {
                CanonicalClass::FrobBoth
            }
        }
        CaseLabel::EvenVI => {
            let (al, be) = (o.sqrt(a1), o.sqrt(a3));
            let (a, b) = (o.div(a4, al), o.div(a5, be));
            let s = o.add(a, b);
            let (als, bes) = (o.mul(al, s), o.mul(be, s));
            let sigma = o.mat([[o.inv(als), o.div(b, als)], [o.inv(bes), o.div(a, bes)]]);
            bld.step(EquivStep::RightLinear(sigma))?;
            let s2 = o.mul(s, s);
            let cc = [
                o.div(o.add(o.div(b1, a1), o.div(b3, a3)), s2),
                o.div(o.add(o.div(o.mul(b1, o.mul(b, b)), a1), o.div(o.mul(b3, o.mul(a, a)), a3)), s2),
                o.div(o.add(o.div(b4, al), o.div(b5, be)), s),
                o.div(o.add(o.div(o.mul(b4, b), al), o.div(o.mul(b5, a), be)), s),
            ];
            CanonicalClass::Mixed { c: cc }
        }
        _ => unreachable!("even case"),
    };
    Ok((bld.steps, class))
}

fn not_pp(field: &Arc<Field>, c: &QuadCoeffs) -> Result<QuadVerdict, ClassifyError> {
    let v = brute_force(&c.to_system(field))?;
    if v.is_perm {
        return Err(ClassifyError::Unclassified(*c));
    }
    let collision = match v.witness {
        Some(Witness::Collision { first, second }) => Some((first, second)),
        _ => None,
    };
    Ok(QuadVerdict {
        is_perm: false,
        case: CaseLabel::NotPP,
        canonical: None,
        witness: EquivWitness::new(),
        symmetry: Symmetry::default(),
        collision,
        linearized: None,
    })
}

fn perm_verdict(
    field: &Arc<Field>,
    input: &QuadCoeffs,
    case: CaseLabel,
    sym: Symmetry,
    tail: Vec<EquivStep>,
    class: CanonicalClass,
) -> Result<QuadVerdict, ClassifyError> {
    let mut witness = EquivWitness { steps: sym.steps() };
    witness.steps.extend(tail);
    let rep = class.representative(field);
    match apply_witness(&input.to_system(field), &witness) {
        Ok(g) if g.reduce() == rep => {}
        _ => return Err(ClassifyError::WitnessRejected(case)),
    }
    let linearized = match class {
        CanonicalClass::Mixed { c } => {
            let l = [c[3], field.add(c[1], c[2]), c[0]];
            if !linearized_is_perm(field, &l) {
                return Err(ClassifyError::LinearizedNotPerm(case));
            }
            Some(l)
        }
        _ => None,
    };
    Ok(QuadVerdict {
        is_perm: true,
        case,
        canonical: Some(class),
        witness,
        symmetry: sym,
        collision: None,
        linearized,
    })
}

/// Odd characteristic, `a2 = 0`.
pub fn classify_odd(field: &Arc<Field>, c: &QuadCoeffs) -> Result<QuadVerdict, ClassifyError> {
    if field.p() == 2 {
        return Err(ClassifyError::EvenCharacteristic);
    }
    if !c.a[1].is_zero() {
        return Err(ClassifyError::NotNormalized);
    }
    let o = Ops { f: field };
    for sym in SYMMETRIES {
        let cs = sym.apply(c);
        for case in ODD_CASES {
            if odd_matches(&o, case, &cs) {
                let tail = odd_steps(field, case, &cs)?;
                return perm_verdict(field, c, case, sym, tail, CanonicalClass::Identity);
            }
        }
    }
    not_pp(field, c)
}

/// Characteristic 2, `a2 = 0`.
pub fn classify_even(field: &Arc<Field>, c: &QuadCoeffs) -> Result<QuadVerdict, ClassifyError> {
    if field.p() != 2 {
        return Err(ClassifyError::OddCharacteristic);
    }
    if !c.a[1].is_zero() {
        return Err(ClassifyError::NotNormalized);
    }
    let o = Ops { f: field };
    for sym in SYMMETRIES {
        let cs = sym.apply(c);
        for case in EVEN_CASES {
            if even_matches(&o, case, &cs) {
                let (tail, class) = even_steps(field, case, &cs)?;
                return perm_verdict(field, c, case, sym, tail, class);
            }
        }
    }
    not_pp(field, c)
}

/// Normalize, classify, and return a witness from `c` itself to the canonical representative.
pub fn canonical_form(field: &Arc<Field>, c: &QuadCoeffs) -> Result<QuadVerdict, ClassifyError> {
    let (norm, mut w) = normalize_cross_term(field, c);
    let mut v = if field.p() == 2 { classify_even(field, &norm)? } else { classify_odd(field, &norm)? };
    if v.is_perm {
        w.extend(std::mem::take(&mut v.witness));
        v.witness = w;
        let rep = v.canonical.expect("permutation has a class").representative(field);
        if !crate::equiv::verify_witness(&c.to_system(field), &rep, &v.witness) {
            return Err(ClassifyError::WitnessRejected(v.case));
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_field;

    fn coeffs(field: &Field, v: [i64; 10]) -> QuadCoeffs {
        QuadCoeffs::from_slice(&v.iter().map(|&x| field.elem(x as u32).unwrap()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn odd_examples() {
        let f3 = build_field(3, 1, None).unwrap();
        // (y, x)
        let v = canonical_form(&f3, &coeffs(&f3, [0, 0, 0, 0, 1, 0, 0, 0, 1, 0])).unwrap();
        assert_eq!((v.case, v.canonical), (CaseLabel::OddI, Some(CanonicalClass::Identity)));
        // (x^2, y)
        let v = canonical_form(&f3, &coeffs(&f3, [1, 0, 0, 0, 0, 0, 0, 0, 0, 1])).unwrap();
        assert_eq!(v.case, CaseLabel::NotPP);
        assert!(v.collision.is_some());

        let f5 = build_field(5, 1, None).unwrap();
        // (y^2 + x, y)
        let v = classify_odd(&f5, &coeffs(&f5, [0, 0, 1, 1, 0, 0, 0, 0, 0, 1])).unwrap();
        assert_eq!(v.case, CaseLabel::OddII);
        assert!(v.is_perm);
    }

    #[test]
    fn normalization() {
        let f5 = build_field(5, 1, None).unwrap();
        let c = coeffs(&f5, [1, 1, 2, 0, 3, 4, 1, 0, 2, 0]);
        let (n, w) = normalize_cross_term(&f5, &c);
        assert!(n.a[1].is_zero());
        assert!(crate::equiv::verify_witness(&c.to_system(&f5), &n.to_system(&f5), &w));
        let c = coeffs(&f5, [0, 1, 0, 0, 0, 0, 0, 0, 1, 0]);
        let (n, w) = normalize_cross_term(&f5, &c);
        assert_eq!(n, c.swap_coords());
        assert_eq!(w.steps, vec![EquivStep::LeftLinear(Matrix::swap2())]);
        assert_eq!(classify_odd(&f5, &c), Err(ClassifyError::NotNormalized));
    }

    #[test]
    fn even_examples() {
        let f4 = build_field(2, 2, None).unwrap();
        // (y, x^2)
        let v = canonical_form(&f4, &coeffs(&f4, [0, 0, 0, 0, 1, 1, 0, 0, 0, 0])).unwrap();
        assert_eq!((v.case, v.canonical), (CaseLabel::EvenI, Some(CanonicalClass::FrobX)));
        // (x^2, y^2)
        let v = canonical_form(&f4, &coeffs(&f4, [1, 0, 0, 0, 0, 0, 0, 1, 0, 0])).unwrap();
        assert_eq!(v.canonical, Some(CanonicalClass::FrobBoth));

        let f2 = build_field(2, 1, None).unwrap();
        // (x + y, x^2 + y): XOR fails; must match the oracle.
        let c = coeffs(&f2, [0, 0, 0, 1, 1, 1, 0, 0, 0, 1]);
        let v = canonical_form(&f2, &c).unwrap();
        assert_eq!(v.is_perm, brute_force(&c.to_system(&f2)).unwrap().is_perm);

        let f8 = build_field(2, 3, None).unwrap();
        // (y^2 + x, y)
        let v = canonical_form(&f8, &coeffs(&f8, [0, 0, 1, 1, 0, 0, 0, 0, 0, 1])).unwrap();
        assert_eq!(v.case, CaseLabel::EvenIV);
        assert!(v.linearized.is_some());
        assert_eq!(classify_even(&build_field(3, 1, None).unwrap(), &c), Err(ClassifyError::OddCharacteristic));
    }
}
