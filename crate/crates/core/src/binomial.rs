//! The binomial `f(x) = x^3 + a x^{2q+1}` over F_{q^2}, written as a cubic
//! system over F_q in the basis `{1, alpha}`, with the closed-form
//! predictions checked against brute force.
//!
//! Odd characteristic uses `alpha^2 = u` for the smallest nonresidue `u`;
//! characteristic 2 with `m` odd uses `alpha^2 + alpha + 1 = 0`.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::gf::{build_field, Field, FieldElem, GfError};
use crate::mpoly::{MultiPoly, PolySystem};
use crate::par::{self, Exec};
use crate::permoracle::{brute_force_with, OracleError, DEFAULT_BUDGET};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BinomialError {
    #[error("characteristic 2 needs an odd extension degree, got m = {0}")]
    EvenDegreeEvenChar(u32),
    #[error("characteristic 3 is excluded")]
    CharThree,
    #[error("operation needs odd characteristic")]
    NotOdd,
    #[error("operation needs characteristic 2")]
    NotEven,
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtKind {
    /// `alpha^2 = u`.
    Odd { u: FieldElem },
    /// `alpha^2 = alpha + 1`.
    Even,
}

/// F_{q^2} as pairs `(x1, x2) = x1 + x2 alpha` over `base`.
#[derive(Clone, Debug)]
pub struct QuadExt {
    base: Arc<Field>,
    kind: ExtKind,
}

pub type ExtElem = [FieldElem; 2];

impl QuadExt {
    pub fn new(base: &Arc<Field>) -> Result<Self, BinomialError> {
        let kind = if base.p() == 2 {
            if base.m() % 2 == 0 {
                return Err(BinomialError::EvenDegreeEvenChar(base.m()));
            }
            ExtKind::Even
        } else {
            ExtKind::Odd { u: base.smallest_nonresidue().expect("odd field has nonresidues") }
        };
        Ok(QuadExt { base: base.clone(), kind })
    }

    pub fn base(&self) -> &Arc<Field> {
        &self.base
    }

    pub fn kind(&self) -> ExtKind {
        self.kind
    }

    /// `u` in odd characteristic.
    pub fn u(&self) -> Option<FieldElem> {
        match self.kind {
            ExtKind::Odd { u } => Some(u),
            ExtKind::Even => None,
        }
    }

    pub fn mul(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        let f = &*self.base;
        let x1y1 = f.mul(x[0], y[0]);
        let x2y2 = f.mul(x[1], y[1]);
        let cross = f.add(f.mul(x[0], y[1]), f.mul(x[1], y[0]));
        match self.kind {
            ExtKind::Odd { u } => [f.add(x1y1, f.mul(u, x2y2)), cross],
            ExtKind::Even => [f.add(x1y1, x2y2), f.add(cross, x2y2)],
        }
    }

    pub fn add(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        [self.base.add(x[0], y[0]), self.base.add(x[1], y[1])]
    }

    pub fn pow(&self, x: ExtElem, mut e: u64) -> ExtElem {
        let mut acc = [FieldElem::ONE, FieldElem::ZERO];
        let mut b = x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        acc
    }

    /// `x^3 + a x^{2q+1}`.
    pub fn binomial(&self, a: ExtElem, x: ExtElem) -> ExtElem {
        let q = self.base.q() as u64;
        self.add(self.pow(x, 3), self.mul(a, self.pow(x, 2 * q + 1)))
    }

    /// The pair `(f1, f2)` with `f(x1 + x2 alpha) = f1 + f2 alpha`.
    pub fn expand(&self, a1: FieldElem, a2: FieldElem) -> PolySystem {
        match self.kind {
            ExtKind::Odd { .. } => expand_odd(self, a1, a2).expect("odd kind"),
            ExtKind::Even => expand_even(self, a1, a2).expect("even kind"),
        }
    }
}

pub fn build_ext(base: &Arc<Field>) -> Result<QuadExt, BinomialError> {
    QuadExt::new(base)
}

fn cubic(f: &Arc<Field>, c: [FieldElem; 4]) -> MultiPoly {
    let exps = [[3, 0], [2, 1], [1, 2], [0, 3]];
    MultiPoly::from_terms(f, 2, c.iter().zip(exps).map(|(&v, e)| (v, e.to_vec()))).expect("arity")
}

/// Coefficients kept unreduced so the cubic shape survives small fields.
pub fn expand_odd(ext: &QuadExt, a1: FieldElem, a2: FieldElem) -> Result<PolySystem, BinomialError> {
    let ExtKind::Odd { u } = ext.kind else {
        return Err(BinomialError::NotOdd);
    };
    let f = &ext.base;
    let one_a1 = f.add(FieldElem::ONE, a1);
    let three_a1 = f.sub(f.from_int(3), a1);
    let f1 = [one_a1, f.neg(f.mul(a2, u)), f.mul(three_a1, u), f.mul(a2, f.mul(u, u))];
    let f2 = [a2, three_a1, f.neg(f.mul(a2, u)), f.mul(one_a1, u)];
    Ok(PolySystem::new(vec![cubic(f, f1), cubic(f, f2)]).expect("square"))
}

pub fn expand_even(ext: &QuadExt, a1: FieldElem, a2: FieldElem) -> Result<PolySystem, BinomialError> {
    if ext.kind != ExtKind::Even {
        return Err(BinomialError::NotEven);
    }
    let f = &ext.base;
    let one = FieldElem::ONE;
    let s = f.add(f.add(a1, a2), one);
    let f1 = [f.add(a1, one), a2, f.add(a2, one), s];
    let f2 = [a2, s, s, a1];
    Ok(PolySystem::new(vec![cubic(f, f1), cubic(f, f2)]).expect("square"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PredCase {
    #[serde(rename = "1.1")]
    C11,
    #[serde(rename = "1.2")]
    C12,
    #[serde(rename = "1.3")]
    C13,
    #[serde(rename = "2.1")]
    C21,
    #[serde(rename = "2.2")]
    C22,
    /// `a = 0`: plain cubing, decided by `gcd(3, q^2 - 1)`.
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "none")]
    None,
    #[serde(rename = "even-zero")]
    EvenZero,
    #[serde(rename = "even-nonzero")]
    EvenNonzero,
}

impl PredCase {
    pub fn label(&self) -> &'static str {
        match self {
            PredCase::C11 => "1.1",
            PredCase::C12 => "1.2",
            PredCase::C13 => "1.3",
            PredCase::C21 => "2.1",
            PredCase::C22 => "2.2",
            PredCase::Zero => "zero",
            PredCase::None => "none",
            PredCase::EvenZero => "even-zero",
            PredCase::EvenNonzero => "even-nonzero",
        }
    }
}

/// Which reading of the `a1 = -1` family to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reading {
    /// `a2 = 2 sigma / r` for any nonzero `r`.
    #[default]
    Literal,
    /// `a2 = 2 sigma / s` with `u = (sigma - 3) s^2`.
    Strict,
}

fn roots(f: &Field, c: &[i64]) -> Vec<FieldElem> {
    f.elements()
        .filter(|&z| c.iter().rev().fold(FieldElem::ZERO, |acc, &k| f.add(f.mul(acc, z), f.from_int(k))).is_zero())
        .collect()
}

/// The closed-form permutation criterion in odd characteristic `p != 3`.
pub fn predict_odd(ext: &QuadExt, a1: FieldElem, a2: FieldElem, reading: Reading) -> Result<(bool, PredCase), BinomialError> {
    let ExtKind::Odd { u } = ext.kind else {
        return Err(BinomialError::NotOdd);
    };
    let f = &*ext.base;
    if f.p() == 3 {
        return Err(BinomialError::CharThree);
    }
    let q = f.q() as u64;
    if a1.is_zero() && a2.is_zero() {
        // x^3 permutes F_{q^2} iff gcd(3, q^2 - 1) = 1.
        return Ok(((q * q - 1) % 3 != 0, PredCase::Zero));
    }
    if a2.is_zero() {
        if a1 == f.from_int(3) && q % 3 == 2 {
            return Ok((true, PredCase::C11));
        }
        if a1 == FieldElem::ONE && (q % 24 == 11 || q % 24 == 17) {
            return Ok((true, PredCase::C12));
        }
        if a1 == f.from_int(-3) && q % 12 == 11 {
            return Ok((true, PredCase::C13));
        }
        return Ok((false, PredCase::None));
    }
    if a1 == f.from_int(-1) && roots(f, &[1, 0, -4, 0, 1]).is_empty() {
        let two = f.from_int(2);
        let hit = roots(f, &[-2, -2, 1]).into_iter().any(|sigma| match reading {
            Reading::Literal => f.nonzero().any(|r| a2 == f.div(f.mul(two, sigma), r).expect("r != 0")),
            Reading::Strict => f.nonzero().any(|s| {
                u == f.mul(f.sub(sigma, f.from_int(3)), f.mul(s, s)) && a2 == f.div(f.mul(two, sigma), s).expect("s != 0")
            }),
        });
        if hit {
            return Ok((true, PredCase::C21));
        }
    }
    for r in f.nonzero() {
        let r2 = f.mul(r, r);
        let d = f.sub(r2, u);
        let d2 = f.mul(d, d);
        let num1 = f.mul(f.from_int(3), f.add(f.add(f.mul(r2, r2), f.mul(f.from_int(6), f.mul(u, r2))), f.mul(u, u)));
        let num2 = f.mul(f.from_int(12), f.mul(f.add(r2, u), r));
        if a1 == f.div(num1, d2).expect("u is a nonresidue") && a2 == f.div(num2, d2).expect("u is a nonresidue") {
            return Ok((true, PredCase::C22));
        }
    }
    Ok((false, PredCase::None))
}

/// Characteristic 2, `m` odd: permutation iff `a = 0`.
pub fn predict_even(ext: &QuadExt, a1: FieldElem, a2: FieldElem) -> Result<(bool, PredCase), BinomialError> {
    if ext.kind != ExtKind::Even {
        return Err(BinomialError::NotEven);
    }
    Ok(if a1.is_zero() && a2.is_zero() { (true, PredCase::EvenZero) } else { (false, PredCase::EvenNonzero) })
}

/// The `(2.2)` parameter family: all `(a1, a2)` reached by some nonzero `r`.
pub fn family_22(ext: &QuadExt) -> Vec<(FieldElem, FieldElem)> {
    let u = ext.u().expect("odd characteristic");
    let f = &*ext.base;
    let mut out: Vec<_> = f
        .nonzero()
        .map(|r| {
            let r2 = f.mul(r, r);
            let d = f.sub(r2, u);
            let d2 = f.mul(d, d);
            let a1 = f.mul(f.from_int(3), f.add(f.add(f.mul(r2, r2), f.mul(f.from_int(6), f.mul(u, r2))), f.mul(u, u)));
            let a2 = f.mul(f.from_int(12), f.mul(f.add(r2, u), r));
            (f.div(a1, d2).expect("nonzero"), f.div(a2, d2).expect("nonzero"))
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinomialReport {
    pub q: u32,
    pub a1: FieldElem,
    pub a2: FieldElem,
    pub predicted: bool,
    pub case: PredCase,
    pub oracle: bool,
    pub agree: bool,
    /// Rows whose prediction is known to be in doubt before the scan.
    pub flagged: bool,
}

/// One report per `a` in F_{q^2}, ordered by `(a1, a2)`.
pub fn scan(ext: &QuadExt, reading: Reading, exec: Exec) -> Result<Vec<BinomialReport>, BinomialError> {
    let f = ext.base.clone();
    let q = f.q();
    let total = (q as u64) * (q as u64);
    let rows = par::map_range(exec, total, |k| -> Result<BinomialReport, BinomialError> {
        let a1 = f.elem((k / q as u64) as u32).expect("digit");
        let a2 = f.elem((k % q as u64) as u32).expect("digit");
        let (predicted, case) = match ext.kind {
            ExtKind::Odd { .. } => predict_odd(ext, a1, a2, reading)?,
            ExtKind::Even => predict_even(ext, a1, a2)?,
        };
        let oracle = brute_force_with(&ext.expand(a1, a2), DEFAULT_BUDGET, Exec::Sequential)?.is_perm;
        Ok(BinomialReport {
            q,
            a1,
            a2,
            predicted,
            case,
            oracle,
            agree: predicted == oracle,
            flagged: case == PredCase::EvenZero,
        })
    });
    rows.into_iter().collect()
}

/// Checks the expansion against arithmetic in an independently built
/// F_{p^{2m}}: embed F_q via a root of its modulus, pick `alpha` as a root of
/// its minimal polynomial, and compare `f(x)` at every point.
pub fn expansion_matches_extension(ext: &QuadExt, a1: FieldElem, a2: FieldElem) -> Result<bool, BinomialError> {
    let base = &*ext.base;
    let big = build_field(base.p(), 2 * base.m(), None)?;
    let modulus = base.modulus();
    let eval_in_big = |coeffs: &[FieldElem], z: FieldElem| {
        coeffs.iter().rev().fold(FieldElem::ZERO, |acc, &c| big.add(big.mul(acc, z), c))
    };
    let prime = |c: u32| big.from_int(c as i64);
    let beta = big
        .elements()
        .find(|&z| eval_in_big(&modulus.iter().map(|&c| prime(c)).collect::<Vec<_>>(), z).is_zero())
        .expect("the base modulus splits in the degree-2 extension");
    let embed = |e: FieldElem| {
        let digits = base.coords(e);
        let powers: Vec<FieldElem> = digits.iter().map(|&d| prime(d)).collect();
        eval_in_big(&powers, beta)
    };
    let alpha_poly: Vec<FieldElem> = match ext.kind {
        ExtKind::Odd { u } => vec![big.neg(embed(u)), FieldElem::ZERO, FieldElem::ONE],
        ExtKind::Even => vec![FieldElem::ONE, FieldElem::ONE, FieldElem::ONE],
    };
    let alpha = big.elements().find(|&z| eval_in_big(&alpha_poly, z).is_zero()).expect("alpha exists");
    let to_big = |x: ExtElem| big.add(embed(x[0]), big.mul(embed(x[1]), alpha));
    let mut back = vec![[FieldElem::ZERO; 2]; big.q() as usize];
    for x1 in base.elements() {
        for x2 in base.elements() {
            back[to_big([x1, x2]).index() as usize] = [x1, x2];
        }
    }
    let a = to_big([a1, a2]);
    let qq = base.q() as u64;
    let sys = ext.expand(a1, a2);
    for x1 in base.elements() {
        for x2 in base.elements() {
            let x = to_big([x1, x2]);
            let fx = big.add(big.pow(x, 3), big.mul(a, big.pow(x, 2 * qq + 1)));
            if sys.eval(&[x1, x2]).expect("arity") != back[fx.index() as usize] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ext(p: u32, m: u32) -> QuadExt {
        QuadExt::new(&build_field(p, m, None).unwrap()).unwrap()
    }

    #[test]
    fn build_examples() {
        assert_eq!(ext(5, 1).u().unwrap().index(), 2);
        assert_eq!(ext(3, 1).u().unwrap().index(), 2);
        assert_eq!(
            QuadExt::new(&build_field(2, 2, None).unwrap()).unwrap_err(),
            BinomialError::EvenDegreeEvenChar(2)
        );
    }

    #[test]
    fn expansion_matches_pair_arithmetic() {
        for e in [ext(3, 1), ext(5, 1), ext(7, 1), ext(2, 3), ext(2, 1)] {
            let f = e.base().clone();
            for a1 in f.elements() {
                for a2 in f.elements() {
                    let sys = e.expand(a1, a2);
                    for x1 in f.elements() {
                        for x2 in f.elements() {
                            assert_eq!(sys.eval(&[x1, x2]).unwrap().as_slice(), &e.binomial([a1, a2], [x1, x2]));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn independent_extension() {
        for e in [ext(3, 1), ext(5, 1), ext(2, 3)] {
            let f = e.base().clone();
            for a1 in f.elements() {
                for a2 in f.elements() {
                    assert!(expansion_matches_extension(&e, a1, a2).unwrap());
                }
            }
        }
    }

    #[test]
    fn predictions() {
        let e5 = ext(5, 1);
        let f5 = e5.base().clone();
        assert_eq!(predict_odd(&e5, f5.from_int(3), FieldElem::ZERO, Reading::Literal).unwrap(), (true, PredCase::C11));
        let e11 = ext(11, 1);
        let f11 = e11.base().clone();
        assert_eq!(predict_odd(&e11, FieldElem::ONE, FieldElem::ZERO, Reading::Literal).unwrap(), (true, PredCase::C12));
        assert_eq!(predict_odd(&e11, f11.from_int(-3), FieldElem::ZERO, Reading::Literal).unwrap(), (true, PredCase::C13));
        let e8 = ext(2, 3);
        assert_eq!(predict_even(&e8, FieldElem::ONE, FieldElem::ZERO).unwrap(), (false, PredCase::EvenNonzero));
        // a1 = a2 = 1 vanishes on the diagonal.
        let sys = e8.expand(FieldElem::ONE, FieldElem::ONE);
        let t = e8.base().elem(5).unwrap();
        assert_eq!(sys.eval(&[t, t]).unwrap(), vec![FieldElem::ZERO, FieldElem::ZERO]);
    }

    #[test]
    fn family_22_sign_symmetry() {
        let e = ext(11, 1);
        let f = e.base().clone();
        let fam = family_22(&e);
        for &(a1, a2) in &fam {
            assert!(fam.contains(&(a1, f.neg(a2))));
        }
    }
}
