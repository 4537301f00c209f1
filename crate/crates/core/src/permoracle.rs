//! Two independent permutation tests for systems over F_q^n: exhaustive
//! evaluation with a seen-bitset, and Hermite's criterion on dense power products.

use serde::Serialize;
use thiserror::Error;

use crate::gf::{Field, FieldElem};
use crate::mpoly::{point_from_rank, rank_of, reduce_exp, CompiledSystem, PolySystem};
use crate::par::{self, Exec};

/// Default cap on evaluations (brute force) or coefficient work (Hermite).
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Below this domain size the parallel path is not worth spawning.
const PAR_DOMAIN_MIN: u64 = 1 << 14;
const CHUNK: u64 = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("scan needs {needed} units of work, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Two distinct points with equal images; `first` precedes `second` in scan order.
    Collision { first: Vec<FieldElem>, second: Vec<FieldElem> },
    /// A tuple `(t_1, .., t_n)` violating Hermite's conditions.
    HermiteTuple(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PermVerdict {
    pub is_perm: bool,
    pub witness: Option<Witness>,
}

impl PermVerdict {
    fn yes() -> Self {
        PermVerdict { is_perm: true, witness: None }
    }

    pub fn collision(&self) -> Option<(&[FieldElem], &[FieldElem])> {
        match &self.witness {
            Some(Witness::Collision { first, second }) => Some((first, second)),
            _ => None,
        }
    }
}

fn domain_size(q: u32, n: usize, budget: u64) -> Result<u64, OracleError> {
    let needed = (q as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if needed > budget {
        return Err(OracleError::BudgetExceeded { needed, budget });
    }
    Ok(needed)
}

pub fn brute_force(sys: &PolySystem) -> Result<PermVerdict, OracleError> {
    brute_force_with(sys, DEFAULT_BUDGET, Exec::Sequential)
}

/// Exhaustive bijectivity test. Points are ranked with `x_1` as the least
/// significant base-q digit; the reported collision is the first repeated
/// image in that order, whichever execution mode is used.
pub fn brute_force_with(sys: &PolySystem, budget: u64, exec: Exec) -> Result<PermVerdict, OracleError> {
    let cs = CompiledSystem::new(sys);
    brute_force_compiled(&cs, budget, exec)
}

pub fn brute_force_compiled(cs: &CompiledSystem, budget: u64, exec: Exec) -> Result<PermVerdict, OracleError> {
    let q = cs.field().q();
    let n = cs.n();
    let total = domain_size(q, n, budget)?;
    let image_rank = |k: u64, pt: &mut [FieldElem], img: &mut [FieldElem]| {
        point_from_rank(q, n, k, pt);
        cs.eval_into(pt, img);
        rank_of(q, img)
    };
    let mut seen = vec![0u64; total.div_ceil(64) as usize];
    let mut mark = |r: u64| -> bool {
        let (w, b) = ((r / 64) as usize, r % 64);
        let hit = seen[w] >> b & 1 == 1;
        seen[w] |= 1 << b;
        hit
    };

    let mut pt = vec![FieldElem::ZERO; n];
    let mut img = vec![FieldElem::ZERO; n];
    let repeat = if exec == Exec::Parallel && total >= PAR_DOMAIN_MIN {
        let chunks = total.div_ceil(CHUNK);
        let ranks: Vec<Vec<u64>> = par::map_range(exec, chunks, |c| {
            let mut pt = vec![FieldElem::ZERO; n];
            let mut img = vec![FieldElem::ZERO; n];
            (c * CHUNK..((c + 1) * CHUNK).min(total)).map(|k| image_rank(k, &mut pt, &mut img)).collect()
        });
        ranks.into_iter().flatten().enumerate().find(|&(_, r)| mark(r)).map(|(k, r)| (k as u64, r))
    } else {
        (0..total).map(|k| (k, image_rank(k, &mut pt, &mut img))).find(|&(_, r)| mark(r))
    };

    let Some((k, r)) = repeat else {
        return Ok(PermVerdict::yes());
    };
    let j = (0..k).find(|&j| image_rank(j, &mut pt, &mut img) == r).expect("earlier preimage exists");
    let mut first = vec![FieldElem::ZERO; n];
    let mut second = vec![FieldElem::ZERO; n];
    point_from_rank(q, n, j, &mut first);
    point_from_rank(q, n, k, &mut second);
    Ok(PermVerdict { is_perm: false, witness: Some(Witness::Collision { first, second }) })
}

/// Dense polynomial storage indexed by `sum e_i q^i`, exponents in `[0, q-1]`.
struct Dense<'a> {
    field: &'a Field,
    q: u32,
    n: usize,
    size: usize,
    digits: Vec<u32>,
    red_add: Vec<u32>,
}

impl<'a> Dense<'a> {
    fn new(field: &'a Field, n: usize) -> Self {
        let q = field.q();
        let size = (q as usize).pow(n as u32);
        let mut digits = vec![0u32; size * n];
        for idx in 0..size {
            let mut r = idx;
            for v in 0..n {
                digits[idx * n + v] = (r % q as usize) as u32;
                r /= q as usize;
            }
        }
        let red_add = (0..q * q).map(|k| reduce_exp(k / q + k % q, q)).collect();
        Dense { field, q, n, size, digits, red_add }
    }

    fn from_poly(&self, p: &crate::mpoly::MultiPoly) -> Vec<FieldElem> {
        let mut out = vec![FieldElem::ZERO; self.size];
        for (e, c) in p.reduce().terms() {
            let idx = e.iter().rev().fold(0usize, |acc, &x| acc * self.q as usize + x as usize);
            out[idx] = self.field.add(out[idx], c);
        }
        out
    }

    fn one(&self) -> Vec<FieldElem> {
        let mut out = vec![FieldElem::ZERO; self.size];
        out[0] = FieldElem::ONE;
        out
    }

    fn mul(&self, a: &[FieldElem], b: &[FieldElem]) -> Vec<FieldElem> {
        let (f, q, n) = (self.field, self.q, self.n);
        let mut out = vec![FieldElem::ZERO; self.size];
        let nz_b: Vec<usize> = (0..self.size).filter(|&j| !b[j].is_zero()).collect();
        for (i, &ca) in a.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for &j in &nz_b {
                let mut k = 0usize;
                for v in (0..n).rev() {
                    let s = self.red_add[(self.digits[i * n + v] * q + self.digits[j * n + v]) as usize];
                    k = k * q as usize + s as usize;
                }
                out[k] = f.add(out[k], f.mul(ca, b[j]));
            }
        }
        out
    }

    /// Coefficient of `x_1^{q-1} .. x_n^{q-1}` in the reduced product `a * b`.
    fn top_of_product(&self, a: &[FieldElem], b: &[FieldElem]) -> FieldElem {
        let (f, q, n) = (self.field, self.q, self.n);
        let top = q - 1;
        let mut acc = FieldElem::ZERO;
        let mut partners: Vec<usize> = Vec::with_capacity(1 << n);
        for (i, &ca) in a.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            partners.clear();
            partners.push(0);
            for v in (0..n).rev() {
                let e = self.digits[i * n + v];
                // e + e' must be q - 1 or 2(q - 1).
                let (o1, o2) = if e == 0 {
                    (top, None)
                } else if e == top {
                    (0, Some(top))
                } else {
                    (top - e, None)
                };
                let prev = std::mem::take(&mut partners);
                for base in prev {
                    partners.push(base * q as usize + o1 as usize);
                    if let Some(o) = o2 {
                        partners.push(base * q as usize + o as usize);
                    }
                }
            }
            let s = partners.iter().fold(FieldElem::ZERO, |s, &j| f.add(s, b[j]));
            acc = f.add(acc, f.mul(ca, s));
        }
        acc
    }
}

pub fn hermite_check(sys: &PolySystem) -> Result<PermVerdict, OracleError> {
    hermite_check_with(sys, DEFAULT_BUDGET)
}

/// Hermite's criterion. Tuples are visited in lexicographic order (`t_1`
/// most significant) and the first violation is reported; the all-`(q-1)`
/// tuple, checked for a nonzero coefficient, comes last.
pub fn hermite_check_with(sys: &PolySystem, budget: u64) -> Result<PermVerdict, OracleError> {
    let field = sys.field();
    let (q, p, n) = (field.q(), field.p(), sys.n());
    let size = domain_size(q, n, budget)?;
    let needed = size.saturating_mul(size);
    if needed > budget {
        return Err(OracleError::BudgetExceeded { needed, budget });
    }
    let dense = Dense::new(field, n);
    let powers: Vec<Vec<Vec<FieldElem>>> = sys
        .polys()
        .iter()
        .map(|poly| {
            let base = dense.from_poly(poly);
            let mut out = vec![dense.one()];
            for t in 1..q {
                let next = dense.mul(&out[t as usize - 1], &base);
                out.push(next);
            }
            out
        })
        .collect();

    let mut tuple = vec![0u32; n];
    let failing = walk(&dense, &powers, p, 0, None, &mut tuple);
    Ok(match failing {
        Some(t) => PermVerdict { is_perm: false, witness: Some(Witness::HermiteTuple(t)) },
        None => PermVerdict::yes(),
    })
}

fn walk(
    dense: &Dense<'_>,
    powers: &[Vec<Vec<FieldElem>>],
    p: u32,
    level: usize,
    prefix: Option<&[FieldElem]>,
    tuple: &mut Vec<u32>,
) -> Option<Vec<u32>> {
    let q = dense.q;
    let n = dense.n;
    let top_index = dense.size - 1;
    for t in 0..q {
        tuple[level] = t;
        let pw = &powers[level][t as usize];
        if level + 1 == n {
            let all_top = tuple.iter().all(|&x| x == q - 1);
            let relevant = tuple.iter().any(|&x| x % p != 0);
            if !all_top && !relevant {
                continue;
            }
            let coef = match prefix {
                Some(a) => dense.top_of_product(a, pw),
                None => pw[top_index],
            };
            let ok = if all_top { !coef.is_zero() } else { coef.is_zero() };
            if !ok {
                return Some(tuple.clone());
            }
        } else {
            let next = match prefix {
                Some(a) => dense.mul(a, pw),
                None => pw.clone(),
            };
            if let Some(w) = walk(dense, powers, p, level + 1, Some(&next), tuple) {
                return Some(w);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_field;
    use crate::text::parse_system;

    #[test]
    fn brute_force_examples() {
        let f3 = build_field(3, 1, None).unwrap();
        assert!(brute_force(&parse_system(&f3, "(x, y)").unwrap()).unwrap().is_perm);
        let v = brute_force(&parse_system(&f3, "(x^2, y)").unwrap()).unwrap();
        assert!(!v.is_perm);
        let one = FieldElem::ONE;
        let two = f3.from_int(2);
        assert_eq!(
            v.witness,
            Some(Witness::Collision { first: vec![one, FieldElem::ZERO], second: vec![two, FieldElem::ZERO] })
        );
        let f4 = build_field(2, 2, None).unwrap();
        assert!(brute_force(&parse_system(&f4, "(x^2, y)").unwrap()).unwrap().is_perm);
    }

    #[test]
    fn hermite_examples() {
        let f3 = build_field(3, 1, None).unwrap();
        assert!(hermite_check(&parse_system(&f3, "(x, y)").unwrap()).unwrap().is_perm);
        let v = hermite_check(&parse_system(&f3, "(x^2 + y^2, x*y)").unwrap()).unwrap();
        assert!(!v.is_perm);
        // (X^2 + Y^2)^2 has X^2 Y^2 coefficient 2 over F_3, so tuple (2, 0) fails
        // unless an earlier tuple already does.
        let w = match v.witness {
            Some(Witness::HermiteTuple(t)) => t,
            other => panic!("unexpected {other:?}"),
        };
        assert!(w <= vec![2, 0]);
    }

    #[test]
    fn hermite_reports_violating_tuple() {
        // (a1 x^2 + a3 y^2, y) over F_5: tuple (4, 0) gives (-a1 a3)^2 != 0.
        let f5 = build_field(5, 1, None).unwrap();
        let s = parse_system(&f5, "(x^2 + 2 y^2, y)").unwrap();
        let v = hermite_check(&s).unwrap();
        assert!(!v.is_perm);
        assert!(!brute_force(&s).unwrap().is_perm);
    }

    #[test]
    fn budget_is_enforced() {
        let f5 = build_field(5, 1, None).unwrap();
        let s = parse_system(&f5, "(x, y)").unwrap();
        assert_eq!(
            brute_force_with(&s, 10, Exec::Sequential),
            Err(OracleError::BudgetExceeded { needed: 25, budget: 10 })
        );
        assert!(hermite_check_with(&s, 100).is_err());
    }

    #[test]
    fn parallel_matches_sequential() {
        let f = build_field(2, 7, None).unwrap();
        let s = parse_system(&f, "(x^3 + y, x*y + {0x11} x^2)").unwrap();
        let a = brute_force_with(&s, DEFAULT_BUDGET, Exec::Sequential).unwrap();
        let b = brute_force_with(&s, DEFAULT_BUDGET, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
