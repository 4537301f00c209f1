//! Probe of the claim that a quadratic permutation of F_q^n (q odd) is
//! equivalent to the identity: sample systems, test them by brute force,
//! and for each permutation look for an explicit chain of linear and
//! coordinate-shift steps ending at `(x1, ..., xn)`.
//!
//! The search is greedy, so a permutation without a witness is only
//! "unresolved", never a counterexample.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::equiv::{apply_step, verify_witness, EquivStep, EquivWitness};
use crate::gf::{Field, FieldElem};
use crate::linalg::{nullspace, Matrix};
use crate::mpoly::{MultiPoly, PolySystem};
use crate::par::{self, Exec};
use crate::permoracle::{brute_force_with, OracleError, DEFAULT_BUDGET};

/// Exponent vectors of total degree 1 or 2 in `n` variables.
pub fn quadratic_monomials(n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 1;
        out.push(e);
    }
    for i in 0..n {
        for j in i..n {
            let mut e = vec![0; n];
            e[i] += 1;
            e[j] += 1;
            out.push(e);
        }
    }
    out
}

fn random_elem(f: &Field, rng: &mut ChaCha8Rng) -> FieldElem {
    f.elem(rng.gen_range(0..f.q())).expect("in range")
}

fn random_invertible(f: &Field, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let rows = (0..n).map(|_| (0..n).map(|_| random_elem(f, rng)).collect()).collect();
        let m = Matrix::from_rows(rows).expect("square");
        if m.is_invertible(f) {
            return m;
        }
    }
}

/// Every coefficient of degree 1 and 2 uniform.
pub fn random_quadratic(f: &Arc<Field>, n: usize, rng: &mut ChaCha8Rng) -> PolySystem {
    let mons = quadratic_monomials(n);
    let polys = (0..n)
        .map(|_| {
            MultiPoly::from_terms(f, n, mons.iter().map(|e| (random_elem(f, rng), e.clone())))
                .expect("arity")
                .reduce()
        })
        .collect();
    PolySystem::new(polys).expect("square")
}

/// `rho . T . sigma` with `T_i = x_i + h_i(x_1..x_{i-1})`, `h_i` random of degree <= 2.
pub fn planted_quadratic(f: &Arc<Field>, n: usize, rng: &mut ChaCha8Rng) -> PolySystem {
    let polys = (0..n)
        .map(|i| {
            let lower: Vec<Vec<u32>> =
                quadratic_monomials(n).into_iter().filter(|e| e.iter().skip(i).all(|&d| d == 0)).collect();
            let h = MultiPoly::from_terms(f, n, lower.into_iter().map(|e| (random_elem(f, rng), e))).expect("arity");
            MultiPoly::var(f, n, i).add(&h).expect("same field")
        })
        .collect();
    let t = PolySystem::new(polys).expect("square");
    let sigma = random_invertible(f, n, rng);
    let rho = random_invertible(f, n, rng);
    t.compose_linear(&sigma).expect("size").left_linear(&rho).expect("size")
}

/// `f_i = x_i + c_i m_i` with `m_i` a quadratic monomial or `c_i = 0`, index
/// `k` in `0..(1 + 2 * #monomials)^n` over F_3 (or `(1 + (q-1) #m)^n` in general).
pub fn restricted_system(f: &Arc<Field>, n: usize, mut k: u64) -> PolySystem {
    let quads: Vec<Vec<u32>> = quadratic_monomials(n).into_iter().filter(|e| e.iter().sum::<u32>() == 2).collect();
    let per = 1 + (f.q() as u64 - 1) * quads.len() as u64;
    let polys = (0..n)
        .map(|i| {
            let choice = k % per;
            k /= per;
            let x = MultiPoly::var(f, n, i);
            if choice == 0 {
                return x;
            }
            let c = f.elem(((choice - 1) % (f.q() as u64 - 1)) as u32 + 1).expect("nonzero");
            let m = &quads[((choice - 1) / (f.q() as u64 - 1)) as usize];
            x.add(&MultiPoly::monomial(f, c, m.clone())).expect("same field")
        })
        .collect();
    PolySystem::new(polys).expect("square")
}

pub fn restricted_count(q: u32, n: usize) -> u64 {
    let quads = (n * (n + 1) / 2) as u64;
    (1 + (q as u64 - 1) * quads).pow(n as u32)
}

/// Greedy triangularization. At stage `k` the first `k` coordinates read
/// `x_i + h_i(x_<i)`; a combination of the remaining ones with no degree-2
/// term touching `x_>=k` and a nonzero linear part in `x_>=k` becomes
/// coordinate `k`, and a change of `x_>=k` turns that linear part into `x_k`.
/// A final shift removes every `h_i`.
pub fn find_witness(f: &PolySystem) -> Option<EquivWitness> {
    let field = f.field().clone();
    let fd = &*field;
    let n = f.n();
    let mut cur = f.reduce();
    let mut w = EquivWitness::new();
    for k in 0..n {
        let rest = n - k;
        // Monomials appearing anywhere in the remaining coordinates.
        let mut forbidden = BTreeSet::new();
        for p in &cur.polys()[k..] {
            for (e, _) in p.terms() {
                if e.iter().sum::<u32>() >= 2 && e.iter().skip(k).any(|&d| d > 0) {
                    forbidden.insert(e.to_vec());
                }
            }
        }
        let rows: Vec<Vec<FieldElem>> =
            forbidden.iter().map(|e| cur.polys()[k..].iter().map(|p| p.coefficient_of(e)).collect()).collect();
        let linear_part = |c: &[FieldElem]| -> Vec<FieldElem> {
            (k..n)
                .map(|v| {
                    let mut e = vec![0; n];
                    e[v] = 1;
                    c.iter()
                        .zip(&cur.polys()[k..])
                        .fold(FieldElem::ZERO, |acc, (&ci, p)| fd.add(acc, fd.mul(ci, p.coefficient_of(&e))))
                })
                .collect()
        };
        let basis = nullspace(fd, &rows, rest);
        let (c, lam) = basis.into_iter().find_map(|c| {
            let lam = linear_part(&c);
            lam.iter().any(|x| !x.is_zero()).then_some((c, lam))
        })?;

        // Row k = the combination; the other rows keep the unused coordinates.
        let pivot = (0..rest).find(|&j| !c[j].is_zero()).expect("nonzero nullspace vector");
        let mut left = Matrix::identity(n);
        for j in 0..rest {
            left.set(k, k + j, c[j]);
        }
        let others: Vec<usize> = (0..rest).filter(|&j| j != pivot).collect();
        for (slot, &j) in others.iter().enumerate() {
            for col in k..n {
                left.set(k + 1 + slot, col, FieldElem::ZERO);
            }
            left.set(k + 1 + slot, k + j, FieldElem::ONE);
        }
        if left != Matrix::identity(n) {
            let step = EquivStep::LeftLinear(left);
            cur = apply_step(&cur, &step).ok()?;
            w.push(step);
        }

        // y = A x on the x_>=k block with row k equal to the linear part.
        let p = (0..rest).find(|&j| !lam[j].is_zero()).expect("nonzero linear part");
        let mut a = Matrix::identity(n);
        for j in 0..rest {
            a.set(k, k + j, lam[j]);
        }
        if p != 0 {
            for col in k..n {
                a.set(k + p, col, FieldElem::ZERO);
            }
            a.set(k + p, k, FieldElem::ONE);
        }
        if a != Matrix::identity(n) {
            let step = EquivStep::RightLinear(a.inverse(fd)?);
            cur = apply_step(&cur, &step).ok()?;
            w.push(step);
        }
    }
    let shifts: Vec<MultiPoly> = cur
        .polys()
        .iter()
        .enumerate()
        .map(|(i, p)| MultiPoly::var(&field, n, i).sub(p).expect("same field"))
        .collect();
    if shifts.iter().any(|h| !h.is_zero()) {
        let step = EquivStep::CsShift(shifts);
        cur = apply_step(&cur, &step).ok()?;
        w.push(step);
    }
    (cur == PolySystem::identity(&field, n)).then_some(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    /// Dense uniform coefficients.
    Dense,
    /// Planted `rho . T . sigma`.
    Planted,
    /// Alternate dense and planted.
    Mixed,
}

#[derive(Clone, Debug)]
pub struct ProbeRecord {
    pub index: u64,
    pub system: PolySystem,
    pub is_perm: bool,
    /// `Some` when a verified chain to the identity was built.
    pub witness: Option<EquivWitness>,
}

impl ProbeRecord {
    pub fn unresolved(&self) -> bool {
        self.is_perm && self.witness.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProbeSummary {
    pub systems: u64,
    pub permutations: u64,
    pub witnessed: u64,
    pub unresolved: u64,
}

fn probe_one(index: u64, system: PolySystem) -> Result<ProbeRecord, OracleError> {
    let is_perm = brute_force_with(&system, DEFAULT_BUDGET, Exec::Sequential)?.is_perm;
    let witness = if is_perm {
        find_witness(&system).filter(|w| verify_witness(&system, &PolySystem::identity(system.field(), system.n()), w))
    } else {
        None
    };
    Ok(ProbeRecord { index, system, is_perm, witness })
}

/// Draws systems sequentially from `rng`, then tests them in parallel.
pub fn probe_sampled(
    f: &Arc<Field>,
    n: usize,
    samples: u64,
    sampler: Sampler,
    rng: &mut ChaCha8Rng,
    exec: Exec,
) -> Result<Vec<ProbeRecord>, OracleError> {
    let systems: Vec<PolySystem> = (0..samples)
        .map(|i| match sampler {
            Sampler::Dense => random_quadratic(f, n, rng),
            Sampler::Planted => planted_quadratic(f, n, rng),
            Sampler::Mixed if i % 2 == 0 => random_quadratic(f, n, rng),
            Sampler::Mixed => planted_quadratic(f, n, rng),
        })
        .collect();
    let idx: Vec<(u64, PolySystem)> = systems.into_iter().enumerate().map(|(i, s)| (i as u64, s)).collect();
    par::map_slice(exec, &idx, |(i, s)| probe_one(*i, s.clone())).into_iter().collect()
}

/// Every system of [`restricted_system`].
pub fn probe_restricted(f: &Arc<Field>, n: usize, exec: Exec) -> Result<Vec<ProbeRecord>, OracleError> {
    let total = restricted_count(f.q(), n);
    par::map_range(exec, total, |k| probe_one(k, restricted_system(f, n, k))).into_iter().collect()
}

pub fn summarize(records: &[ProbeRecord]) -> ProbeSummary {
    let mut s = ProbeSummary { systems: records.len() as u64, ..Default::default() };
    for r in records {
        if r.is_perm {
            s.permutations += 1;
            if r.witness.is_some() {
                s.witnessed += 1;
            } else {
                s.unresolved += 1;
            }
        }
    }
    s
}
