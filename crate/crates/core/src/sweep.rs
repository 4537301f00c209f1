//! Classifier-versus-oracle sweeps over coefficient space. Inputs are drawn
//! sequentially (so a seed fixes them) and evaluated under [`Exec`].

use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gf::Field;
use crate::homog3::{classify_t32_with, irreducibility_criterion, ClassVerdict, DrsTable, Homog3Error, HomogSystem};
use crate::par::{self, Exec};
use crate::permoracle::{brute_force_with, hermite_check, OracleError, DEFAULT_BUDGET};
use crate::quadclass::{canonical_form, ClassifyError, QuadCoeffs, QuadVerdict};

/// Number of ten-coefficient tuples over F_q.
pub fn quad_space(q: u32) -> u64 {
    (q as u64).pow(10)
}

/// Half uniform tuples, half with each coefficient zeroed at probability 1/2;
/// the sparse half is where the permutation shapes live.
pub fn sample_quad_ranks(q: u32, n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let q = q as u64;
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                rng.gen_range(0..q.pow(10))
            } else {
                (0..10).fold((0u64, 1u64), |(acc, w), _| {
                    let d = if rng.gen_bool(0.5) { 0 } else { rng.gen_range(0..q) };
                    (acc + d * w, w * q)
                })
                .0
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct QuadRow {
    pub coeffs: QuadCoeffs,
    pub verdict: Result<QuadVerdict, ClassifyError>,
    pub oracle: bool,
}

impl QuadRow {
    pub fn agree(&self) -> bool {
        matches!(&self.verdict, Ok(v) if v.is_perm == self.oracle)
    }
}

pub fn quad_row(f: &Arc<Field>, rank: u64) -> Result<QuadRow, OracleError> {
    let coeffs = QuadCoeffs::from_rank(f, rank);
    let oracle = brute_force_with(&coeffs.to_system(f), DEFAULT_BUDGET, Exec::Sequential)?.is_perm;
    Ok(QuadRow { coeffs, verdict: canonical_form(f, &coeffs), oracle })
}

pub fn scan_quad(f: &Arc<Field>, ranks: &[u64], exec: Exec) -> Result<Vec<QuadRow>, OracleError> {
    par::map_slice(exec, ranks, |&k| quad_row(f, k)).into_iter().collect()
}

/// Tuples whose Hermite verdict differs from brute force.
pub fn hermite_disagreements(f: &Arc<Field>, ranks: &[u64], exec: Exec) -> Result<Vec<u64>, OracleError> {
    let rows = par::map_slice(exec, ranks, |&k| -> Result<Option<u64>, OracleError> {
        let sys = QuadCoeffs::from_rank(f, k).to_system(f);
        let a = brute_force_with(&sys, DEFAULT_BUDGET, Exec::Sequential)?.is_perm;
        let b = hermite_check(&sys)?.is_perm;
        Ok((a != b).then_some(k))
    });
    Ok(rows.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten().collect())
}

#[derive(Clone, Debug)]
pub struct Homog3Row {
    pub system: HomogSystem,
    pub verdict: Result<ClassVerdict, Homog3Error>,
    pub irreducibility: Result<bool, Homog3Error>,
    pub oracle: bool,
}

impl Homog3Row {
    pub fn agree(&self) -> bool {
        matches!(&self.verdict, Ok(v) if v.is_perm == self.oracle)
    }
}

pub fn homog3_space(q: u32) -> u64 {
    (q as u64).pow(6)
}

/// Rows for the ranks in `range` with `a1 b4 != 0`.
pub fn scan_homog3(f: &Arc<Field>, range: Range<u64>, table: Option<&DrsTable>, exec: Exec) -> Result<Vec<Homog3Row>, OracleError> {
    let start = range.start;
    let rows = par::map_range(exec, range.end - range.start, |i| -> Result<Option<Homog3Row>, OracleError> {
        let system = HomogSystem::from_rank(f, start + i);
        if system.a1.is_zero() || system.b4.is_zero() {
            return Ok(None);
        }
        let oracle = brute_force_with(&system.to_system(f), DEFAULT_BUDGET, Exec::Sequential)?.is_perm;
        Ok(Some(Homog3Row {
            system,
            verdict: classify_t32_with(f, &system, table),
            irreducibility: irreducibility_criterion(f, &system),
            oracle,
        }))
    });
    Ok(rows.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_field;
    use rand::SeedableRng;

    #[test]
    fn modes_agree() {
        let f = build_field(5, 1, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ranks = sample_quad_ranks(5, 300, &mut rng);
        let a = scan_quad(&f, &ranks, Exec::Sequential).unwrap();
        let b = scan_quad(&f, &ranks, Exec::Parallel).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.coeffs == y.coeffs && x.verdict == y.verdict && x.oracle == y.oracle));
        assert!(a.iter().all(QuadRow::agree));
        assert!(hermite_disagreements(&f, &ranks, Exec::Parallel).unwrap().is_empty());
    }
}
