use std::sync::Arc;

use proptest::prelude::*;

use permsys::binomial::{expansion_matches_extension, family_22, QuadExt};
use permsys::equiv::apply_step;
use permsys::gf::prime_power;
use permsys::permoracle::hermite_check;
use permsys::quadclass::QuadCoeffs;
use permsys::{apply_witness, brute_force, build_field, EquivStep, EquivWitness, Field, FieldElem, Matrix, MultiPoly, PolySystem};

const QS: [u32; 7] = [2, 3, 4, 5, 7, 8, 9];

fn field(q: u32) -> Arc<Field> {
    let (p, m) = prime_power(q).unwrap();
    build_field(p, m, None).unwrap()
}

fn elem(f: &Field, i: u32) -> FieldElem {
    f.elem(i % f.q()).unwrap()
}

fn poly(f: &Arc<Field>, n: usize, terms: &[(u32, Vec<u32>)]) -> MultiPoly {
    MultiPoly::from_terms(f, n, terms.iter().map(|(c, e)| (elem(f, *c), e[..n].to_vec()))).unwrap()
}

fn terms() -> impl Strategy<Value = Vec<(u32, Vec<u32>)>> {
    prop::collection::vec((any::<u32>(), prop::collection::vec(0u32..20, 3)), 0..6)
}

fn points(f: &Field, n: usize) -> Vec<Vec<FieldElem>> {
    let q = f.q() as u64;
    (0..q.pow(n as u32))
        .map(|k| (0..n).map(|i| f.elem(((k / q.pow(i as u32)) % q) as u32).unwrap()).collect())
        .collect()
}

fn matrix(f: &Field, n: usize, seed: &[u32]) -> Option<Matrix> {
    let rows = (0..n).map(|i| (0..n).map(|j| elem(f, seed[i * n + j])).collect()).collect();
    Matrix::from_rows(rows).filter(|m| m.is_invertible(f))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reduce_is_idempotent_and_preserves_values(qi in 0..QS.len(), n in 1usize..=3, t in terms()) {
        let f = field(QS[qi]);
        let p = poly(&f, n, &t);
        let r = p.reduce();
        prop_assert!(r.is_reduced());
        prop_assert_eq!(r.reduce(), r.clone());
        for pt in points(&f, n) {
            prop_assert_eq!(p.eval(&pt).unwrap(), r.eval(&pt).unwrap());
        }
    }

    #[test]
    fn mul_commutes_and_associates(qi in 0..QS.len(), a in terms(), b in terms(), c in terms()) {
        let f = field(QS[qi]);
        let (a, b, c) = (poly(&f, 2, &a), poly(&f, 2, &b), poly(&f, 2, &c));
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
    }

    #[test]
    fn field_laws(qi in 0..QS.len(), a: u32, b: u32, c: u32) {
        let f = field(QS[qi]);
        let (a, b, c) = (elem(&f, a), elem(&f, b), elem(&f, c));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(f.sub(a, b), b), a);
        if !b.is_zero() {
            prop_assert_eq!(f.mul(f.div(a, b).unwrap(), b), a);
        }
        let p = f.p() as u64;
        prop_assert_eq!(f.pow(f.add(a, b), p), f.add(f.pow(a, p), f.pow(b, p)));
    }

    #[test]
    fn compose_linear_law(qi in 0..4usize, t in terms(), u in terms(), s1 in prop::collection::vec(any::<u32>(), 4), s2 in prop::collection::vec(any::<u32>(), 4)) {
        let f = field(QS[qi]);
        let sys = PolySystem::new(vec![poly(&f, 2, &t), poly(&f, 2, &u)]).unwrap();
        let (Some(m1), Some(m2)) = (matrix(&f, 2, &s1), matrix(&f, 2, &s2)) else { return Ok(()) };
        let lhs = sys.compose_linear(&m1).unwrap().compose_linear(&m2).unwrap();
        let rhs = sys.compose_linear(&m1.mul(&f, &m2)).unwrap();
        for pt in points(&f, 2) {
            prop_assert_eq!(lhs.eval(&pt).unwrap(), rhs.eval(&pt).unwrap());
        }
    }

    #[test]
    fn oracles_agree_and_ignore_constants(qi in 0..QS.len(), c in prop::collection::vec(any::<u32>(), 12)) {
        let f = field(QS[qi]);
        let coeffs = QuadCoeffs::from_slice(&c[..10].iter().map(|&x| elem(&f, x)).collect::<Vec<_>>()).unwrap();
        let sys = coeffs.to_system(&f);
        let v = brute_force(&sys).unwrap().is_perm;
        prop_assert_eq!(hermite_check(&sys).unwrap().is_perm, v);
        let shifted = sys.add_constant(&[elem(&f, c[10]), elem(&f, c[11])]).unwrap();
        prop_assert_eq!(brute_force(&shifted).unwrap().is_perm, v);
    }

    #[test]
    fn linear_steps_keep_the_verdict(qi in 0..4usize, c in prop::collection::vec(any::<u32>(), 10), s1 in prop::collection::vec(any::<u32>(), 4), s2 in prop::collection::vec(any::<u32>(), 4)) {
        let f = field(QS[qi]);
        let sys = QuadCoeffs::from_slice(&c.iter().map(|&x| elem(&f, x)).collect::<Vec<_>>()).unwrap().to_system(&f);
        let (Some(m1), Some(m2)) = (matrix(&f, 2, &s1), matrix(&f, 2, &s2)) else { return Ok(()) };
        let steps = vec![EquivStep::LeftLinear(m1), EquivStep::Relabel(vec![2, 1]), EquivStep::RightLinear(m2)];
        let v = brute_force(&sys).unwrap().is_perm;
        let mut cur = sys.clone();
        for s in &steps {
            cur = apply_step(&cur, s).unwrap();
            prop_assert_eq!(brute_force(&cur).unwrap().is_perm, v);
        }
        // Replaying the whole chain equals stepping through it.
        let w = EquivWitness { steps };
        prop_assert_eq!(apply_witness(&sys, &w).unwrap(), cur);
    }

    #[test]
    fn shifts_keep_the_verdict(qi in 0..4usize, g in terms(), k in terms(), h in terms()) {
        let f = field(QS[qi]);
        let in_x = |t: &[(u32, Vec<u32>)]| poly(&f, 1, t).substitute(&[MultiPoly::var(&f, 2, 0)]).unwrap();
        let sys = PolySystem::new(vec![in_x(&g), MultiPoly::var(&f, 2, 1).add(&in_x(&k)).unwrap()]).unwrap();
        let step = EquivStep::CsShift(vec![MultiPoly::zero(&f, 2), in_x(&h)]);
        let shifted = apply_step(&sys, &step).unwrap();
        prop_assert_eq!(brute_force(&shifted).unwrap().is_perm, brute_force(&sys).unwrap().is_perm);
    }
}

#[test]
fn expansion_fidelity_exhaustive() {
    for q in [3, 5, 7, 8] {
        let f = field(q);
        let ext = QuadExt::new(&f).unwrap();
        for a1 in f.elements() {
            for a2 in f.elements() {
                assert!(expansion_matches_extension(&ext, a1, a2).unwrap(), "q={q} a=({a1},{a2})");
            }
        }
    }
}

#[test]
fn family_22_closed_under_sign_flip() {
    for q in [5, 7, 11, 13, 17, 19, 23] {
        let f = field(q);
        let ext = QuadExt::new(&f).unwrap();
        let fam = family_22(&ext);
        assert!(!fam.is_empty());
        for &(a1, a2) in &fam {
            assert!(fam.contains(&(a1, f.neg(a2))), "q={q}");
        }
    }
}
