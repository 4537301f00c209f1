use permsys::homog3::{
    classify_t32_with, drs_discriminants, rat_is_perm, shape_permutations, to_rational, DrsTable, HomogSystem,
};
use permsys::par::{count_range, Exec};
use permsys::{brute_force, build_field, Field};

fn build(q: u32) -> std::sync::Arc<Field> {
    let (p, m) = permsys::gf::prime_power(q).unwrap();
    build_field(p, m, None).unwrap()
}

#[test]
fn classifier_matches_oracle_q2_q5_q8() {
    for q in [2, 5, 8] {
        let f = build(q);
        let table = DrsTable::new(&f).unwrap();
        let total = (q as u64).pow(6);
        let bad = count_range(Exec::Parallel, total, |k| {
            let s = HomogSystem::from_rank(&f, k);
            if s.a1.is_zero() || s.b4.is_zero() {
                return false;
            }
            let v = classify_t32_with(&f, &s, Some(&table)).unwrap();
            v.is_perm != brute_force(&s.to_system(&f)).unwrap().is_perm
        });
        assert_eq!(bad, 0, "q = {q}");
    }
}

#[test]
fn bridge_on_coprime_systems() {
    // With Q1, Q2 coprime the unreduced quotient is already reduced.
    let f = build(5);
    let bad = count_range(Exec::Parallel, 5u64.pow(6), |k| {
        let s = HomogSystem::from_rank(&f, k);
        if s.a1.is_zero() || s.b4.is_zero() {
            return false;
        }
        let r = to_rational(&f, &s).unwrap();
        if r.degree() != 3 {
            return false;
        }
        rat_is_perm(&f, &r) != brute_force(&s.to_system(&f)).unwrap().is_perm
    });
    assert_eq!(bad, 0);
}

#[test]
fn drs_family_vs_scan_q5() {
    let f = build(5);
    let table = DrsTable::new(&f).unwrap();
    let perms = shape_permutations(&f, Exec::Parallel);
    for (m, _) in table.maps() {
        assert!(rat_is_perm(&f, m));
    }
    let missing = perms.iter().filter(|m| table.get(m).is_none()).count();
    eprintln!("q=5: {} generated, {} scanned, {} without witness", table.len(), perms.len(), missing);
    let (n, d) = drs_discriminants(&f, f.from_int(1), f.from_int(2));
    assert!(!f.is_square(n) && !f.is_square(d));
}
