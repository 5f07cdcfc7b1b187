use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nefcone::cone_atlas::{atlas, mu6_reference};
use nefcone::exact::{q, qf, Q};
use nefcone::lattice_forms::sq;
use nefcone::nef_certify::*;
use nefcone::wall_calculus::{depth4_pairing, Which};

fn d4(a: i64, b: i64, c: i64, n: u64) -> DivisorClass {
    DivisorClass::ints(Basis::VorD4, &[a, b, c], n).unwrap()
}

#[test]
fn boundary_and_violations() {
    let r = nef_report(&d4(24, 2, 1, 1), &default_epsilon());
    assert!(r.nef);
    assert_eq!(r.active, ["a - 12b/n", "b - 2c"]);
    assert!(!r.slack_with_epsilon);
    let r = nef_report(&d4(12, 1, 1, 1), &default_epsilon());
    assert!(!r.nef);
    assert_eq!(r.violated, ["b - 2c"]);
    // level n only relaxes the L inequality
    assert!(is_nef(&d4(2, 1, 0, 6)));
    assert!(!is_nef(&d4(2, 1, 0, 5)));
    assert!(!is_nef(&d4(100, 1, 1, 100)));
}

#[test]
fn canonical_classes() {
    for n in 1..=12u64 {
        let igu = canonical_class(Basis::Igu, n).unwrap();
        assert_eq!(is_nef(&igu), n >= 3, "n = {n}");
        assert_eq!(is_ample_interior(&igu).unwrap(), n >= 3);
        for basis in [Basis::Vor, Basis::VorD4] {
            let k = canonical_class(basis, n).unwrap();
            assert!(!is_nef(&k));
        }
        let r = nef_report(&canonical_class(Basis::Vor, n).unwrap(), &default_epsilon());
        assert!(r.violated.contains(&"gamma - 4beta".to_string()));
        assert_eq!(convert_basis(&canonical_class(Basis::VorD4, n).unwrap(), Basis::Vor).unwrap(), canonical_class(Basis::Vor, n).unwrap());
    }
    let by_terms = DivisorClass::from_terms(&[("L", q(5)), ("D4", q(-1)), ("E", q(3))], 4).unwrap();
    assert_eq!(by_terms, canonical_class(Basis::VorD4, 4).unwrap());
}

#[test]
fn ample_interior() {
    let igu = |a, b, n| DivisorClass::ints(Basis::Igu, &[a, b], n).unwrap();
    assert!(is_ample_interior(&igu(5, 1, 3)).unwrap());
    assert!(!is_ample_interior(&igu(12, 1, 1)).unwrap());
    assert!(is_nef(&igu(12, 1, 1)));
    assert!(!is_ample_interior(&igu(5, 1, 2)).unwrap());
    assert!(!is_ample_interior(&igu(5, 0, 3)).unwrap());
    assert_eq!(is_ample_interior(&d4(5, 1, 0, 3)), Err(NefError::NotIgusa));
}

#[test]
fn region_equivalence_on_a_grid() {
    let vals = |scale: Q, shift: i64| (0..50).map(move |k| q(k - shift) * &scale).collect::<Vec<_>>();
    let (aa, bb, cc) = (vals(qf(3, 2), 10), vals(qf(1, 4), 10), vals(qf(1, 4), 10));
    let mut seen = [0usize; 2];
    for a in &aa {
        for b in &bb {
            for c in &cc {
                let d = DivisorClass::new(Basis::VorD4, vec![a.clone(), b.clone(), c.clone()], 1).unwrap();
                let v = convert_basis(&d, Basis::Vor).unwrap();
                assert_eq!(is_nef(&d), is_nef(&v));
                assert_eq!(convert_basis(&v, Basis::VorD4).unwrap(), d);
                seen[is_nef(&d) as usize] += 1;
            }
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}

#[test]
fn conversions() {
    let igu = DivisorClass::ints(Basis::Igu, &[13, 1], 1).unwrap();
    assert_eq!(convert_basis(&igu, Basis::VorD4).unwrap(), d4(13, 1, 0, 1));
    assert_eq!(convert_basis(&igu, Basis::Vor).unwrap(), DivisorClass::ints(Basis::Vor, &[13, 1, 4], 1).unwrap());
    assert_eq!(convert_basis(&d4(13, 1, 0, 1), Basis::Igu).unwrap(), igu);
    assert_eq!(convert_basis(&d4(13, 1, 1, 1), Basis::Igu), Err(NefError::Conversion(Basis::VorD4, Basis::Igu)));
    assert_eq!(convert_basis(&igu, Basis::Igu).unwrap(), igu);
    assert_eq!(DivisorClass::ints(Basis::Vor, &[1, 2], 1), Err(NefError::Arity { basis: Basis::Vor, want: 3, got: 2 }));
    assert_eq!(DivisorClass::ints(Basis::Igu, &[1, 2], 0), Err(NefError::BadLevel));
}

#[test]
fn classes_outside_the_span_are_refused() {
    for bad in ["E'", "D4,1", "K"] {
        assert_eq!(DivisorClass::from_terms(&[("L", q(1)), (bad, q(1))], 3), Err(NefError::NotInSpan(bad.into())));
    }
    assert!(DivisorClass::from_terms(&[("DIgu", q(-1)), ("E", q(1))], 3).is_err());
    assert!(DivisorClass::from_terms(&[("D4", q(-1)), ("DVor", q(1))], 3).is_err());
}

#[test]
fn scale_invariance_and_walls() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..300 {
        let c: Vec<Q> = (0..3).map(|_| qf(rng.gen_range(-40..=40), rng.gen_range(1..=6))).collect();
        let n = rng.gen_range(1..=5);
        let d = DivisorClass::new(Basis::VorD4, c.clone(), n).unwrap();
        let t = qf(rng.gen_range(1..=30), rng.gen_range(1..=7));
        assert_eq!(is_nef(&d), is_nef(&d.scale(&t)));
        if is_nef(&d) {
            for w in [Which::Sigma0, Which::Sigma1] {
                assert!(depth4_pairing(&c[0], &c[1], &c[2], w) >= q(0));
            }
        }
    }
    // the sigma_0 wall sees b - 2c
    assert!(depth4_pairing(&q(100), &q(1), &q(1), Which::Sigma0) < q(0));
}

#[test]
fn ledger_identities_vanish() {
    for id in IDENTITIES {
        let r = audit_identity(id).unwrap();
        assert!(r.is_zero(), "{id}: {}", r.residual);
    }
    assert_eq!(audit_identity("Smu").unwrap().cases.len(), 4);
    assert_eq!(audit_identity("HwithoutSxi").unwrap().cases.len(), 5);
    assert!(audit_identity("S3symmetrisation").unwrap().is_zero());
}

#[test]
fn mutated_controls_leave_residuals() {
    let ctl = mutated_controls().unwrap();
    assert_eq!(ctl.len(), IDENTITIES.len());
    for r in &ctl {
        assert!(!residual(r).unwrap().is_zero(), "{}", r.name);
    }
    let s3 = ctl.iter().find(|r| r.name == "S3").unwrap();
    assert_eq!(residual(s3).unwrap(), FormalDivisor::sym("E|I"));
}

#[test]
fn k_sizes_of_the_symmetrisation_faces() {
    let cases = h_without_s_cases().unwrap();
    let ks: Vec<Vec<usize>> = cases.into_iter().map(|(_, k)| k).collect();
    assert_eq!(ks, vec![vec![2, 2, 2], vec![2, 2, 2, 3], vec![3; 4], vec![2, 3, 3, 3, 3], vec![3; 6]]);
}

#[test]
fn depth_three_bounds() {
    let table = depth_three_table().unwrap();
    let got: Vec<(String, Q)> = table.iter().map(|(n, b)| (n.clone(), b.threshold.clone())).collect();
    let want = [qf(1, 2), q(1), qf(3, 4), qf(3, 2), q(2), qf(75, 46)];
    for ((name, t), w) in got.iter().zip(want) {
        assert_eq!(*t, w, "{name}");
    }
    assert!(table.iter().all(|(_, b)| b.dominated));
    assert_eq!(table[0].1.form, "2b - c");
    assert_eq!(table[1].1.form, "b - c");
    assert_eq!(table[5].1.coef_b, qf(46, 75));
}

#[test]
fn bounds_from_faces() {
    let string = [sq(&[1, 0, 0, 0]), sq(&[0, 1, 0, 0]), sq(&[0, 0, 1, 0])];
    let b = depth_bound(3, &cases_from_face(&string, false).unwrap()).unwrap();
    assert_eq!(b.form, "2b - c");
    let bf = [sq(&[1, 0, 0, 0]), sq(&[0, 0, 1, 0]), sq(&[0, 0, 0, 1])];
    assert_eq!(depth_bound(3, &cases_from_face(&bf, false).unwrap()).unwrap().coef_b, q(1));
    let disc = [sq(&[1, 0, 0, 0]), sq(&[0, 1, 0, 0]), sq(&[0, 0, 1, -1])];
    assert!(matches!(depth_bound(3, &cases_from_face(&disc, false).unwrap()), Err(NefError::NoBound(_))));

    let at = atlas();
    let face: Vec<_> = mu6_reference(&at).iter().map(|&i| at.pi2_4.gens()[i].clone()).collect();
    let lower = depth_bound(6, &cases_from_face(&face, true).unwrap()).unwrap();
    assert_eq!(lower.coef_b, qf(2, 5));
    assert!(!lower.dominated);
    let exact = depth_bound(6, &cases_from_face(&face, false).unwrap()).unwrap();
    assert!(exact.coef_b >= lower.coef_b);
}

#[test]
fn inconsistent_case_data() {
    assert!(matches!(depth_bound(3, &[XiCase::new(2, 2, 2, 5)]), Err(NefError::CaseData(_))));
    assert!(matches!(depth_bound(3, &[XiCase::new(2, 1, 2, 6)]), Err(NefError::CaseData(_))));
    assert!(matches!(depth_bound(3, &[XiCase::new(3, 2, 2, 6)]), Err(NefError::CaseData(_))));
    assert!(matches!(depth_bound(6, &[XiCase::new(2, 2, 2, 720)]), Err(NefError::CaseData(_))));
    assert!(matches!(depth_bound(7, &[]), Err(NefError::CaseData(_))));
}
