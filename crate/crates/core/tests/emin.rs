use itertools::Itertools;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nefcone::cone_atlas::{form_action, group_g};
use nefcone::emin_lab::*;
use nefcone::exact::{q, qf, Q};
use nefcone::lattice_forms::e_form;

fn e_int(y: &[i64; 4]) -> i64 {
    let c: Vec<i64> = e_form().coords().iter().map(|x| x.to_integer().try_into().unwrap()).collect();
    let idx = [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    idx.iter().zip(&c).map(|(&(i, j), k)| if i == j { k * y[i] * y[i] } else { 2 * k * y[i] * y[j] }).sum()
}

/// min over |q_i| <= 3 of e(q + num/den)/2, by plain search.
fn brute(num: [i64; 4], den: i64) -> Q {
    let best = (0..4)
        .map(|_| -3i64..=3)
        .multi_cartesian_product()
        .map(|qv| e_int(&[num[0] + den * qv[0], num[1] + den * qv[1], num[2] + den * qv[2], num[3] + den * qv[3]]))
        .min()
        .unwrap();
    qf(best, 2 * den * den)
}

fn shift(num: [i64; 4], den: i64) -> Vec<Q> {
    num.iter().map(|&a| qf(a, den)).collect()
}

#[test]
fn exact_minimum_agrees_with_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let den = rng.gen_range(1..=12);
        let num = [0; 4].map(|_: i64| rng.gen_range(-2 * den..=2 * den));
        assert_eq!(emin(&shift(num, den)), brute(num, den), "{num:?}/{den}");
    }
}

#[test]
fn every_reported_minimiser_attains_the_value() {
    let g = e_form().gram();
    let m = shift([1, 1, 1, 1], 2);
    let r = min_shifted(&g, &m).unwrap();
    assert!(r.minimizers.len() > 1);
    for qv in &r.minimizers {
        let y: Vec<Q> = qv.iter().zip(&m).map(|(a, b)| Q::from_integer(a.clone()) + b).collect();
        assert_eq!(quad_value(&g, &y), r.value);
    }
    assert!(r.value <= r.upper);
}

#[test]
fn invariant_under_symmetries_of_e() {
    let grp = group_g();
    let e = e_form();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gs = grp.elements();
    for _ in 0..20 {
        let x = shift([0; 4].map(|_: i64| rng.gen_range(0..7)), 7);
        let base = emin(&x);
        for _ in 0..5 {
            let g = &gs[rng.gen_range(0..gs.len())];
            assert_eq!(form_action(g, &e), e);
            assert_eq!(emin(&g.transpose().apply(&x)), base);
        }
    }
}

#[test]
fn even_periodic_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let num = [0; 4].map(|_: i64| rng.gen_range(0..10));
        let x = shift(num, 10);
        let v = emin(&x);
        let neg: Vec<Q> = x.iter().map(|a| -a).collect();
        let moved: Vec<Q> = x.iter().zip([3, -1, 0, 2]).map(|(a, b)| a + q(b)).collect();
        assert_eq!(emin(&neg), v);
        assert_eq!(emin(&moved), v);
        assert!(v >= q(0));
        assert!(v <= e_form().evaluate(&x).unwrap() / q(2));
    }
    assert_eq!(emin(&shift([0, 0, 0, 0], 1)), q(0));
}

#[test]
fn fast_kernel_on_the_nine_grid() {
    for k in (0..4).map(|_| 0..9i64).multi_cartesian_product().step_by(7) {
        let k = [k[0], k[1], k[2], k[3]];
        assert_eq!(qf(emin_grid_scaled(k, 9), 8 * 81), emin(&grid_point(k, 9)));
    }
}

#[test]
fn serial_and_parallel_agree() {
    for n in [4, 9, 16] {
        let a = grid_histogram(n, 1).unwrap();
        assert_eq!(a, grid_histogram(n, 3).unwrap());
        assert_eq!(a, grid_histogram(n, 0).unwrap());
    }
    assert_eq!(quadrature(12, 1).unwrap(), quadrature(12, 4).unwrap());
}

#[test]
fn nine_grid_mean() {
    // independent midpoint sum with plain integer search
    let n = 9i64;
    let mut total = 0i64;
    for k in (0..4).map(|_| 0..n).multi_cartesian_product() {
        let num = [0, 1, 2, 3].map(|i| 2 * k[i] + 1);
        let v = brute(num, 2 * n);
        total += (v * q(8 * n * n)).to_integer().to_string().parse::<i64>().unwrap();
    }
    let oracle = qf(total, 8 * n * n * n.pow(4));
    assert_eq!(oracle, qf(17059, 78732));
    assert_eq!(grid_mean(9).unwrap(), oracle);
}

#[test]
fn single_cell() {
    let r = quadrature(1, 1).unwrap();
    // centre (1/2,1/2,1/2,1/2), a deep hole of D4
    assert_eq!(r.mean, qf(1, 4));
    assert!(matches!(weissauer_margin(1, 1), Err(EminError::NeedLargerN { .. })));
    assert_eq!(grid_histogram(0, 1), Err(EminError::BadN));
}

#[test]
fn certified_margin_at_79() {
    let m = weissauer_margin(79, 0).unwrap();
    assert_eq!(sig_digits(&m.mean, 7), "0.2166667");
    assert!(m.error_bound < qf(1, 40));
    assert!(m.certified_margin > q(0));
    assert_eq!(m.margin, &m.mean - qf(3, 16));
    assert!((&m.mean - qf(13, 60)).abs() < qf(1, 1000));
    assert!(m.conjectural);
}

#[test]
fn affine_minima() {
    for n in 1..=4 {
        let (g, l) = ell_form(n);
        let r = min_over_shifts(&g, &l, 2).unwrap();
        assert_eq!(r.value, qf(-n, 2));
        assert!(r.argmins.contains(&vec![q(0), qf(1, 2), qf(1, 2)]));
    }
    let (g, l) = pair_form();
    let r = min_over_shifts(&g, &l, 2).unwrap();
    assert_eq!(r.value, qf(-1, 2));
    assert_eq!(r.argmins, vec![vec![qf(1, 2), qf(1, 2)]]);
    // integer points only
    let r = min_affine(&g, &l, &[q(0), q(0)]).unwrap();
    assert_eq!(r.value, q(0));
    assert_eq!(r.argmins.len(), 4);
}

#[test]
fn shape_errors() {
    let g = e_form().gram();
    assert_eq!(min_shifted(&g, &[q(0)]), Err(EminError::Shape(4, 1)));
}
