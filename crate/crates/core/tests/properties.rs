use num_bigint::BigUint;
use proptest::prelude::*;

use gasket_slices::exactgeom::{make_slope, rat};
use gasket_slices::exponents::alpha_exact;
use gasket_slices::matrixgen::{build_matrices_congruence, build_matrices_geometric, validate_structure};
use gasket_slices::measures::WordMeasure;
use gasket_slices::pressure::PressureTable;
use gasket_slices::slicer::{
    expand_point, good_set_count_geometric, good_set_count_matrix, interval_dynamics_count,
};

fn coprime() -> impl Strategy<Value = (i64, i64)> {
    (1i64..12, 1i64..12).prop_filter("coprime", |&(p, q)| num_integer::gcd(p, q) == 1)
}

fn word(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 0..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_slope_changes_nothing((p, q) in coprime(), k in 2i64..5) {
        let a = build_matrices_congruence(&make_slope(p, q).unwrap()).unwrap();
        let b = build_matrices_congruence(&make_slope(k * p, k * q).unwrap()).unwrap();
        prop_assert_eq!(a.a0(), b.a0());
        prop_assert_eq!(a.a1(), b.a1());
    }

    #[test]
    fn builders_agree_and_structure_holds((p, q) in coprime()) {
        let s = make_slope(p, q).unwrap();
        let c = build_matrices_congruence(&s).unwrap();
        let g = build_matrices_geometric(&s).unwrap();
        prop_assert_eq!(c.a0(), g.a0());
        prop_assert_eq!(c.a1(), g.a1());
        prop_assert!(validate_structure(&c).is_ok());
        let sum = c.sum();
        for j in 0..c.dim() {
            prop_assert_eq!(sum.col_sum(j), 3);
        }
    }

    #[test]
    fn interval_dynamics_matches_products(
        (p, q) in (1i64..6, 1i64..6).prop_filter("coprime", |&(p, q)| num_integer::gcd(p, q) == 1),
        w in word(5),
    ) {
        let s = make_slope(p, q).unwrap();
        let tp = build_matrices_congruence(&s).unwrap();
        let prod = tp.product(&w);
        for j in 1..=tp.dim() {
            let col = interval_dynamics_count(&s, j, &w).unwrap();
            for (i, c) in col.iter().enumerate() {
                prop_assert_eq!(&prod[i][j - 1], &BigUint::from(*c));
            }
        }
    }

    #[test]
    fn eta_is_additive((p, q) in coprime(), w in word(10)) {
        let tp = build_matrices_congruence(&make_slope(p, q).unwrap()).unwrap();
        let wm = WordMeasure::new(&tp).unwrap();
        let mut w0 = w.clone();
        w0.push(0);
        let mut w1 = w.clone();
        w1.push(1);
        prop_assert_eq!(wm.eta_exact(&w), wm.eta_exact(&w0) + wm.eta_exact(&w1));
    }

    #[test]
    fn pressure_is_convex_and_increasing(
        (p, q) in (1i64..5, 1i64..5).prop_filter("coprime", |&(p, q)| num_integer::gcd(p, q) == 1),
        n in 1usize..10,
        t in -8.0f64..8.0,
        h in 0.01f64..2.0,
    ) {
        let tp = build_matrices_congruence(&make_slope(p, q).unwrap()).unwrap();
        let table = PressureTable::build(&tp, n).unwrap();
        let (a, b, c) = (table.pressure(t - h), table.pressure(t), table.pressure(t + h));
        prop_assert!(a - 2.0 * b + c >= -1e-9);
        prop_assert!(c >= b - 1e-12);
        prop_assert_eq!(table.pressure(0.0), std::f64::consts::LN_2);
    }

    #[test]
    fn alpha_bound_decreases_under_doubling((p, q) in (1i64..4, 1i64..4), n in 1usize..7) {
        prop_assume!(num_integer::gcd(p, q) == 1);
        let tp = build_matrices_congruence(&make_slope(p, q).unwrap()).unwrap();
        prop_assert!(alpha_exact(&tp, 2 * n).unwrap().value <= alpha_exact(&tp, n).unwrap().value + 1e-12);
    }

    #[test]
    fn expansion_reproduces_offset((p, q) in coprime(), num in 0i64..1000, den in 1i64..200) {
        let s = make_slope(p, q).unwrap();
        // offsets range over [-p/q, 1]
        let a = rat(num * (p + q), 1000 * q) - rat(p, q) + rat(0, den);
        let e = expand_point(&s, &a).unwrap();
        prop_assert_eq!(e.canonical.value(), &a);
        prop_assert!(e.canonical.is_canonical() || a == -rat(p, q));
        if let Some(alt) = &e.alternate {
            prop_assert_eq!(alt.value(), &a);
        }
    }

    #[test]
    fn good_set_sandwich(
        (p, q) in (1i64..4, 1i64..4).prop_filter("coprime", |&(p, q)| num_integer::gcd(p, q) == 1),
        num in 1i64..500,
        n in 1usize..7,
    ) {
        let s = make_slope(p, q).unwrap();
        let tp = build_matrices_congruence(&s).unwrap();
        // odd denominator keeps the offset off dyadic boundaries
        let a = rat(num * (p + q), 501 * q) - rat(p, q);
        prop_assume!(s.contains_offset(&a));
        let aq = &a * rat(q, 1);
        prop_assume!(aq.denom() != &1.into());
        let pt = expand_point(&s, &a).unwrap().canonical;
        let m = good_set_count_matrix(&tp, &pt, n).unwrap().count.unwrap();
        let g = good_set_count_geometric(&s, &a, n).unwrap().count.unwrap();
        prop_assert!(m <= g && g <= &m * 3u32);
    }
}
