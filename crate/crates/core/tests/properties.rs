use ndarray::Array2;
use proptest::prelude::*;

use snmtf::bcd::linesearch_s_detailed;
use snmtf::data::{format_dense, read_matrix};
use snmtf::fpm::{fpm_step_g, fpm_step_s};
use snmtf::init::lift_to_transformed;
use snmtf::model::se;
use snmtf::{DataBundle, Factorization, Matrix, TransformKind};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(0.0..1.0f64, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn symmetric(k: usize) -> impl Strategy<Value = Matrix> {
    matrix(k, k).prop_map(|m| (&m + &m.t()) * 0.5)
}

/// Random bundle plus a random non-negative native factorization.
fn instance() -> impl Strategy<Value = (DataBundle, Factorization)> {
    (2usize..7, 1usize..4, 1usize..3).prop_flat_map(|(n, k, count)| {
        let k = k.min(n);
        (
            prop::collection::vec(symmetric(n), count),
            matrix(n, k),
            prop::collection::vec(symmetric(k), count),
        )
            .prop_map(|(r, g, s)| {
                (
                    DataBundle::new("p", r).unwrap(),
                    Factorization::native(g, s).unwrap(),
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fpm_keeps_factors_nonnegative_and_symmetric((bundle, fact) in instance()) {
        let g = fpm_step_g(&bundle, &fact).unwrap();
        prop_assert!(g.iter().all(|&v| v >= 0.0 && v.is_finite()));
        let next = Factorization::native(g, fact.s.clone()).unwrap();
        for i in 0..bundle.count() {
            let s = fpm_step_s(&bundle, &next, i).unwrap();
            prop_assert!(s.iter().all(|&v| v >= 0.0 && v.is_finite()));
            prop_assert_eq!(&s, &s.t().to_owned());
        }
    }

    #[test]
    fn s_step_never_increases_before_projection((bundle, fact) in instance()) {
        let before = se(&bundle, &fact).unwrap();
        for i in 0..bundle.count() {
            let st = linesearch_s_detailed(&bundle, &fact, i).unwrap();
            let mut f = fact.clone();
            f.s[i].scaled_add(st.t.unwrap_or(0.0), &st.direction);
            let after = se(&bundle, &f).unwrap();
            prop_assert!(after <= before * (1.0 + 1e-12) + 1e-300, "{} > {}", after, before);
            prop_assert!(st.s_new.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn lift_then_apply_is_identity((_, fact) in instance()) {
        for t in [TransformKind::Identity, TransformKind::Abs, TransformKind::Square] {
            let back = lift_to_transformed(&fact, t).unwrap().to_native();
            for (a, b) in back.g.iter().zip(&fact.g) {
                prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
            }
            for (sa, sb) in back.s.iter().zip(&fact.s) {
                for (a, b) in sa.iter().zip(sb) {
                    prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn dense_text_round_trips_exactly(m in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c))) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        std::fs::write(&path, format_dense(&m)).unwrap();
        prop_assert_eq!(read_matrix(&path).unwrap(), m);
    }
}
