use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trendopt_core::model::{
    minimal_info_matrix, minimal_info_matrix_expanded, phi_vector, w_matrix,
};
use trendopt_core::orders::{objective_pairwise, order_stats, Order};
use trendopt_core::sba::{construct_sba, verify_sba};
use trendopt_core::DesignArray;

fn design_strategy() -> impl Strategy<Value = (DesignArray, f64, f64)> {
    (2usize..=6, 2usize..=6, 1usize..=6)
        .prop_flat_map(|(v, k, b)| {
            (
                Just((v, k, b)),
                proptest::collection::vec(1..=v, k * b),
                0.0..=1.0f64,
                0.0..=1.0f64,
            )
        })
        .prop_map(|((v, k, b), cells, u0, l1)| {
            let d = DesignArray::from_cells(v, k, b, cells).unwrap();
            (d, u0 / k as f64, l1)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn assembly_forms_agree((d, l0, l1) in design_strategy()) {
        let a = minimal_info_matrix(&d, l0, l1).unwrap();
        let b = minimal_info_matrix_expanded(&d, l0, l1).unwrap();
        prop_assert!((a.matrix() - b.matrix()).amax() <= 1e-10);
    }

    #[test]
    fn contrast_rows_sum_to_zero((d, l0, l1) in design_strategy()) {
        let c = minimal_info_matrix(&d, l0, l1).unwrap();
        prop_assert!(c.max_abs_row_sum() <= 1e-10);
        let sigma = trendopt_core::model::sigma_upper_bound(1.0, 0.7, 1.3, d.k()).unwrap();
        let full = trendopt_core::model::full_info_matrix(&d, &sigma).unwrap();
        prop_assert!(full.max_abs_row_sum() <= 1e-10);
    }

    #[test]
    fn incidence_views_are_consistent((d, _l0, _l1) in design_strategy()) {
        let r = d.replications();
        prop_assert_eq!(r.iter().sum::<usize>(), d.b() * d.k());
        let n = d.block_incidence();
        let m = d.unit_incidence();
        for i in 0..d.v() {
            prop_assert_eq!(n.row(i).sum(), r[i] as f64);
            prop_assert_eq!(m.row(i).sum(), r[i] as f64);
        }
        for p in 0..d.k() {
            prop_assert_eq!(m.column(p).sum(), d.b() as f64);
        }
    }

    #[test]
    fn block_trace_decomposes((d, l0, l1) in design_strategy()) {
        let w = w_matrix(d.k(), l0, l1).unwrap();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for j in 0..d.b() {
            let x = d.block_matrix(j);
            lhs += (x.transpose() * &w * &x).trace();
            let order = Order::new(d.v(), d.column(j)).unwrap();
            rhs += w.trace() + 2.0 * objective_pairwise(&order, l0, l1).unwrap();
        }
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }
}

#[test]
fn phi_is_orthonormal() {
    for k in 2..=64 {
        let phi = phi_vector(k).unwrap();
        assert!(phi.iter().sum::<f64>().abs() <= 1e-12, "k={k}");
        assert!(
            (phi.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() <= 1e-12,
            "k={k}"
        );
    }
}

#[test]
fn w_eigenvectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 2..=20 {
        for _ in 0..10 {
            let l0 = rng.gen_range(0.0..=1.0) / k as f64;
            let l1 = rng.gen_range(0.0..=1.0);
            let w = w_matrix(k, l0, l1).unwrap();
            let ones = DVector::from_element(k, 1.0);
            let phi = DVector::from_vec(phi_vector(k).unwrap());
            assert!((&w * &ones - &ones * (1.0 - k as f64 * l0)).amax() <= 1e-12);
            assert!((&w * &phi - &phi * (1.0 - l1)).amax() <= 1e-12);
        }
    }
}

#[test]
fn order_statistics_match_pairwise_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let v = rng.gen_range(1..=8);
        let k = rng.gen_range(2..=16);
        let entries: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=v)).collect();
        let order = Order::new(v, entries.clone()).unwrap();
        let l0 = rng.gen_range(0.0..=1.0) / k as f64;
        let l1 = rng.gen_range(0.0..=1.0);
        let st = order_stats(&order, l0, l1).unwrap();

        let phi = phi_vector(k).unwrap();
        let mut s = 0usize;
        let mut t = 0.0;
        for p in 0..k {
            for q in p + 1..k {
                if entries[p] == entries[q] {
                    s += 1;
                    t += phi[p] * phi[q];
                }
            }
        }
        assert_eq!(st.s, s);
        assert!((st.t - t).abs() <= 1e-12);
        assert!((st.f - (-l0 * s as f64 - l1 * t)).abs() <= 1e-12);
        assert!((st.f - objective_pairwise(&order, l0, l1).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn constructed_arrays_verify() {
    for (v, kstar, b) in [
        (3, 2, 3),
        (3, 3, 6),
        (5, 3, 10),
        (5, 5, 20),
        (7, 4, 21),
        (7, 7, 42),
        (4, 3, 12),
        (6, 2, 30),
    ] {
        let a = construct_sba(v, kstar, b).unwrap();
        let report = verify_sba(v, &a.rows());
        assert!(
            report.is_sba,
            "v={v} kstar={kstar} b={b}: {:?}",
            report.violations
        );
        assert!(report.row_uniform);
    }
}

#[test]
fn semibalanced_design_is_completely_symmetric() {
    let a = construct_sba(5, 3, 10).unwrap();
    let d = DesignArray::from_rows(5, a.rows()).unwrap();
    let c = minimal_info_matrix(&d, 0.1, 0.4).unwrap();
    assert!(c.is_completely_symmetric(1e-10));
    let diag = DMatrix::from_fn(5, 5, |i, j| if i == j { c.matrix()[(0, 0)] } else { 0.0 });
    assert!((c.matrix().diagonal() - diag.diagonal()).amax() <= 1e-10);
}
