use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trendopt_core::builder::design_from_order;
use trendopt_core::efficiency::{e1, e2, q_range, trace_cl_closed_form};
use trendopt_core::model::minimal_info_matrix;
use trendopt_core::orders::{optimal_order_kind, OrderKind};
use trendopt_core::sba::smallest_supported_b;

/// `(v, k, kind)` families whose stacked designs are buildable.
fn families() -> Vec<(usize, usize, OrderKind)> {
    let mut out = Vec::new();
    for (v, k) in [(7, 4), (5, 7), (5, 4), (3, 4), (3, 5), (5, 6)] {
        for q in q_range(v, k) {
            out.push((v, k, OrderKind::PiQ(q)));
        }
    }
    for (v, k) in [(3, 8), (2, 6), (3, 10)] {
        out.push((v, k, OrderKind::TfC));
        out.push((v, k, OrderKind::Ntf));
    }
    out.push((2, 5, OrderKind::TfA));
    out.push((3, 7, OrderKind::TfA));
    out.push((2, 4, OrderKind::TfB));
    out.push((3, 12, OrderKind::TfB));
    out
}

#[test]
fn closed_form_traces_match_assembled_designs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (v, k, kind) in families() {
        let order = kind.construct(v, k).unwrap();
        let b = smallest_supported_b(v, order.distinct()).unwrap();
        let d = design_from_order(&order, b).unwrap();
        for _ in 0..50 {
            let l0 = rng.gen_range(0.0..=1.0) / k as f64;
            let l1 = rng.gen_range(0.0..=1.0);
            let direct = minimal_info_matrix(&d, l0, l1).unwrap().trace();
            let closed = trace_cl_closed_form(v, k, b, l0, l1, kind).unwrap();
            assert!(
                (direct - closed).abs() <= 1e-9,
                "v={v} k={k} {kind} b={b}: {direct} vs {closed}"
            );
        }
    }
}

fn ratio(v: usize, k: usize, b: usize, l0: f64, l1: f64, num: OrderKind, den: OrderKind) -> f64 {
    trace_cl_closed_form(v, k, b, l0, l1, num).unwrap()
        / trace_cl_closed_form(v, k, b, l0, l1, den).unwrap()
}

#[test]
fn ratios_do_not_depend_on_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let l0 = rng.gen_range(0.0..=1.0) / 8.0;
        let l1 = rng.gen_range(0.05..=1.0);
        let b = rng.gen_range(1..=50);
        let a = ratio(3, 8, b, l0, l1, OrderKind::Ntf, OrderKind::TfC);
        let c = ratio(3, 8, 2 * b, l0, l1, OrderKind::Ntf, OrderKind::TfC);
        assert!((a - c).abs() <= 1e-12);
        assert!((a - e1(3, 8, l0, l1).unwrap()).abs() <= 1e-12);

        let l0 = rng.gen_range(0.0..=1.0) / 4.0;
        let best = optimal_order_kind(7, 4, l0, l1).unwrap();
        for q in q_range(7, 4) {
            let a = ratio(7, 4, b, l0, l1, OrderKind::PiQ(q), best);
            let c = ratio(7, 4, 2 * b, l0, l1, OrderKind::PiQ(q), best);
            assert!((a - c).abs() <= 1e-12);
            assert!((a - e2(7, 4, l0, l1, q).unwrap()).abs() <= 1e-12);
        }
    }
}

#[test]
fn direct_ratios_do_not_depend_on_b() {
    let order0 = OrderKind::PiQ(0).construct(7, 4).unwrap();
    let order2 = OrderKind::PiQ(2).construct(7, 4).unwrap();
    let (l0, l1) = (0.1, 0.6);
    let at = |b| {
        let t0 = minimal_info_matrix(&design_from_order(&order0, b).unwrap(), l0, l1)
            .unwrap()
            .trace();
        let t2 = minimal_info_matrix(&design_from_order(&order2, b).unwrap(), l0, l1)
            .unwrap()
            .trace();
        t0 / t2
    };
    assert!((at(21) - at(42)).abs() <= 1e-12);
}
