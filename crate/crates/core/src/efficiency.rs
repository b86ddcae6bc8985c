//! Closed-form traces of the minimal information matrix for designs built
//! from a single order, and the efficiency ratios derived from them.

use serde::Serialize;

use crate::error::{DesignError, Result};
use crate::model::{check_lambdas, phi_squared};
use crate::orders::{has_tf_ntf_choice, m_t, optimal_order_kind, OrderKind};

/// The lambda grid of the published `v = 7, k = 4` efficiency table.
pub const TABLE1_GRID: [(f64, f64); 6] = [
    (0.0, 1.0),
    (1.0 / 40.0, 1.0),
    (5.0 / 40.0, 1.0),
    (10.0 / 40.0, 1.0),
    (10.0 / 40.0, 0.5),
    (10.0 / 40.0, 0.1),
];

/// `s_min = m (k - v + t) / 2` for `k >= 2v`, the fewest coincident pairs.
pub fn s_min(v: usize, k: usize) -> Result<usize> {
    if v == 0 || k < 2 * v {
        return Err(DesignError::invalid(format!(
            "s_min needs k >= 2v (k={k}, v={v})"
        )));
    }
    let (m, t) = m_t(k, v);
    Ok(m * (k - v + t) / 2)
}

/// `trace(C^L)` (in `sigma0_eps2 = 1` units) of a design of the stacked form
/// built from an order of the given kind.
pub fn trace_cl_closed_form(
    v: usize,
    k: usize,
    b: usize,
    lambda0: f64,
    lambda1: f64,
    kind: OrderKind,
) -> Result<f64> {
    check_lambdas(k, lambda0, lambda1)?;
    if k < 2 || v < 2 {
        return Err(DesignError::invalid(format!(
            "need k, v >= 2 (k={k}, v={v})"
        )));
    }
    let (kf, vf, bf) = (k as f64, v as f64, b as f64);
    let base = kf - kf * lambda0 - (kf / vf) * (1.0 - kf * lambda0);
    match kind {
        OrderKind::PiQ(q) => {
            if q > k / 2 || k - q > v {
                return Err(DesignError::invalid(format!(
                    "pi_{q} is not an order for k={k}, v={v}"
                )));
            }
            let gain: f64 = (1..=q).map(|p| lambda1 * phi_squared(k, p) - lambda0).sum();
            Ok(bf * (base - lambda1) + 2.0 * bf * gain)
        }
        OrderKind::TfA | OrderKind::TfB => {
            let (m, t) = m_t(k, v);
            let ok = k >= 2 * v
                && match kind {
                    OrderKind::TfA => k % 2 == 1,
                    _ => t == 0 && m % 2 == 0,
                };
            if !ok {
                return Err(DesignError::invalid(format!(
                    "{kind} is not available for k={k}, v={v}"
                )));
            }
            let s = s_min(v, k)? as f64;
            Ok(bf * (base - 2.0 * lambda0 * s))
        }
        OrderKind::TfC | OrderKind::Ntf => {
            if !has_tf_ntf_choice(v, k) {
                return Err(DesignError::invalid(format!(
                    "{kind} needs k even, k >= 2v and k/v not an even integer (k={k}, v={v})"
                )));
            }
            let (m, t) = m_t(k, v);
            let s = s_min(v, k)? as f64;
            let common = bf * (base - 2.0 * lambda0 * s);
            let count = if m % 2 == 0 { t } else { v - t } as f64;
            let penalty = if kind == OrderKind::Ntf {
                lambda1 * phi_squared(k, k / 2)
            } else {
                lambda0
            };
            Ok(common - bf * count * penalty)
        }
    }
}

fn require_trend_weight(lambda1: f64) -> Result<()> {
    if !(lambda1 > 0.0) {
        return Err(DesignError::invalid(
            "efficiency ratios need lambda1 > 0; use the breakpoint map for lambda1 = 0",
        ));
    }
    Ok(())
}

fn positive(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(DesignError::invalid(format!(
            "{what} has zero trace; the ratio is undefined"
        )))
    }
}

/// `trace(C^L(pi_NTF)) / trace(C^L(pi_TF_C))`.
pub fn e1(v: usize, k: usize, lambda0: f64, lambda1: f64) -> Result<f64> {
    require_trend_weight(lambda1)?;
    let ntf = trace_cl_closed_form(v, k, 1, lambda0, lambda1, OrderKind::Ntf)?;
    let tfc = trace_cl_closed_form(v, k, 1, lambda0, lambda1, OrderKind::TfC)?;
    Ok(ntf / positive(tfc, "pi_TF_C")?)
}

/// Relative efficiencies of the two candidate orders when `k >= 2v` is even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct E1Report {
    pub e1: f64,
    pub optimal: OrderKind,
    pub ntf_efficiency: f64,
    pub tf_c_efficiency: f64,
}

pub fn e1_report(v: usize, k: usize, lambda0: f64, lambda1: f64) -> Result<E1Report> {
    let e1 = e1(v, k, lambda0, lambda1)?;
    let optimal = optimal_order_kind(v, k, lambda0, lambda1)?;
    let (ntf_efficiency, tf_c_efficiency) = if e1 <= 1.0 {
        (e1, 1.0)
    } else {
        (1.0, 1.0 / e1)
    };
    Ok(E1Report {
        e1,
        optimal,
        ntf_efficiency,
        tf_c_efficiency,
    })
}

/// `max(0, k - v) ..= floor(k/2)`, the `q` worth considering when `k < 2v`.
pub fn q_range(v: usize, k: usize) -> std::ops::RangeInclusive<usize> {
    k.saturating_sub(v)..=k / 2
}

/// `trace(C^L(pi_q)) / trace(C^L(pi_q*))` with `q*` the optimal choice.
pub fn e2(v: usize, k: usize, lambda0: f64, lambda1: f64, q: usize) -> Result<f64> {
    require_trend_weight(lambda1)?;
    if k >= 2 * v {
        return Err(DesignError::invalid(format!(
            "E2 needs k < 2v (k={k}, v={v})"
        )));
    }
    if !q_range(v, k).contains(&q) {
        return Err(DesignError::invalid(format!(
            "q={q} outside {:?} for k={k}, v={v}",
            q_range(v, k)
        )));
    }
    let best = optimal_order_kind(v, k, lambda0, lambda1)?;
    let num = trace_cl_closed_form(v, k, 1, lambda0, lambda1, OrderKind::PiQ(q))?;
    let den = trace_cl_closed_form(v, k, 1, lambda0, lambda1, best)?;
    Ok(num / positive(den, "the optimal order")?)
}

/// Orders compared in an efficiency table for `(v, k)`.
pub fn candidate_kinds(v: usize, k: usize) -> Vec<OrderKind> {
    if k < 2 * v {
        q_range(v, k).map(OrderKind::PiQ).collect()
    } else if has_tf_ntf_choice(v, k) {
        vec![OrderKind::TfC, OrderKind::Ntf]
    } else if k % 2 == 1 {
        vec![OrderKind::TfA]
    } else {
        vec![OrderKind::TfB]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyTable {
    pub v: usize,
    pub k: usize,
    pub rows: Vec<OrderKind>,
    /// `(lambda0, lambda1)` per column.
    pub columns: Vec<(f64, f64)>,
    /// Efficiencies in percent, rounded to the nearest integer.
    pub percent: Vec<Vec<i64>>,
    pub ratio: Vec<Vec<f64>>,
}

/// Efficiency of every candidate order relative to the optimal one, per grid point.
pub fn efficiency_table(v: usize, k: usize, grid: &[(f64, f64)]) -> Result<EfficiencyTable> {
    let rows = candidate_kinds(v, k);
    let mut ratio = vec![Vec::with_capacity(grid.len()); rows.len()];
    for &(l0, l1) in grid {
        require_trend_weight(l1)?;
        let best = optimal_order_kind(v, k, l0, l1)?;
        let den = positive(
            trace_cl_closed_form(v, k, 1, l0, l1, best)?,
            "the optimal order",
        )?;
        for (i, &kind) in rows.iter().enumerate() {
            ratio[i].push(trace_cl_closed_form(v, k, 1, l0, l1, kind)? / den);
        }
    }
    let percent = ratio
        .iter()
        .map(|r| r.iter().map(|x| (100.0 * x).round() as i64).collect())
        .collect();
    Ok(EfficiencyTable {
        v,
        k,
        rows,
        columns: grid.to_vec(),
        percent,
        ratio,
    })
}

/// `lambda0 / lambda1`, infinite when `lambda1 = 0`.
pub fn lambda_ratio(lambda0: f64, lambda1: f64) -> f64 {
    if lambda1 == 0.0 {
        f64::INFINITY
    } else {
        lambda0 / lambda1
    }
}

/// A range `[lower, upper)` of `lambda0 / lambda1` on which one order is optimal.
/// At `lower` the order of the neighbouring interval ties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioInterval {
    pub lower: f64,
    #[serde(serialize_with = "serialize_bound")]
    pub upper: f64,
    pub kind: OrderKind,
}

fn serialize_bound<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*x)
    }
}

/// Intervals of `lambda0 / lambda1` with their optimal orders, ascending.
pub fn optimality_breakpoints(v: usize, k: usize) -> Result<Vec<RatioInterval>> {
    if k < 2 || v < 2 {
        return Err(DesignError::invalid(format!(
            "need k, v >= 2 (k={k}, v={v})"
        )));
    }
    if k < 2 * v {
        let range = q_range(v, k);
        let (q_lo, q_hi) = (*range.start(), *range.end());
        return Ok((q_lo..=q_hi)
            .rev()
            .map(|q| RatioInterval {
                lower: if q == q_hi {
                    0.0
                } else {
                    phi_squared(k, q + 1)
                },
                upper: if q == q_lo {
                    f64::INFINITY
                } else {
                    phi_squared(k, q)
                },
                kind: OrderKind::PiQ(q),
            })
            .collect());
    }
    if has_tf_ntf_choice(v, k) {
        let t = phi_squared(k, k / 2);
        return Ok(vec![
            RatioInterval {
                lower: 0.0,
                upper: t,
                kind: OrderKind::TfC,
            },
            RatioInterval {
                lower: t,
                upper: f64::INFINITY,
                kind: OrderKind::Ntf,
            },
        ]);
    }
    Ok(vec![RatioInterval {
        lower: 0.0,
        upper: f64::INFINITY,
        kind: candidate_kinds(v, k)[0],
    }])
}

/// Every order that is optimal at `(lambda0, lambda1)`: one, or two when the
/// ratio sits on a breakpoint (within `1e-12` relative).
pub fn co_optimal_kinds(v: usize, k: usize, lambda0: f64, lambda1: f64) -> Result<Vec<OrderKind>> {
    check_lambdas(k, lambda0, lambda1)?;
    let r = lambda_ratio(lambda0, lambda1);
    let intervals = optimality_breakpoints(v, k)?;
    let mut out = Vec::new();
    for (i, iv) in intervals.iter().enumerate() {
        let inside = r >= iv.lower && (r < iv.upper || iv.upper.is_infinite());
        let on_lower = i > 0 && (r - iv.lower).abs() <= 1e-12 * iv.lower.max(1e-300);
        let on_upper = iv.upper.is_finite() && (r - iv.upper).abs() <= 1e-12 * iv.upper;
        if inside || on_lower || on_upper {
            out.push(iv.kind);
        }
    }
    Ok(out)
}

/// `(lambda0 / lambda1, efficiency of each candidate order)`.
pub type CurvePoint = (f64, Vec<f64>);

/// Efficiency of each candidate order as `lambda0` sweeps `[0, 1/k]` at fixed
/// `lambda1`. Rows are `(lambda0 / lambda1, efficiencies...)`.
pub fn efficiency_curves(
    v: usize,
    k: usize,
    lambda1: f64,
    points: usize,
) -> Result<(Vec<OrderKind>, Vec<CurvePoint>)> {
    require_trend_weight(lambda1)?;
    let kinds = candidate_kinds(v, k);
    let n = points.max(2);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let l0 = (i as f64 / (n - 1) as f64) / k as f64;
        let best = optimal_order_kind(v, k, l0, lambda1)?;
        let den = trace_cl_closed_form(v, k, 1, l0, lambda1, best)?;
        let effs = kinds
            .iter()
            .map(|&kind| trace_cl_closed_form(v, k, 1, l0, lambda1, kind).map(|x| x / den))
            .collect::<Result<Vec<_>>>()?;
        rows.push((l0 / lambda1, effs));
    }
    Ok((kinds, rows))
}
