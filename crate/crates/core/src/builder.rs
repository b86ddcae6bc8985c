//! Assembly and certification of maximin universally optimal designs.
//!
//! The design stacks a row-uniform semibalanced array (one row per distinct
//! treatment of the optimal order) with duplicates of its rows, arranged so
//! that the first block reproduces the optimal order exactly.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DesignError, Result};
use crate::model::{
    check_lambdas, minimal_info_matrix, phi_vector, w_matrix, DesignArray, IDENTITY_TOL,
};
use crate::orders::{objective_pairwise, optimal_order_kind, Order, OrderKind};
use crate::sba::{construct_sba, SemibalancedArray};

/// Lays out `pi_star` over `b` blocks using `sba`.
///
/// Row `p` of the design copies the array row assigned to treatment
/// `pi_star(p)`; array rows are assigned to treatments in order of first
/// appearance, and symbols are relabeled so block 1 equals `pi_star`.
pub fn assemble_design(pi_star: &Order, b: usize, sba: &SemibalancedArray) -> Result<DesignArray> {
    let v = pi_star.v();
    let k = pi_star.k();
    let labels = pi_star.first_appearance();
    let kstar = labels.len();
    if sba.v() != v {
        return Err(DesignError::ShapeMismatch(format!(
            "array has {} symbols, order has v={v}",
            sba.v()
        )));
    }
    if sba.kstar() != kstar {
        return Err(DesignError::ShapeMismatch(format!(
            "array has {} rows, order has {kstar} distinct treatments",
            sba.kstar()
        )));
    }
    if sba.b() != b {
        return Err(DesignError::ShapeMismatch(format!(
            "array has {} columns, design needs b={b}",
            sba.b()
        )));
    }
    if !sba.is_row_uniform() {
        return Err(DesignError::invalid(
            "semibalanced array rows are not uniform",
        ));
    }

    let mut row_of = vec![usize::MAX; v + 1];
    for (r, &lab) in labels.iter().enumerate() {
        row_of[lab] = r;
    }

    // Relabel: the symbol in array row r of column 1 becomes labels[r];
    // every other symbol takes the remaining labels in increasing order.
    let mut relabel = vec![0usize; v + 1];
    let mut taken = vec![false; v + 1];
    for (r, &lab) in labels.iter().enumerate() {
        relabel[sba.get(r, 0)] = lab;
        taken[lab] = true;
    }
    let mut free_labels = (1..=v).filter(|&l| !taken[l]);
    for sym in 1..=v {
        if relabel[sym] == 0 {
            relabel[sym] = free_labels.next().expect("bijection");
        }
    }

    let mut cells = Vec::with_capacity(k * b);
    for &t in pi_star.entries() {
        let r = row_of[t];
        cells.extend(sba.row(r).iter().map(|&s| relabel[s]));
    }
    DesignArray::from_cells(v, k, b, cells)
}

/// Checks that make a design maximin universally optimal, with the trace
/// decomposed as `block_term - rr_term - m_phi_term`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// `max_i |(M_d phi)_i|`.
    pub m_phi_max_abs: f64,
    pub m_phi_zero: bool,
    /// `r'r`.
    pub rr: usize,
    /// `(bk)^2 / v`, the smallest possible `r'r`.
    pub rr_min: f64,
    pub rr_attained: bool,
    pub cs_ok: bool,
    pub trace: f64,
    /// Closed-form trace for a design in which every block behaves like block 1.
    pub closed_form_trace: f64,
    pub trace_matches_closed_form: bool,
    /// Largest attainable trace, from the optimal order.
    pub max_trace: f64,
    pub trace_is_max: bool,
    /// `trace(sum_j X_j' W X_j)`.
    pub block_term: f64,
    /// `sum_j (sum_p w_pp + 2 F(block j))`.
    pub block_term_pairwise: f64,
    /// `(1 - k lambda0)/(bk) r'r`.
    pub rr_term: f64,
    /// `(1 - lambda1)/b |M_d phi|^2`.
    pub m_phi_term: f64,
    pub optimal: bool,
}

/// Certifies `d` against the maximin optimality conditions.
pub fn certify_maximin(d: &DesignArray, lambda0: f64, lambda1: f64) -> Result<Certificate> {
    let (v, k, b) = (d.v(), d.k(), d.b());
    check_lambdas(k, lambda0, lambda1)?;
    let (kf, bf, vf) = (k as f64, b as f64, v as f64);
    let phi = phi_vector(k)?;
    let w = w_matrix(k, lambda0, lambda1)?;
    let c = minimal_info_matrix(d, lambda0, lambda1)?;

    let mut m_phi = vec![0.0; v];
    for p in 0..k {
        for j in 0..b {
            m_phi[d.get(p, j) - 1] += phi[p];
        }
    }
    let m_phi_max_abs = m_phi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let m_phi_sq: f64 = m_phi.iter().map(|x| x * x).sum();

    let r = d.replications();
    let rr: usize = r.iter().map(|x| x * x).sum();
    let bk = b * k;
    let rr_min = (bk * bk) as f64 / vf;

    let mut block_term = 0.0;
    for j in 0..b {
        let x = d.block_matrix(j);
        block_term += (x.transpose() * &w * x).trace();
    }
    let diag_w = kf - kf * lambda0 - lambda1;
    let mut block_term_pairwise = 0.0;
    let mut first_f = 0.0;
    for j in 0..b {
        let col = Order::new(v, d.column(j))?;
        let f = objective_pairwise(&col, lambda0, lambda1)?;
        if j == 0 {
            first_f = f;
        }
        block_term_pairwise += diag_w + 2.0 * f;
    }
    let rr_term = (1.0 - kf * lambda0) / (bf * kf) * rr as f64;
    let m_phi_term = (1.0 - lambda1) / bf * m_phi_sq;

    let balanced_trace = |f: f64| bf * (diag_w + 2.0 * f) - (1.0 - kf * lambda0) * bf * kf / vf;
    let closed_form_trace = balanced_trace(first_f);
    let best = optimal_order_kind(v, k, lambda0, lambda1)?.construct(v, k)?;
    let max_trace = balanced_trace(objective_pairwise(&best, lambda0, lambda1)?);

    let trace = c.trace();
    let scale = trace.abs().max(1.0);
    let m_phi_zero = m_phi_max_abs <= 1e-12 * bf.max(1.0);
    let rr_attained = rr * v == bk * bk;
    let cs_ok = c.is_completely_symmetric(IDENTITY_TOL);
    let trace_matches_closed_form = (trace - closed_form_trace).abs() <= 1e-9 * scale;
    let trace_is_max = trace >= max_trace - 1e-9 * scale;
    Ok(Certificate {
        m_phi_max_abs,
        m_phi_zero,
        rr,
        rr_min,
        rr_attained,
        cs_ok,
        trace,
        closed_form_trace,
        trace_matches_closed_form,
        max_trace,
        trace_is_max,
        block_term,
        block_term_pairwise,
        rr_term,
        m_phi_term,
        optimal: m_phi_zero && rr_attained && cs_ok && trace_matches_closed_form && trace_is_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalDesignReport {
    pub v: usize,
    pub b: usize,
    pub k: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    pub kind: OrderKind,
    pub order: Order,
    pub kstar: usize,
    pub design: DesignArray,
    pub cs_ok: bool,
    pub trace: f64,
    pub certificate: Certificate,
}

/// Builds and certifies the maximin optimal design for `(v, k, b, lambda0, lambda1)`.
///
/// Fails with `Infeasible` (carrying the smallest supported `b`) when no
/// suitable semibalanced array is available for this `b`.
pub fn build_optimal_design(
    v: usize,
    k: usize,
    b: usize,
    lambda0: f64,
    lambda1: f64,
) -> Result<OptimalDesignReport> {
    let kind = optimal_order_kind(v, k, lambda0, lambda1)?;
    let order = kind.construct(v, k)?;
    let design = design_from_order(&order, b)?;
    let certificate = certify_maximin(&design, lambda0, lambda1)?;
    Ok(OptimalDesignReport {
        v,
        b,
        k,
        lambda0,
        lambda1,
        kind,
        kstar: order.distinct(),
        order,
        design,
        cs_ok: certificate.cs_ok,
        trace: certificate.trace,
        certificate,
    })
}

/// The design of the stacked form whose first block is `order`.
pub fn design_from_order(order: &Order, b: usize) -> Result<DesignArray> {
    let sba = construct_sba(order.v(), order.distinct(), b)?;
    assemble_design(order, b, &sba)
}

/// Summary of a full design-space enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveSummary {
    pub designs: u128,
    pub max_trace: f64,
    /// Designs within `1e-10` (relative) of the maximum.
    pub maximizers: u64,
    /// Whether every maximizer has every block attaining the optimal `F`.
    pub maximizers_have_optimal_blocks: bool,
}

/// Enumerates all `v^(kb)` designs and returns the largest `trace(C^L)`.
pub fn exhaustive_max_trace(
    v: usize,
    k: usize,
    b: usize,
    lambda0: f64,
    lambda1: f64,
    budget: u128,
) -> Result<ExhaustiveSummary> {
    check_lambdas(k, lambda0, lambda1)?;
    let cells = k * b;
    let total = (v as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
    if total > budget {
        return Err(DesignError::BudgetExceeded {
            required: total,
            budget,
        });
    }
    let decode = |mut idx: u64| -> DesignArray {
        let mut c = vec![0; cells];
        for slot in c.iter_mut().rev() {
            *slot = (idx % v as u64) as usize + 1;
            idx /= v as u64;
        }
        DesignArray::from_cells(v, k, b, c).expect("valid by construction")
    };
    let trace_of = |idx: u64| -> f64 {
        minimal_info_matrix(&decode(idx), lambda0, lambda1)
            .expect("validated parameters")
            .trace()
    };
    let total64 = total as u64;
    let max_trace = (0..total64)
        .into_par_iter()
        .map(trace_of)
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let tol = 1e-10 * max_trace.abs().max(1.0);

    let best = optimal_order_kind(v, k, lambda0, lambda1)?.construct(v, k)?;
    let f_best = objective_pairwise(&best, lambda0, lambda1)?;
    let (maximizers, all_ok) = (0..total64)
        .into_par_iter()
        .filter(|&i| trace_of(i) >= max_trace - tol)
        .map(|i| {
            let d = decode(i);
            let ok = (0..b).all(|j| {
                let col = Order::new(v, d.column(j)).expect("valid");
                let f = objective_pairwise(&col, lambda0, lambda1).expect("valid");
                (f - f_best).abs() <= 1e-10
            });
            (1u64, ok)
        })
        .reduce(|| (0, true), |a, b| (a.0 + b.0, a.1 && b.1));
    Ok(ExhaustiveSummary {
        designs: total,
        max_trace,
        maximizers,
        maximizers_have_optimal_blocks: all_ok,
    })
}
