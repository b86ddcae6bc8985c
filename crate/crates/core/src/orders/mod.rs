//! Within-block orders and the selection of an order maximizing the
//! per-block objective `F(pi) = -lambda0 s(pi) - lambda1 T(pi)`.

mod oracle;
mod profile;
mod trend;

pub use oracle::{brute_force_optimal, BruteForceResult, DEFAULT_ORACLE_BUDGET};
pub use profile::min_ssq_profile;
pub use trend::{tf_ntf_order, trend_filler, FillTarget, TrendVariant};

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{DesignError, Result};
use crate::model::{check_lambdas, phi_at, phi_squared, phi_vector, w_matrix};

/// A within-block order: the treatment labels (1-based) at positions `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Order {
    v: usize,
    entries: Vec<usize>,
}

impl Order {
    pub fn new(v: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(DesignError::invalid("order is empty"));
        }
        if let Some(&bad) = entries.iter().find(|&&t| t == 0 || t > v) {
            return Err(DesignError::invalid(format!(
                "treatment label {bad} outside 1..={v}"
            )));
        }
        Ok(Order { v, entries })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    /// `n_i`, the number of times each treatment appears.
    pub fn replications(&self) -> Vec<usize> {
        let mut n = vec![0; self.v];
        for &t in &self.entries {
            n[t - 1] += 1;
        }
        n
    }

    /// Number of distinct treatments (`k*`).
    pub fn distinct(&self) -> usize {
        self.replications().iter().filter(|&&n| n > 0).count()
    }

    /// Distinct treatments in order of first appearance.
    pub fn first_appearance(&self) -> Vec<usize> {
        let mut seen = vec![false; self.v];
        let mut out = Vec::new();
        for &t in &self.entries {
            if !seen[t - 1] {
                seen[t - 1] = true;
                out.push(t);
            }
        }
        out
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        let k = self.k();
        (0..k / 2).all(|p| self.entries[p] == self.entries[k - 1 - p])
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("}")
    }
}

/// Replications, trend loadings and the objective of one order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStats {
    /// Replication of each treatment.
    pub n: Vec<usize>,
    /// `h_i = sum of phi(p)` over the positions of treatment `i`.
    pub h: Vec<f64>,
    /// Number of unit pairs sharing a treatment.
    pub s: usize,
    /// `T = (sum h_i^2 - 1) / 2`.
    pub t: f64,
    /// `F = -lambda0 s - lambda1 T`.
    pub f: f64,
}

pub fn order_stats(order: &Order, lambda0: f64, lambda1: f64) -> Result<OrderStats> {
    let k = order.k();
    check_lambdas(k, lambda0, lambda1)?;
    let phi = phi_vector(k)?;
    let n = order.replications();
    let mut h = vec![0.0; order.v()];
    for (p, &t) in order.entries().iter().enumerate() {
        h[t - 1] += phi[p];
    }
    let ssq: usize = n.iter().map(|x| x * x).sum();
    let s = (ssq - k) / 2;
    let t = 0.5 * (h.iter().map(|x| x * x).sum::<f64>() - 1.0);
    let f = -lambda0 * s as f64 - lambda1 * t;
    Ok(OrderStats { n, h, s, t, f })
}

/// `F(pi)` as the sum of `w_pq` over unit pairs `p < q` sharing a treatment.
pub fn objective_pairwise(order: &Order, lambda0: f64, lambda1: f64) -> Result<f64> {
    let k = order.k();
    let w = w_matrix(k, lambda0, lambda1)?;
    let e = order.entries();
    let mut f = 0.0;
    for p in 0..k {
        for q in p + 1..k {
            if e[p] == e[q] {
                f += w[(p, q)];
            }
        }
    }
    Ok(f)
}

/// Largest `p < (k+1)/2` with `lambda1 phi(p)^2 > lambda0`, or 0 when none.
pub fn s_star(k: usize, lambda0: f64, lambda1: f64) -> usize {
    (1..=k / 2)
        .filter(|&p| lambda1 * phi_squared(k, p) > lambda0)
        .max()
        .unwrap_or(0)
}

/// `{1, 2, ..., q, q+1, ..., k-q, q, ..., 2, 1}`: `q` mirrored pairs around
/// `k - 2q` singletons, using `k - q` distinct treatments.
pub fn pi_q(v: usize, k: usize, q: usize) -> Result<Order> {
    if k < 2 {
        return Err(DesignError::InvalidBlockSize(k));
    }
    if q > k / 2 {
        return Err(DesignError::invalid(format!(
            "q={q} outside 0..={} for k={k}",
            k / 2
        )));
    }
    if k - q > v {
        return Err(DesignError::invalid(format!(
            "pi_{q} needs {} distinct treatments, only {v} available",
            k - q
        )));
    }
    let mut entries: Vec<usize> = (1..=k - q).collect();
    entries.extend((1..=q).rev());
    Order::new(v, entries)
}

/// Families of optimal orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderKind {
    /// `pi_q` for `k < 2v`.
    PiQ(usize),
    /// Trend-free, `k` odd.
    TfA,
    /// Trend-free, `k/v` an even integer.
    TfB,
    /// Mirror-symmetric trend-free with replications in `{xi, xi+2}`.
    TfC,
    /// Nearly trend-free with the most balanced replications.
    Ntf,
}

impl OrderKind {
    pub fn label(&self) -> String {
        match self {
            OrderKind::PiQ(q) => format!("pi_{q}"),
            OrderKind::TfA => "pi_TF_A".into(),
            OrderKind::TfB => "pi_TF_B".into(),
            OrderKind::TfC => "pi_TF_C".into(),
            OrderKind::Ntf => "pi_NTF".into(),
        }
    }

    /// Constructs a representative order of this kind.
    pub fn construct(&self, v: usize, k: usize) -> Result<Order> {
        match *self {
            OrderKind::PiQ(q) => pi_q(v, k, q),
            OrderKind::TfA => tf_ntf_order(v, k, TrendVariant::A),
            OrderKind::TfB => tf_ntf_order(v, k, TrendVariant::B),
            OrderKind::TfC => tf_ntf_order(v, k, TrendVariant::C),
            OrderKind::Ntf => tf_ntf_order(v, k, TrendVariant::Ntf),
        }
    }
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for OrderKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// `k = m v + t` with `0 <= t < v`.
pub fn m_t(k: usize, v: usize) -> (usize, usize) {
    (k / v, k % v)
}

/// Whether `k >= 2v` falls in the even case where both `pi_TF_C` and
/// `pi_NTF` are candidates (k even, `k/v` not an even integer).
pub fn has_tf_ntf_choice(v: usize, k: usize) -> bool {
    let (m, t) = m_t(k, v);
    k >= 2 * v && k.is_multiple_of(2) && !(t == 0 && m % 2 == 0)
}

fn check_dims(v: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(DesignError::InvalidBlockSize(k));
    }
    if v < 2 {
        return Err(DesignError::invalid(format!("need v >= 2, got {v}")));
    }
    Ok(())
}

/// Which family is optimal for `(v, k, lambda0, lambda1)`.
///
/// Thresholds are strict: at `lambda1 phi^2 = lambda0` the smaller `s*`
/// (respectively `pi_NTF`) is returned; both choices tie there.
pub fn optimal_order_kind(v: usize, k: usize, lambda0: f64, lambda1: f64) -> Result<OrderKind> {
    check_dims(v, k)?;
    check_lambdas(k, lambda0, lambda1)?;
    if k < 2 * v {
        let s = s_star(k, lambda0, lambda1);
        return Ok(if k <= v + s {
            OrderKind::PiQ(s)
        } else {
            OrderKind::PiQ(k - v)
        });
    }
    let (m, t) = m_t(k, v);
    Ok(if k % 2 == 1 {
        OrderKind::TfA
    } else if t == 0 && m % 2 == 0 {
        OrderKind::TfB
    } else if lambda1 * phi_squared(k, k / 2) > lambda0 {
        OrderKind::TfC
    } else {
        OrderKind::Ntf
    })
}

/// An order maximizing `F` over all `v^k` orders.
pub fn optimal_order(v: usize, k: usize, lambda0: f64, lambda1: f64) -> Result<Order> {
    optimal_order_kind(v, k, lambda0, lambda1)?.construct(v, k)
}

/// `-phi(k/2)`, the smallest attainable `|h_i|` for an odd replication when `k` is even.
pub fn half_step(k: usize) -> f64 {
    -phi_at(k, k / 2)
}
