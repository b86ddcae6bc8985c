//! Trend-free and nearly trend-free orders for `k >= 2v`.
//!
//! Treatments with even replication are mirrored on the outer positions.
//! Treatments with odd replication fill the inner block; their positions are
//! found by a deterministic backtracking search on the integer coordinates
//! `c_p = 2p - k - 1` (proportional to `phi(p)`), which certifies `h_i = 0`
//! (k odd) or `|h_i| = -phi(k/2)`, i.e. `|sum c_p| = 1` (k even).

use super::{m_t, Order};
use crate::error::{DesignError, Result};

/// Which trend-free (or nearly trend-free) construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendVariant {
    /// k odd, replications `m+1` (t treatments) and `m`.
    A,
    /// k even, `k/v` an even integer, all replications `m`, mirror symmetric.
    B,
    /// k even, `k/v` not an even integer, replications in `{xi, xi+2}`, mirror symmetric.
    C,
    /// k even, `k/v` not an even integer, replications `m+1` and `m`.
    Ntf,
}

/// Target for the inner positions of an odd-replicated treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillTarget {
    /// `h_i = 0`.
    Zero,
    /// `|h_i| = -phi(k/2)`, the smallest value possible when k is even.
    HalfStep,
}

const FILL_NODE_BUDGET: u64 = 20_000_000;

/// Assigns the given treatments (label, replication) to `positions`
/// (1-based) so that every treatment meets `target`.
///
/// Returns `(position, label)` pairs sorted by position.
pub fn trend_filler(
    k: usize,
    positions: &[usize],
    treatments: &[(usize, usize)],
    target: FillTarget,
) -> Result<Vec<(usize, usize)>> {
    if k < 2 {
        return Err(DesignError::InvalidBlockSize(k));
    }
    let total: usize = treatments.iter().map(|&(_, n)| n).sum();
    if total != positions.len() {
        return Err(DesignError::invalid(format!(
            "{total} replications for {} positions",
            positions.len()
        )));
    }
    if let Some(&bad) = positions.iter().find(|&&p| p == 0 || p > k) {
        return Err(DesignError::invalid(format!(
            "position {bad} outside 1..={k}"
        )));
    }
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(DesignError::invalid("duplicate positions"));
    }

    let targets: &[i64] = match target {
        FillTarget::Zero => {
            for &(label, n) in treatments {
                if !(n * (k + 1)).is_multiple_of(2) {
                    return Err(DesignError::infeasible(format!(
                        "parity condition n_i(k+1) = 0 (mod 2) fails for treatment {label} \
                         (n_i = {n}, k = {k})"
                    )));
                }
            }
            &[0]
        }
        FillTarget::HalfStep => {
            if !k.is_multiple_of(2) {
                return Err(DesignError::invalid("half-step target needs even k"));
            }
            if let Some(&(label, n)) = treatments.iter().find(|&&(_, n)| n % 2 == 0) {
                return Err(DesignError::invalid(format!(
                    "treatment {label} has even replication {n}; half-step applies to odd replications"
                )));
            }
            &[-1, 1]
        }
    };

    let coords: Vec<i64> = sorted
        .iter()
        .map(|&p| 2 * p as i64 - k as i64 - 1)
        .collect();
    let mut search = Search {
        coords: &coords,
        used: vec![false; coords.len()],
        owner: vec![usize::MAX; coords.len()],
        treatments,
        targets,
        nodes: 0,
    };
    match search.assign(0) {
        Some(true) => {}
        Some(false) => {
            return Err(DesignError::infeasible(format!(
                "no placement of the replications {:?} on positions {:?} meets the trend target",
                treatments.iter().map(|t| t.1).collect::<Vec<_>>(),
                sorted
            )))
        }
        None => {
            return Err(DesignError::infeasible(format!(
                "trend placement search exhausted its budget of {FILL_NODE_BUDGET} nodes"
            )))
        }
    }
    Ok(sorted
        .iter()
        .zip(&search.owner)
        .map(|(&p, &t)| (p, treatments[t].0))
        .collect())
}

struct Search<'a> {
    coords: &'a [i64],
    used: Vec<bool>,
    owner: Vec<usize>,
    treatments: &'a [(usize, usize)],
    targets: &'a [i64],
    nodes: u64,
}

impl Search<'_> {
    /// `Some(true)` on success, `Some(false)` when exhausted, `None` over budget.
    fn assign(&mut self, t: usize) -> Option<bool> {
        if t == self.treatments.len() {
            return Some(true);
        }
        let free: Vec<usize> = (0..self.coords.len()).filter(|&i| !self.used[i]).collect();
        let n = self.treatments[t].1;
        for &goal in self.targets {
            let mut chosen = Vec::with_capacity(n);
            match self.subset(t, &free, 0, n, goal, &mut chosen) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => return None,
            }
        }
        Some(false)
    }

    /// Chooses `need` more entries of `free[from..]` summing to `goal`, then recurses.
    fn subset(
        &mut self,
        t: usize,
        free: &[usize],
        from: usize,
        need: usize,
        goal: i64,
        chosen: &mut Vec<usize>,
    ) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > FILL_NODE_BUDGET {
            return None;
        }
        if need == 0 {
            if goal != 0 {
                return Some(false);
            }
            for &i in chosen.iter() {
                self.used[i] = true;
                self.owner[i] = t;
            }
            let res = self.assign(t + 1);
            if res != Some(true) {
                for &i in chosen.iter() {
                    self.used[i] = false;
                    self.owner[i] = usize::MAX;
                }
            }
            return res;
        }
        let rest = &free[from..];
        if rest.len() < need {
            return Some(false);
        }
        // coords are increasing, so the extreme sums come from the ends.
        let lo: i64 = rest[..need].iter().map(|&i| self.coords[i]).sum();
        let hi: i64 = rest[rest.len() - need..]
            .iter()
            .map(|&i| self.coords[i])
            .sum();
        if goal < lo || goal > hi {
            return Some(false);
        }
        for idx in from..=free.len() - need {
            let i = free[idx];
            chosen.push(i);
            let res = self.subset(t, free, idx + 1, need - 1, goal - self.coords[i], chosen);
            chosen.pop();
            match res {
                Some(false) => {}
                other => return other,
            }
        }
        Some(false)
    }
}

/// Builds a representative order of the requested variant for `k >= 2v`.
///
/// Labels follow the replication pattern: treatments `1..=t` carry `m+1`
/// (variants A and NTF), or the larger replication `xi+2` (variant C).
pub fn tf_ntf_order(v: usize, k: usize, variant: TrendVariant) -> Result<Order> {
    if v < 1 {
        return Err(DesignError::invalid("need v >= 1"));
    }
    if k < 2 * v {
        return Err(DesignError::invalid(format!(
            "trend-free constructions need k >= 2v (k={k}, v={v})"
        )));
    }
    let (m, t) = m_t(k, v);
    let k_even = k.is_multiple_of(2);
    let ratio_even_int = t == 0 && m % 2 == 0;
    let mismatch = |why: &str| {
        Err(DesignError::invalid(format!(
            "variant {variant:?} does not apply to k={k}, v={v}: {why}"
        )))
    };
    match variant {
        TrendVariant::A if k_even => return mismatch("k must be odd"),
        TrendVariant::B if !(k_even && ratio_even_int) => {
            return mismatch("k/v must be an even integer")
        }
        TrendVariant::C | TrendVariant::Ntf if !k_even || ratio_even_int => {
            return mismatch("k must be even with k/v not an even integer")
        }
        _ => {}
    }

    let entries = match variant {
        TrendVariant::B => mirror(k, &vec![m; v]),
        TrendVariant::C => {
            let xi = if m % 2 == 0 { m } else { m - 1 };
            let big = (k - v * xi) / 2;
            let reps: Vec<usize> = (0..v).map(|i| if i < big { xi + 2 } else { xi }).collect();
            mirror(k, &reps)
        }
        TrendVariant::A | TrendVariant::Ntf => {
            let reps: Vec<usize> = (0..v).map(|i| if i < t { m + 1 } else { m }).collect();
            let target = if variant == TrendVariant::A {
                FillTarget::Zero
            } else {
                FillTarget::HalfStep
            };
            outer_inner(k, &reps, target)?
        }
    };
    Order::new(v, relabel_by_first_appearance(&entries))
}

/// Renames labels so they read 1, 2, ... in order of first appearance.
fn relabel_by_first_appearance(entries: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    entries
        .iter()
        .map(|&l| {
            let next = map.len() + 1;
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Mirror-symmetric order with treatment `i+1` occupying `reps[i] / 2`
/// consecutive places in the first half, in label order.
fn mirror(k: usize, reps: &[usize]) -> Vec<usize> {
    let mut half = Vec::with_capacity(k / 2);
    for (i, &n) in reps.iter().enumerate() {
        debug_assert!(n % 2 == 0);
        half.extend(std::iter::repeat_n(i + 1, n / 2));
    }
    debug_assert_eq!(2 * half.len(), k);
    let mut out = half.clone();
    out.extend(half.iter().rev());
    out
}

/// Even replications mirrored on the outside, odd ones placed inside by search.
fn outer_inner(k: usize, reps: &[usize], target: FillTarget) -> Result<Vec<usize>> {
    let mut outer = Vec::new();
    let mut odd = Vec::new();
    for (i, &n) in reps.iter().enumerate() {
        if n % 2 == 0 {
            outer.extend(std::iter::repeat_n(i + 1, n / 2));
        } else {
            if n < 3 {
                return Err(DesignError::infeasible(format!(
                    "treatment {} has odd replication {n}; the construction needs n_i >= 3",
                    i + 1
                )));
            }
            odd.push((i + 1, n));
        }
    }
    let w = outer.len();
    let mut entries = vec![0; k];
    for (p, &lab) in outer.iter().enumerate() {
        entries[p] = lab;
        entries[k - 1 - p] = lab;
    }
    let inner: Vec<usize> = (w + 1..=k - w).collect();
    for (pos, lab) in trend_filler(k, &inner, &odd, target)? {
        entries[pos - 1] = lab;
    }
    Ok(entries)
}
