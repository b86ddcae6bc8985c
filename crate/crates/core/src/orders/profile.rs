use super::m_t;
use crate::error::{DesignError, Result};

/// Replication multiset minimizing `sum n_i^2` among orders of even length
/// `k >= 2v` with exactly `u` odd-replicated treatments. Sorted descending.
pub fn min_ssq_profile(k: usize, v: usize, u: usize) -> Result<Vec<usize>> {
    if v == 0 || k < 2 * v || !k.is_multiple_of(2) {
        return Err(DesignError::invalid(format!(
            "profile needs even k >= 2v (k={k}, v={v})"
        )));
    }
    if u > v {
        return Err(DesignError::invalid(format!("u={u} exceeds v={v}")));
    }
    if !u.is_multiple_of(2) {
        return Err(DesignError::infeasible(format!(
            "no order of even length {k} has an odd number ({u}) of odd replications"
        )));
    }
    let (m, t) = m_t(k, v);
    // (replication, count) pairs.
    let parts: [(usize, usize); 3] = if m % 2 == 0 {
        if u <= t {
            [(m, v - (u + t) / 2), (m + 1, u), (m + 2, (t - u) / 2)]
        } else {
            [(m - 1, (u - t) / 2), (m, v - u), (m + 1, (u + t) / 2)]
        }
    } else if u <= v - t {
        [(m - 1, (v - u - t) / 2), (m, u), (m + 1, (v - u + t) / 2)]
    } else {
        [
            (m, (u + v - t) / 2),
            (m + 1, v - u),
            (m + 2, (u + t - v) / 2),
        ]
    };
    let mut out: Vec<usize> = parts
        .iter()
        .flat_map(|&(n, c)| std::iter::repeat_n(n, c))
        .collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    debug_assert_eq!(out.len(), v);
    debug_assert_eq!(out.iter().sum::<usize>(), k);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All partitions of `k` into exactly `v` nonnegative parts (as sorted
    /// descending vectors) with exactly `u` odd parts; returns the minimum
    /// sum of squares.
    fn brute_min_ssq(k: usize, v: usize, u: usize) -> Option<usize> {
        fn rec(
            rem: usize,
            slots: usize,
            max: usize,
            cur: &mut Vec<usize>,
            u: usize,
            best: &mut Option<usize>,
        ) {
            if slots == 0 {
                if rem == 0 && cur.iter().filter(|&&n| n % 2 == 1).count() == u {
                    let s = cur.iter().map(|n| n * n).sum();
                    *best = Some(best.map_or(s, |b: usize| b.min(s)));
                }
                return;
            }
            for n in (0..=max.min(rem)).rev() {
                cur.push(n);
                rec(rem - n, slots - 1, n, cur, u, best);
                cur.pop();
            }
        }
        let mut best = None;
        rec(k, v, k, &mut Vec::new(), u, &mut best);
        best
    }

    #[test]
    fn k10_v4_examples() {
        let p = min_ssq_profile(10, 4, 2).unwrap();
        assert_eq!(p, vec![3, 3, 2, 2]);
        let ssq: usize = p.iter().map(|n| n * n).sum();
        assert_eq!(ssq, 26);
        assert_eq!((ssq - 10) / 2, 8);
        assert_eq!(min_ssq_profile(10, 4, 4).unwrap(), vec![3, 3, 3, 1]);
        assert_eq!(brute_min_ssq(10, 4, 2), Some(26));
    }

    #[test]
    fn balanced_when_no_odd() {
        assert_eq!(min_ssq_profile(12, 3, 0).unwrap(), vec![4, 4, 4]);
        assert_eq!(min_ssq_profile(8, 4, 0).unwrap(), vec![2, 2, 2, 2]);
    }

    #[test]
    fn matches_partition_enumeration() {
        for v in 1..=5 {
            for k in (2 * v..=16).filter(|k| k % 2 == 0) {
                for u in (0..=v).step_by(2) {
                    let p = min_ssq_profile(k, v, u).unwrap();
                    assert_eq!(
                        p.iter().filter(|&&n| n % 2 == 1).count(),
                        u,
                        "k={k} v={v} u={u}"
                    );
                    let ssq: usize = p.iter().map(|n| n * n).sum();
                    assert_eq!(Some(ssq), brute_min_ssq(k, v, u), "k={k} v={v} u={u}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(min_ssq_profile(9, 4, 2).is_err());
        assert!(min_ssq_profile(6, 4, 2).is_err());
        assert!(matches!(
            min_ssq_profile(10, 4, 3),
            Err(DesignError::Infeasible { .. })
        ));
        assert!(min_ssq_profile(10, 4, 5).is_err());
    }
}
