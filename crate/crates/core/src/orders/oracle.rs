//! Exhaustive search over all `v^k` orders.

use rayon::prelude::*;

use super::Order;
use crate::error::{DesignError, Result};
use crate::model::w_matrix;

/// Default cap on the number of orders enumerated.
pub const DEFAULT_ORACLE_BUDGET: u128 = 10_000_000;

/// Two objective values closer than this are treated as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Lexicographically smallest maximizer.
    pub order: Order,
    pub f_max: f64,
    pub evaluated: u128,
}

/// Maximizes `F` over every order in `{1..v}^k`.
///
/// The result is independent of the number of worker threads: the maximum
/// is found first, then the lexicographically first order within
/// `1e-12` of it.
pub fn brute_force_optimal(
    v: usize,
    k: usize,
    lambda0: f64,
    lambda1: f64,
    budget: u128,
) -> Result<BruteForceResult> {
    if v < 1 {
        return Err(DesignError::invalid("need v >= 1"));
    }
    let w = w_matrix(k, lambda0, lambda1)?;
    let total = (v as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > budget {
        return Err(DesignError::BudgetExceeded {
            required: total,
            budget,
        });
    }
    let total = total as u64;
    let wf: Vec<f64> = w.iter().copied().collect(); // column-major, symmetric

    let eval = |idx: u64| -> f64 {
        let mut digits = [0usize; 64];
        let mut x = idx;
        for p in (0..k).rev() {
            digits[p] = (x % v as u64) as usize;
            x /= v as u64;
        }
        let mut f = 0.0;
        for p in 0..k {
            for q in p + 1..k {
                if digits[p] == digits[q] {
                    f += wf[p * k + q];
                }
            }
        }
        f
    };
    if k > 64 {
        return Err(DesignError::invalid("brute force supports k <= 64"));
    }

    let f_max = (0..total)
        .into_par_iter()
        .map(eval)
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let first = (0..total)
        .into_par_iter()
        .find_first(|&i| eval(i) >= f_max - TIE_TOL)
        .expect("maximum is attained");

    let mut entries = vec![0; k];
    let mut x = first;
    for p in (0..k).rev() {
        entries[p] = (x % v as u64) as usize + 1;
        x /= v as u64;
    }
    Ok(BruteForceResult {
        order: Order::new(v, entries)?,
        f_max,
        evaluated: total as u128,
    })
}
