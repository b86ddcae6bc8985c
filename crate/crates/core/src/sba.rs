//! Semibalanced arrays (orthogonal arrays of type II, strength 2).
//!
//! A `kstar x b` array over `v` symbols is semibalanced when every column
//! holds distinct symbols and every pair of rows contains each unordered
//! pair of distinct symbols equally often. The arrays produced here are
//! also row-uniform: each row holds every symbol `b / v` times.

use serde::Serialize;

use crate::error::{DesignError, Result};

/// Node budget for the backtracking fallback.
pub const SEARCH_BUDGET: u64 = 2_000_000;
/// Largest base array the fallback search will attempt.
const SEARCH_MAX_COLUMNS: usize = 120;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemibalancedArray {
    v: usize,
    kstar: usize,
    b: usize,
    /// Row-major `kstar x b`, symbols `1..=v`.
    cells: Vec<usize>,
}

impl Serialize for SemibalancedArray {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SemibalancedArray", 4)?;
        st.serialize_field("v", &self.v)?;
        st.serialize_field("kstar", &self.kstar)?;
        st.serialize_field("b", &self.b)?;
        st.serialize_field("cells", &self.rows())?;
        st.end()
    }
}

impl SemibalancedArray {
    /// Wraps rows after checking them with [`verify_sba`].
    pub fn from_rows(v: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let report = verify_sba(v, &rows);
        if !report.is_sba {
            return Err(DesignError::invalid(format!(
                "not a semibalanced array: {} violation(s), first: {:?}",
                report.violations.len(),
                report.violations.first()
            )));
        }
        let kstar = rows.len();
        let b = rows[0].len();
        Ok(SemibalancedArray {
            v,
            kstar,
            b,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    pub fn v(&self) -> usize {
        self.v
    }
    pub fn kstar(&self) -> usize {
        self.kstar
    }
    pub fn b(&self) -> usize {
        self.b
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.cells[row * self.b + col]
    }

    pub fn row(&self, row: usize) -> &[usize] {
        &self.cells[row * self.b..(row + 1) * self.b]
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.cells.chunks(self.b).map(|r| r.to_vec()).collect()
    }

    pub fn is_row_uniform(&self) -> bool {
        rows_uniform(self.v, &self.rows())
    }

    /// Horizontal concatenation of `copies` copies.
    pub fn replicate(&self, copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(DesignError::invalid("copies must be at least 1"));
        }
        let rows = self
            .rows()
            .into_iter()
            .map(|r| r.repeat(copies))
            .collect::<Vec<_>>();
        Ok(SemibalancedArray {
            v: self.v,
            kstar: self.kstar,
            b: self.b * copies,
            cells: rows.into_iter().flatten().collect(),
        })
    }
}

/// Free-function form of [`SemibalancedArray::replicate`].
pub fn replicate_sba(a: &SemibalancedArray, copies: usize) -> Result<SemibalancedArray> {
    a.replicate(copies)
}

/// One failed condition found by [`verify_sba`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Shape {
        detail: String,
    },
    OutOfRange {
        row: usize,
        column: usize,
        value: usize,
    },
    RepeatedSymbol {
        column: usize,
        symbol: usize,
    },
    PairImbalance {
        rows: (usize, usize),
        pair: (usize, usize),
        count: usize,
        expected: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SbaReport {
    pub is_sba: bool,
    pub row_uniform: bool,
    /// `b / (v(v-1)/2)` when integral: the number of times each pair occurs per row pair.
    pub pair_multiplicity: Option<usize>,
    pub violations: Vec<Violation>,
}

/// Checks column distinctness and equal pair frequencies. Rows and columns
/// in the report are 1-based. Never fails; problems are listed.
pub fn verify_sba(v: usize, rows: &[Vec<usize>]) -> SbaReport {
    let mut violations = Vec::new();
    let kstar = rows.len();
    let b = rows.first().map_or(0, |r| r.len());
    let pairs_total = v * v.saturating_sub(1) / 2;
    let pair_multiplicity =
        (pairs_total > 0 && b.is_multiple_of(pairs_total)).then(|| b / pairs_total);

    if kstar == 0 || b == 0 || rows.iter().any(|r| r.len() != b) {
        violations.push(Violation::Shape {
            detail: "array must be a nonempty rectangle".into(),
        });
        return SbaReport {
            is_sba: false,
            row_uniform: false,
            pair_multiplicity,
            violations,
        };
    }
    let mut in_range = true;
    for (r, row) in rows.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            if x == 0 || x > v {
                in_range = false;
                violations.push(Violation::OutOfRange {
                    row: r + 1,
                    column: c + 1,
                    value: x,
                });
            }
        }
    }
    if !in_range {
        return SbaReport {
            is_sba: false,
            row_uniform: false,
            pair_multiplicity,
            violations,
        };
    }

    for c in 0..b {
        let mut seen = vec![false; v + 1];
        for row in rows {
            let x = row[c];
            if seen[x] {
                violations.push(Violation::RepeatedSymbol {
                    column: c + 1,
                    symbol: x,
                });
            }
            seen[x] = true;
        }
    }

    if kstar >= 2 && pairs_total > 0 {
        let expected = b as f64 / pairs_total as f64;
        for r1 in 0..kstar {
            for r2 in r1 + 1..kstar {
                let mut counts = vec![0usize; (v + 1) * (v + 1)];
                for c in 0..b {
                    let (x, y) = (rows[r1][c], rows[r2][c]);
                    if x != y {
                        let (lo, hi) = (x.min(y), x.max(y));
                        counts[lo * (v + 1) + hi] += 1;
                    }
                }
                for lo in 1..=v {
                    for hi in lo + 1..=v {
                        let count = counts[lo * (v + 1) + hi];
                        if count as f64 != expected {
                            violations.push(Violation::PairImbalance {
                                rows: (r1 + 1, r2 + 1),
                                pair: (lo, hi),
                                count,
                                expected,
                            });
                        }
                    }
                }
            }
        }
    }

    SbaReport {
        is_sba: violations.is_empty(),
        row_uniform: rows_uniform(v, rows),
        pair_multiplicity,
        violations,
    }
}

fn rows_uniform(v: usize, rows: &[Vec<usize>]) -> bool {
    rows.iter().all(|row| {
        if row.len() % v != 0 {
            return false;
        }
        let mut counts = vec![0usize; v + 1];
        for &x in row {
            if x == 0 || x > v {
                return false;
            }
            counts[x] += 1;
        }
        counts[1..].iter().all(|&c| c == row.len() / v)
    })
}

pub fn is_prime(n: usize) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Smallest column count compatible with pair balance and row uniformity.
fn counting_unit(v: usize, kstar: usize) -> usize {
    if kstar >= 2 {
        lcm(v * (v - 1) / 2, v)
    } else {
        v
    }
}

/// Number of ordered `kstar`-tuples of distinct symbols.
fn falling_factorial(v: usize, kstar: usize) -> usize {
    (v - kstar + 1..=v).product()
}

fn check_args(v: usize, kstar: usize, b: usize) -> Result<()> {
    if v < 2 {
        return Err(DesignError::invalid(format!("need v >= 2, got {v}")));
    }
    if kstar == 0 || kstar > v {
        return Err(DesignError::invalid(format!(
            "need 1 <= kstar <= v, got kstar={kstar}, v={v}"
        )));
    }
    if b == 0 {
        return Err(DesignError::invalid("b must be positive"));
    }
    Ok(())
}

/// Constructs a row-uniform `kstar x b` semibalanced array on `v` symbols.
///
/// Odd prime `v`: the cyclic difference array with `v(v-1)/2` columns,
/// `(a, e) -> a + i e mod v` in row `i`, truncated to `kstar` rows and
/// concatenated. Other `v`: a budgeted backtracking search, with the array of
/// all ordered tuples as a last resort. Failure is an `Infeasible` error that
/// names the smallest supported `b`; it is not a nonexistence claim unless the
/// counting conditions fail.
pub fn construct_sba(v: usize, kstar: usize, b: usize) -> Result<SemibalancedArray> {
    check_args(v, kstar, b)?;
    let unit = counting_unit(v, kstar);
    if !b.is_multiple_of(unit) {
        let reason = if kstar >= 2 {
            format!(
                "counting argument: pair balance needs v(v-1)/2 = {} | b and row uniformity needs v = {v} | b, \
                 but b = {b}",
                v * (v - 1) / 2
            )
        } else {
            format!("row uniformity needs v = {v} | b, but b = {b}")
        };
        return Err(DesignError::Infeasible {
            reason,
            smallest_b: smallest_supported_b(v, kstar),
        });
    }

    if kstar == 1 {
        let row: Vec<usize> = (0..b).map(|c| c % v + 1).collect();
        return Ok(SemibalancedArray {
            v,
            kstar,
            b,
            cells: row,
        });
    }

    if v % 2 == 1 && is_prime(v) {
        return difference_array(v, kstar).replicate(b / (v * (v - 1) / 2));
    }

    for base in (unit..=b.min(SEARCH_MAX_COLUMNS)).step_by(unit) {
        if !b.is_multiple_of(base) {
            continue;
        }
        if let Some(a) = search_array(v, kstar, base) {
            return a.replicate(b / base);
        }
    }
    let full = falling_factorial(v, kstar);
    if b.is_multiple_of(full) {
        return complete_array(v, kstar).replicate(b / full);
    }
    Err(DesignError::Infeasible {
        reason: format!("no {kstar}x{b} semibalanced array on {v} symbols found within budget"),
        smallest_b: smallest_supported_b(v, kstar),
    })
}

/// Smallest `b` for which [`construct_sba`] succeeds.
pub fn smallest_supported_b(v: usize, kstar: usize) -> Option<usize> {
    if v < 2 || kstar == 0 || kstar > v {
        return None;
    }
    let unit = counting_unit(v, kstar);
    if kstar == 1 || (v % 2 == 1 && is_prime(v)) {
        return Some(unit);
    }
    let full = falling_factorial(v, kstar);
    let mut base = unit;
    while base < full && base <= SEARCH_MAX_COLUMNS {
        if search_array(v, kstar, base).is_some() {
            return Some(base);
        }
        base += unit;
    }
    Some(full)
}

fn difference_array(v: usize, kstar: usize) -> SemibalancedArray {
    let half = (v - 1) / 2;
    let b = v * half;
    let mut cells = vec![0; kstar * b];
    for i in 0..kstar {
        for e in 1..=half {
            for a in 0..v {
                let col = (e - 1) * v + a;
                cells[i * b + col] = (a + i * e) % v + 1;
            }
        }
    }
    SemibalancedArray { v, kstar, b, cells }
}

/// Ordered `kstar`-tuples of distinct symbols, lexicographic.
fn tuples(v: usize, kstar: usize) -> Vec<Vec<usize>> {
    fn rec(v: usize, kstar: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == kstar {
            out.push(cur.clone());
            return;
        }
        for x in 1..=v {
            if !cur.contains(&x) {
                cur.push(x);
                rec(v, kstar, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(v, kstar, &mut Vec::new(), &mut out);
    out
}

fn from_columns(v: usize, kstar: usize, cols: &[&Vec<usize>]) -> SemibalancedArray {
    let b = cols.len();
    let mut cells = vec![0; kstar * b];
    for (c, col) in cols.iter().enumerate() {
        for i in 0..kstar {
            cells[i * b + c] = col[i];
        }
    }
    SemibalancedArray { v, kstar, b, cells }
}

fn complete_array(v: usize, kstar: usize) -> SemibalancedArray {
    let all = tuples(v, kstar);
    let refs: Vec<&Vec<usize>> = all.iter().collect();
    from_columns(v, kstar, &refs)
}

/// Backtracking over multisets of columns. The first column is fixed to
/// `(1, ..., kstar)` (any array can be relabeled so), the rest are chosen in
/// nondecreasing tuple index.
fn search_array(v: usize, kstar: usize, b: usize) -> Option<SemibalancedArray> {
    let all = tuples(v, kstar);
    let lambda = b / (v * (v - 1) / 2);
    let per_symbol = b / v;
    let npairs = kstar * (kstar - 1) / 2;
    let mut st = SearchState {
        all: &all,
        v,
        kstar,
        b,
        lambda,
        per_symbol,
        pair_counts: vec![0; npairs * (v + 1) * (v + 1)],
        row_counts: vec![0; kstar * (v + 1)],
        chosen: Vec::with_capacity(b),
        nodes: 0,
    };
    if !st.push(0) {
        return None;
    }
    if st.extend(0) == Some(true) {
        let cols: Vec<&Vec<usize>> = st.chosen.iter().map(|&i| &all[i]).collect();
        Some(from_columns(v, kstar, &cols))
    } else {
        None
    }
}

struct SearchState<'a> {
    all: &'a [Vec<usize>],
    v: usize,
    kstar: usize,
    b: usize,
    lambda: usize,
    per_symbol: usize,
    pair_counts: Vec<usize>,
    row_counts: Vec<usize>,
    chosen: Vec<usize>,
    nodes: u64,
}

impl SearchState<'_> {
    fn pair_slot(&self, rp: usize, x: usize, y: usize) -> usize {
        let (lo, hi) = (x.min(y), x.max(y));
        (rp * (self.v + 1) + lo) * (self.v + 1) + hi
    }

    fn apply(&mut self, idx: usize, delta: isize) {
        let col = &self.all[idx];
        let mut rp = 0;
        for i in 0..self.kstar {
            let rc = i * (self.v + 1) + col[i];
            self.row_counts[rc] = (self.row_counts[rc] as isize + delta) as usize;
            for j in i + 1..self.kstar {
                let s = self.pair_slot(rp, col[i], col[j]);
                self.pair_counts[s] = (self.pair_counts[s] as isize + delta) as usize;
                rp += 1;
            }
        }
    }

    /// Adds a column if it keeps every count within its cap.
    fn push(&mut self, idx: usize) -> bool {
        let col = &self.all[idx];
        let mut rp = 0;
        for i in 0..self.kstar {
            if self.row_counts[i * (self.v + 1) + col[i]] >= self.per_symbol {
                return false;
            }
            for j in i + 1..self.kstar {
                if self.pair_counts[self.pair_slot(rp, col[i], col[j])] >= self.lambda {
                    return false;
                }
                rp += 1;
            }
        }
        self.apply(idx, 1);
        self.chosen.push(idx);
        true
    }

    fn pop(&mut self) {
        let idx = self.chosen.pop().expect("nonempty");
        self.apply(idx, -1);
    }

    fn extend(&mut self, min_idx: usize) -> Option<bool> {
        if self.chosen.len() == self.b {
            return Some(true);
        }
        for idx in min_idx..self.all.len() {
            self.nodes += 1;
            if self.nodes > SEARCH_BUDGET {
                return None;
            }
            if self.push(idx) {
                match self.extend(idx) {
                    Some(true) => return Some(true),
                    Some(false) => self.pop(),
                    None => {
                        self.pop();
                        return None;
                    }
                }
            }
        }
        Some(false)
    }
}
