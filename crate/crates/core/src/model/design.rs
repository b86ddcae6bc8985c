use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};

/// A block design viewed as a `k x b` array: rows are the ordered units
/// within a block, columns are blocks, entries are treatment labels `1..=v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDesign", into = "RawDesign")]
pub struct DesignArray {
    v: usize,
    k: usize,
    b: usize,
    /// Row-major `k x b`.
    cells: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawDesign {
    v: usize,
    cells: Vec<Vec<usize>>,
}

impl TryFrom<RawDesign> for DesignArray {
    type Error = DesignError;
    fn try_from(raw: RawDesign) -> Result<Self> {
        DesignArray::from_rows(raw.v, raw.cells)
    }
}

impl From<DesignArray> for RawDesign {
    fn from(d: DesignArray) -> Self {
        RawDesign {
            v: d.v,
            cells: d.rows(),
        }
    }
}

impl DesignArray {
    /// Builds a design from `k` rows of `b` labels each.
    pub fn from_rows(v: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(DesignError::ShapeMismatch("design has no rows".into()));
        }
        let b = rows[0].len();
        if b == 0 {
            return Err(DesignError::ShapeMismatch("design has no columns".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != b) {
            return Err(DesignError::ShapeMismatch(format!(
                "row {} has {} entries, expected {b}",
                bad + 1,
                rows[bad].len()
            )));
        }
        let cells: Vec<usize> = rows.into_iter().flatten().collect();
        Self::from_cells(v, k, b, cells)
    }

    /// Builds a design from `k` columns (blocks), each listing its `k` labels top to bottom.
    pub fn from_columns(v: usize, columns: &[Vec<usize>]) -> Result<Self> {
        let b = columns.len();
        if b == 0 {
            return Err(DesignError::ShapeMismatch("design has no columns".into()));
        }
        let k = columns[0].len();
        if columns.iter().any(|c| c.len() != k) {
            return Err(DesignError::ShapeMismatch("ragged columns".into()));
        }
        let mut cells = vec![0; k * b];
        for (j, col) in columns.iter().enumerate() {
            for (p, &t) in col.iter().enumerate() {
                cells[p * b + j] = t;
            }
        }
        Self::from_cells(v, k, b, cells)
    }

    pub fn from_cells(v: usize, k: usize, b: usize, cells: Vec<usize>) -> Result<Self> {
        if v == 0 {
            return Err(DesignError::invalid("v must be positive"));
        }
        if cells.len() != k * b {
            return Err(DesignError::ShapeMismatch(format!(
                "{} cells for a {k}x{b} design",
                cells.len()
            )));
        }
        if let Some(&bad) = cells.iter().find(|&&t| t == 0 || t > v) {
            return Err(DesignError::invalid(format!(
                "treatment label {bad} outside 1..={v}"
            )));
        }
        Ok(DesignArray { v, k, b, cells })
    }

    pub fn v(&self) -> usize {
        self.v
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn b(&self) -> usize {
        self.b
    }

    /// Label in unit `p` (0-based) of block `j` (0-based).
    pub fn get(&self, p: usize, j: usize) -> usize {
        self.cells[p * self.b + j]
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.cells.chunks(self.b).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<usize> {
        (0..self.k).map(|p| self.get(p, j)).collect()
    }

    /// Replication vector `r_d`.
    pub fn replications(&self) -> Vec<usize> {
        let mut r = vec![0; self.v];
        for &t in &self.cells {
            r[t - 1] += 1;
        }
        r
    }

    /// Treatment x block incidence `N_d` (`v x b`).
    pub fn block_incidence(&self) -> DMatrix<f64> {
        let mut n = DMatrix::zeros(self.v, self.b);
        for p in 0..self.k {
            for j in 0..self.b {
                n[(self.get(p, j) - 1, j)] += 1.0;
            }
        }
        n
    }

    /// Treatment x unit incidence `M_d` (`v x k`).
    pub fn unit_incidence(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.v, self.k);
        for p in 0..self.k {
            for j in 0..self.b {
                m[(self.get(p, j) - 1, p)] += 1.0;
            }
        }
        m
    }

    /// Unit x treatment incidence `X_dj` of block `j` (`k x v`).
    pub fn block_matrix(&self, j: usize) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.k, self.v);
        for p in 0..self.k {
            x[(p, self.get(p, j) - 1)] = 1.0;
        }
        x
    }

    /// Stacked unit x treatment incidence `X_d` (`bk x v`), blocks in order.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.b * self.k, self.v);
        for j in 0..self.b {
            for p in 0..self.k {
                x[(j * self.k + p, self.get(p, j) - 1)] = 1.0;
            }
        }
        x
    }

    pub fn replication_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.v, self.replications().into_iter().map(|r| r as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DesignArray {
        DesignArray::from_rows(
            3,
            vec![vec![1, 2, 3, 1], vec![2, 3, 1, 1], vec![3, 3, 2, 2]],
        )
        .unwrap()
    }

    #[test]
    fn incidence_consistency() {
        let d = sample();
        let r = d.replications();
        assert_eq!(r.iter().sum::<usize>(), d.b() * d.k());
        let n = d.block_incidence();
        let m = d.unit_incidence();
        for i in 0..d.v() {
            assert_eq!(n.row(i).sum(), r[i] as f64);
            assert_eq!(m.row(i).sum(), r[i] as f64);
        }
        for p in 0..d.k() {
            assert_eq!(m.column(p).sum(), d.b() as f64);
        }
        let x = d.incidence();
        assert_eq!(
            x.transpose() * &x,
            DMatrix::from_diagonal(&d.replication_vector())
        );
    }

    #[test]
    fn rejects_bad_labels_and_shapes() {
        assert!(DesignArray::from_rows(2, vec![vec![1, 3]]).is_err());
        assert!(DesignArray::from_rows(2, vec![vec![1, 0]]).is_err());
        assert!(DesignArray::from_rows(2, vec![vec![1, 2], vec![1]]).is_err());
        assert!(DesignArray::from_rows(2, vec![]).is_err());
    }

    #[test]
    fn columns_and_rows_agree() {
        let d = sample();
        let cols: Vec<Vec<usize>> = (0..d.b()).map(|j| d.column(j)).collect();
        assert_eq!(DesignArray::from_columns(3, &cols).unwrap(), d);
    }

    #[test]
    fn serde_roundtrip() {
        let d = sample();
        let s = serde_json::to_string(&d).unwrap();
        let back: DesignArray = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
