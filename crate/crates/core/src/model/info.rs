use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use super::{check_lambdas, phi_vector, w_matrix, DesignArray};
use crate::error::{DesignError, Result};

/// A `v x v` treatment information matrix, in units where `sigma0_eps2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix(DMatrix<f64>);

impl InfoMatrix {
    pub fn new(m: DMatrix<f64>) -> Self {
        InfoMatrix(symmetrize(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Largest absolute row sum; zero for a contrast information matrix.
    pub fn max_abs_row_sum(&self) -> f64 {
        self.0.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
    }

    pub fn is_completely_symmetric(&self, tol: f64) -> bool {
        is_completely_symmetric(&self.0, tol)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

impl Serialize for InfoMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Minimal information matrix assembled as
/// `sum_j X_j' W X_j - (1 - k l0)/(bk) r r' - (1 - l1)/b (M phi)(M phi)'`.
pub fn minimal_info_matrix(d: &DesignArray, lambda0: f64, lambda1: f64) -> Result<InfoMatrix> {
    let (k, b, v) = (d.k(), d.b(), d.v());
    let w = w_matrix(k, lambda0, lambda1)?;
    let phi = phi_vector(k)?;

    let mut c = DMatrix::<f64>::zeros(v, v);
    for j in 0..b {
        for p in 0..k {
            let a = d.get(p, j) - 1;
            for q in 0..k {
                c[(a, d.get(q, j) - 1)] += w[(p, q)];
            }
        }
    }

    let r = d.replication_vector();
    let m_phi = m_phi(d, &phi);
    let (kf, bf) = (k as f64, b as f64);
    c -= (&r * r.transpose()) * ((1.0 - kf * lambda0) / (bf * kf));
    c -= (&m_phi * m_phi.transpose()) * ((1.0 - lambda1) / bf);
    Ok(InfoMatrix::new(c))
}

/// The same matrix through the expanded incidence form
/// `R - l0 N N' - l1 sum_j X_j' phi phi' X_j - (1 - k l0)/(bk) r r' - (1 - l1)/b M phi phi' M'`.
pub fn minimal_info_matrix_expanded(
    d: &DesignArray,
    lambda0: f64,
    lambda1: f64,
) -> Result<InfoMatrix> {
    let (k, b) = (d.k(), d.b());
    check_lambdas(k, lambda0, lambda1)?;
    let phi = DVector::from_vec(phi_vector(k)?);
    let r = d.replication_vector();
    let n = d.block_incidence();
    let m = d.unit_incidence();
    let (kf, bf) = (k as f64, b as f64);

    let mut c = DMatrix::from_diagonal(&r);
    c -= (&n * n.transpose()) * lambda0;
    for j in 0..b {
        let g = d.block_matrix(j).transpose() * &phi;
        c -= (&g * g.transpose()) * lambda1;
    }
    c -= (&r * r.transpose()) * ((1.0 - kf * lambda0) / (bf * kf));
    let mp = &m * &phi;
    c -= (&mp * mp.transpose()) * ((1.0 - lambda1) / bf);
    Ok(InfoMatrix::new(c))
}

/// `M_d phi`: per-treatment sum of `phi` over all occupied positions.
pub(crate) fn m_phi(d: &DesignArray, phi: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(d.v());
    for p in 0..d.k() {
        for j in 0..d.b() {
            out[d.get(p, j) - 1] += phi[p];
        }
    }
    out
}

fn check_sigma(d: &DesignArray, sigma: &DMatrix<f64>) -> Result<()> {
    let k = d.k();
    if sigma.nrows() != k || sigma.ncols() != k {
        return Err(DesignError::ShapeMismatch(format!(
            "covariance is {}x{}, block size is {k}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let scale = sigma.amax().max(1.0);
    if (sigma - sigma.transpose()).amax() > 1e-12 * scale {
        return Err(DesignError::invalid("covariance matrix is not symmetric"));
    }
    Ok(())
}

/// GLS information matrix `X'V^-1 X - X'V^-1 Z (Z'V^-1 Z)^-1 Z'V^-1 X` with
/// `V = I_b (x) Sigma` and `Z = (1_bk, 1_b (x) phi)`. Requires a nonsingular `Sigma`.
pub fn full_info_matrix(d: &DesignArray, sigma: &DMatrix<f64>) -> Result<InfoMatrix> {
    check_sigma(d, sigma)?;
    let (k, b, v) = (d.k(), d.b(), d.v());
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or(DesignError::SingularCovariance)?;
    let sigma_inv = chol.inverse();
    let phi = phi_vector(k)?;
    let z0 = DMatrix::from_fn(k, 2, |p, c| if c == 0 { 1.0 } else { phi[p] });
    let sz = &sigma_inv * &z0;

    let mut xvx = DMatrix::<f64>::zeros(v, v);
    let mut xvz = DMatrix::<f64>::zeros(v, 2);
    for j in 0..b {
        let x = d.block_matrix(j);
        xvx += x.transpose() * &sigma_inv * &x;
        xvz += x.transpose() * &sz;
    }
    let zvz = (z0.transpose() * &sz) * b as f64;
    let zvz_inv = zvz.try_inverse().ok_or(DesignError::DegenerateModel)?;
    let c = xvx - &xvz * zvz_inv * xvz.transpose();
    Ok(InfoMatrix::new(c))
}

/// Projector form `X'Q (QVQ)^+ Q X`, `Q = I - Z(Z'Z)^-1 Z'`, using a
/// Moore-Penrose inverse. Used as a cross-check of [`full_info_matrix`].
pub fn full_info_matrix_projector(d: &DesignArray, sigma: &DMatrix<f64>) -> Result<InfoMatrix> {
    check_sigma(d, sigma)?;
    let (k, b) = (d.k(), d.b());
    let n = b * k;
    let phi = phi_vector(k)?;
    let z = DMatrix::from_fn(n, 2, |row, c| if c == 0 { 1.0 } else { phi[row % k] });
    let ztz_inv = (z.transpose() * &z)
        .try_inverse()
        .ok_or(DesignError::DegenerateModel)?;
    let q = DMatrix::<f64>::identity(n, n) - &z * ztz_inv * z.transpose();
    let mut big_v = DMatrix::<f64>::zeros(n, n);
    for j in 0..b {
        big_v.view_mut((j * k, j * k), (k, k)).copy_from(sigma);
    }
    let qvq = symmetrize(&q * big_v * &q);
    let eps = 1e-10 * qvq.amax().max(1.0);
    let pinv = qvq
        .pseudo_inverse(eps)
        .map_err(|e| DesignError::invalid(format!("pseudo-inverse failed: {e}")))?;
    let x = d.incidence();
    let qx = &q * &x;
    Ok(InfoMatrix::new(qx.transpose() * pinv * qx))
}

/// True iff `m = aI + bJ` within `tol * max(1, max |m_ij|)`.
pub fn is_completely_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    if n != m.ncols() {
        return false;
    }
    if n == 0 {
        return true;
    }
    let tol = tol * m.amax().max(1.0);
    let diag = m[(0, 0)];
    let off = if n > 1 { m[(0, 1)] } else { 0.0 };
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { diag } else { off };
            if (m[(i, j)] - target).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m.clone())
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Loewner order test `a >= b`: the smallest eigenvalue of `a - b` is at
/// least `-tol * max(1, largest |entry| of a or b)`.
pub fn loewner_geq(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(DesignError::ShapeMismatch(format!(
            "cannot compare {:?} with {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let scale = a.amax().max(b.amax()).max(1.0);
    Ok(min_eigenvalue(&(a - b)) >= -tol * scale)
}
