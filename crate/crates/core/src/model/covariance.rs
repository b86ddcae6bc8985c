use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{min_eigenvalue, phi_vector, PSD_TOL};
use crate::error::{DesignError, Result};

/// Components of the per-block covariance `Sigma = V(Y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrixSet {
    pub sigma_beta2: f64,
    pub sigma_theta2: f64,
    pub sigma_beta_theta: f64,
    pub v_delta_beta: DVector<f64>,
    pub v_delta_theta: DVector<f64>,
    pub v_delta_delta: DMatrix<f64>,
}

impl CovarianceMatrixSet {
    /// Uncorrelated components: `V_dd = eps2 I`, no cross covariances.
    pub fn uncorrelated(k: usize, eps2: f64, sigma_beta2: f64, sigma_theta2: f64) -> Self {
        CovarianceMatrixSet {
            sigma_beta2,
            sigma_theta2,
            sigma_beta_theta: 0.0,
            v_delta_beta: DVector::zeros(k),
            v_delta_theta: DVector::zeros(k),
            v_delta_delta: DMatrix::identity(k, k) * eps2,
        }
    }

    /// Assembles
    /// `s_b^2 11' + s_t^2 pp' + V_dd + s_bt (1p' + p1') + (1V_db' + V_db1') + (pV_dt' + V_dt p')`
    /// and checks the result is a covariance matrix.
    pub fn assemble(&self, k: usize) -> Result<DMatrix<f64>> {
        let phi = DVector::from_vec(phi_vector(k)?);
        if self.v_delta_beta.len() != k
            || self.v_delta_theta.len() != k
            || self.v_delta_delta.shape() != (k, k)
        {
            return Err(DesignError::ShapeMismatch(format!(
                "covariance components do not match block size {k}"
            )));
        }
        let ones = DVector::from_element(k, 1.0);
        let sigma = &ones * ones.transpose() * self.sigma_beta2
            + &phi * phi.transpose() * self.sigma_theta2
            + &self.v_delta_delta
            + (&ones * phi.transpose() + &phi * ones.transpose()) * self.sigma_beta_theta
            + (&ones * self.v_delta_beta.transpose() + &self.v_delta_beta * ones.transpose())
            + (&phi * self.v_delta_theta.transpose() + &self.v_delta_theta * phi.transpose());
        let scale = sigma.amax().max(1.0);
        if (&sigma - sigma.transpose()).amax() > 1e-12 * scale {
            return Err(DesignError::invalid("V_delta_delta is not symmetric"));
        }
        if min_eigenvalue(&sigma) < -PSD_TOL * scale {
            return Err(DesignError::invalid(
                "assembled covariance is not positive semidefinite",
            ));
        }
        Ok(sigma)
    }
}

/// Upper bound `eps2 I + beta2 11' + theta2 phi phi'` on the block covariance.
pub fn sigma_upper_bound(
    sigma0_eps2: f64,
    sigma0_beta2: f64,
    sigma0_theta2: f64,
    k: usize,
) -> Result<DMatrix<f64>> {
    let phi = phi_vector(k)?;
    if !(sigma0_eps2 > 0.0) || !sigma0_eps2.is_finite() {
        return Err(DesignError::invalid(
            "sigma0_eps2 must be positive and finite",
        ));
    }
    for (name, x) in [
        ("sigma0_beta2", sigma0_beta2),
        ("sigma0_theta2", sigma0_theta2),
    ] {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(DesignError::invalid(format!(
                "{name} must be nonnegative and finite, got {x}"
            )));
        }
    }
    Ok(DMatrix::from_fn(k, k, |p, q| {
        let id = if p == q { sigma0_eps2 } else { 0.0 };
        id + sigma0_beta2 + sigma0_theta2 * phi[p] * phi[q]
    }))
}

/// Admissible ranges for the bounding components given assumed values:
/// each bounding component lies in `[assumed, 4 * assumed]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundIntervals {
    pub e_max_a: f64,
    pub sigma_beta_a: f64,
    pub sigma_theta_a: f64,
}

impl BoundIntervals {
    pub fn new(e_max_a: f64, sigma_beta_a: f64, sigma_theta_a: f64) -> Self {
        BoundIntervals {
            e_max_a,
            sigma_beta_a,
            sigma_theta_a,
        }
    }

    pub fn contains(&self, sigma0_eps2: f64, sigma0_beta2: f64, sigma0_theta2: f64) -> bool {
        let within = |x: f64, a: f64| x >= a && x <= 4.0 * a;
        within(sigma0_eps2, self.e_max_a)
            && within(sigma0_beta2, self.sigma_beta_a)
            && within(sigma0_theta2, self.sigma_theta_a)
    }
}

/// Draws a positive definite `Sigma` with `bound - Sigma` positive semidefinite.
///
/// A random PSD direction `E` is scaled by `c = u * c_max`, `u` in
/// `[0.05, 0.95]`, where `c_max` is the largest step keeping `bound - cE`
/// PSD (found by bisection).
pub fn sample_admissible_sigma<R: Rng + ?Sized>(bound: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
    let k = bound.nrows();
    let a = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    let e = &a * a.transpose();
    let psd = |c: f64| min_eigenvalue(&(bound - &e * c)) >= 0.0;

    let mut hi = 1.0;
    let mut doublings = 0;
    while psd(hi) && doublings < 60 {
        hi *= 2.0;
        doublings += 1;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if psd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = rng.gen_range(0.05..0.95);
    let sigma = bound - e * (u * lo);
    (&sigma + sigma.transpose()) * 0.5
}
