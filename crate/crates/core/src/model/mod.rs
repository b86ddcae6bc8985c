//! Mixed trend model: the linear trend polynomial, the reduction of the
//! variance components to the two weights `lambda0`/`lambda1`, and the
//! within-block weight matrix `W = I - lambda0 J - lambda1 phi phi'`.

mod covariance;
mod design;
mod info;

pub use covariance::{
    sample_admissible_sigma, sigma_upper_bound, BoundIntervals, CovarianceMatrixSet,
};
pub use design::DesignArray;
pub use info::{
    full_info_matrix, full_info_matrix_projector, is_completely_symmetric, loewner_geq,
    min_eigenvalue, minimal_info_matrix, minimal_info_matrix_expanded, InfoMatrix,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};

/// Tolerance for positive-semidefinite and Loewner-order decisions (relative).
pub const PSD_TOL: f64 = 1e-8;
/// Tolerance for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Linear orthonormal polynomial on `{1, ..., k}`, indexed from position 1.
pub fn phi_vector(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(DesignError::InvalidBlockSize(k));
    }
    Ok((1..=k).map(|p| phi_at(k, p)).collect())
}

/// `phi(p)` for a 1-based position. Caller guarantees `k >= 2`.
pub(crate) fn phi_at(k: usize, p: usize) -> f64 {
    let kf = k as f64;
    (3.0 / (kf * (kf * kf - 1.0))).sqrt() * (2.0 * p as f64 - kf - 1.0)
}

/// `phi(p)^2` computed from the exact rational `3 (2p-k-1)^2 / (k (k^2-1))`.
pub fn phi_squared(k: usize, p: usize) -> f64 {
    let c = 2 * p as i64 - k as i64 - 1;
    let num = 3 * c * c;
    let den = (k as i64) * (k as i64 * k as i64 - 1);
    num as f64 / den as f64
}

/// A variance component that may be infinite (a fixed effect in the limit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Variance {
    Finite(f64),
    Infinite(InfiniteTag),
}

/// Serialized spelling of an infinite variance component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfiniteTag {
    Inf,
}

impl Variance {
    pub const INFINITE: Variance = Variance::Infinite(InfiniteTag::Inf);

    pub fn is_infinite(&self) -> bool {
        matches!(self, Variance::Infinite(_))
    }

    fn check_nonnegative(&self, name: &str) -> Result<()> {
        match *self {
            Variance::Finite(x) if !(x >= 0.0) || !x.is_finite() => Err(DesignError::invalid(
                format!("{name} must be a finite nonnegative number or inf, got {x}"),
            )),
            _ => Ok(()),
        }
    }
}

impl From<f64> for Variance {
    fn from(x: f64) -> Self {
        if x.is_infinite() && x > 0.0 {
            Variance::INFINITE
        } else {
            Variance::Finite(x)
        }
    }
}

impl FromStr for Variance {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Variance::INFINITE);
        }
        let x: f64 = t
            .parse()
            .map_err(|_| DesignError::invalid(format!("cannot parse variance '{s}'")))?;
        let var = Variance::from(x);
        var.check_nonnegative("variance")?;
        Ok(var)
    }
}

impl fmt::Display for Variance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variance::Finite(x) => write!(f, "{x}"),
            Variance::Infinite(_) => f.write_str("inf"),
        }
    }
}

/// Generating variance components of the upper bound on the block covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub sigma0_eps2: f64,
    pub sigma0_beta2: Variance,
    pub sigma0_theta2: Variance,
}

/// Maps the bounding variance components to `(lambda0, lambda1)`.
///
/// An infinite block variance gives `lambda0 = 1/k` and an infinite slope
/// variance gives `lambda1 = 1`.
pub fn lambdas_from_components(
    sigma0_eps2: f64,
    sigma0_beta2: Variance,
    sigma0_theta2: Variance,
    k: usize,
) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(DesignError::InvalidBlockSize(k));
    }
    if !(sigma0_eps2 > 0.0) || !sigma0_eps2.is_finite() {
        return Err(DesignError::invalid(format!(
            "sigma0_eps2 must be positive and finite, got {sigma0_eps2}"
        )));
    }
    sigma0_beta2.check_nonnegative("sigma0_beta2")?;
    sigma0_theta2.check_nonnegative("sigma0_theta2")?;
    let kf = k as f64;
    let lambda0 = match sigma0_beta2 {
        Variance::Infinite(_) => 1.0 / kf,
        Variance::Finite(b) => b / (sigma0_eps2 + kf * b),
    };
    let lambda1 = match sigma0_theta2 {
        Variance::Infinite(_) => 1.0,
        Variance::Finite(t) => t / (sigma0_eps2 + t),
    };
    Ok((lambda0, lambda1))
}

/// Checks `0 <= lambda0 <= 1/k` and `0 <= lambda1 <= 1`.
pub fn check_lambdas(k: usize, lambda0: f64, lambda1: f64) -> Result<()> {
    if k < 1 {
        return Err(DesignError::InvalidBlockSize(k));
    }
    // Slack so that 1/k computed elsewhere is accepted.
    let slack = 1e-15;
    if !(lambda0 >= 0.0 && lambda0 <= 1.0 / k as f64 + slack) {
        return Err(DesignError::invalid(format!(
            "lambda0={lambda0} outside [0, 1/k] for k={k}"
        )));
    }
    if !(lambda1 >= 0.0 && lambda1 <= 1.0 + slack) {
        return Err(DesignError::invalid(format!(
            "lambda1={lambda1} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Block size and covariance weights of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub k: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<VarianceComponents>,
}

impl ModelParams {
    pub fn new(k: usize, lambda0: f64, lambda1: f64) -> Result<Self> {
        check_lambdas(k, lambda0, lambda1)?;
        Ok(ModelParams {
            k,
            lambda0,
            lambda1,
            components: None,
        })
    }

    pub fn from_components(k: usize, components: VarianceComponents) -> Result<Self> {
        let (lambda0, lambda1) = lambdas_from_components(
            components.sigma0_eps2,
            components.sigma0_beta2,
            components.sigma0_theta2,
            k,
        )?;
        Ok(ModelParams {
            k,
            lambda0,
            lambda1,
            components: Some(components),
        })
    }

    pub fn w_matrix(&self) -> Result<DMatrix<f64>> {
        w_matrix(self.k, self.lambda0, self.lambda1)
    }
}

/// `W = I_k - lambda0 1 1' - lambda1 phi phi'`.
pub fn w_matrix(k: usize, lambda0: f64, lambda1: f64) -> Result<DMatrix<f64>> {
    let phi = phi_vector(k)?;
    check_lambdas(k, lambda0, lambda1)?;
    Ok(DMatrix::from_fn(k, k, |p, q| {
        let id = if p == q { 1.0 } else { 0.0 };
        id - lambda0 - lambda1 * phi[p] * phi[q]
    }))
}
