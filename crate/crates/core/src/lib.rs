//! Maximin universally optimal block designs for comparing treatments on
//! units that are linearly ordered within blocks, under a mixed model with
//! random block effects and random linear trends.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: trend polynomial, covariance weights, information matrices.
//! * [`orders`]: within-block order statistics and optimal order selection.
//! * [`sba`]: semibalanced arrays (orthogonal arrays of type II, strength 2).
//! * [`builder`]: assembly and certification of optimal designs.
//! * [`efficiency`]: closed-form traces, efficiency ratios and breakpoints.

// Range checks are written as `!(x >= 0.0)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builder;
pub mod efficiency;
pub mod error;
pub mod model;
pub mod orders;
pub mod sba;

pub use error::{DesignError, Result};
pub use model::{DesignArray, InfoMatrix, ModelParams, Variance, VarianceComponents};
