//! Coefficient algebra for reducing multi-asset Black-Scholes problems.
//!
//! The `(n+1)`-asset equation
//!
//! ```text
//! V_t + ½ Σ a_ij S_i S_j V_ij + Σ (r - q_i) S_i V_i - r V = 0,   V(S, T) = P(S)
//! ```
//!
//! keeps its form under `z = Π_{i∈G} S_i^{α_i}`, and under the numeraire
//! change `U = V / S_m`, `z_i = S_i / S_m` when `P` is homogeneous of degree
//! one. This module computes the reduced coefficients, rewrites the payoff,
//! and re-validates the reduced covariance.

mod parabolic;
mod plan;
mod problem;
mod transform;

use thiserror::Error;

use crate::payoff::PayoffError;

pub use parabolic::{to_log_parabolic, ParabolicProblem};
pub use plan::{plan_reduction, plan_reduction_with, PlanOptions, ReductionPlan, ReductionStep};
pub use problem::{assert_psd, validate_psd, BlackScholesProblem, PSD_REL_TOL, SYMMETRY_TOL};
pub use transform::{
    apply_group_transform, apply_group_transform_unchecked, apply_group_transform_with_payoff,
    apply_numeraire_change, apply_pair_transform, fold_pair_transforms, numeraire_log_map,
    MultiplicativeTransform,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error(
        "matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e}, trace {trace:e})"
    )]
    NotPsd { min_eigenvalue: f64, trace: f64 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("payoff not reducible: {0}")]
    PayoffNotReducible(PayoffError),
    #[error("payoff is not positively homogeneous of degree one")]
    NotHomogeneous,
    #[error(transparent)]
    Payoff(#[from] PayoffError),
}
