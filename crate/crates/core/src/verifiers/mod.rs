//! Independent numerical oracles used to certify that a reduction preserves
//! the price: exact-step Monte Carlo for lognormal assets, a three-factor
//! simulator for the Vasicek FX model, and finite differences in log space.

mod fd1d;
mod fd2d;
mod grid;
mod mc;
mod rng;
mod stats;
mod vasicek_mc;

use thiserror::Error;

use crate::payoff::PayoffError;

pub use fd1d::{fd_solve_1d, Fd1d};
pub use fd2d::{fd_solve_2d, Fd2d};
pub use grid::FdGrid;
pub use mc::{mc_price, mc_terminal_samples, McConfig};
pub use rng::PathRng;
pub use stats::Welford;
pub use vasicek_mc::{mc_price_vasicek_fx, VasicekMcEstimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("covariance factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("grid too coarse: Richardson error estimate {estimate:e} on value {value:e}")]
    GridTooCoarse { estimate: f64, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Payoff(#[from] PayoffError),
}

/// A price with its error bar: a Monte Carlo standard error or a
/// finite-difference grid error estimate (the other is zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate {
    pub value: f64,
    pub std_error: f64,
    pub grid_error: f64,
}

impl PriceEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            grid_error: 0.0,
        }
    }

    /// Whether `other` lies within `k` standard errors plus grid errors of `self`.
    pub fn agrees_with(&self, other: &PriceEstimate, k: f64) -> bool {
        let sd = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        (self.value - other.value).abs() <= k * sd + self.grid_error + other.grid_error
    }
}
