//! Closed-form prices for the reduced problems.

mod basket;
mod foreign;
mod piecewise;
mod vanilla;
mod vasicek;

use thiserror::Error;

use crate::reduction::ReductionError;

pub use basket::{price_geometric_basket, GeometricBasketParams};
pub use foreign::{foreign_strike_variance, price_foreign_strike, ForeignStrikeParams};
pub use piecewise::PiecewiseLinear;
pub use vanilla::{bs_vanilla, price_closed_form_1d, price_piecewise_payoff, OptionKind};
pub use vasicek::{
    fx_vol_integral, price_fx_option_vasicek, vasicek_bond, vasicek_short_rate, FxState,
    VasicekFxParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("basket weights must be nonnegative and sum to 1 (sum {sum})")]
    WeightsNotSimplex { sum: f64 },
    #[error("no closed form: {0}")]
    NoClosedForm(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), PricingError> {
    if cond {
        Ok(())
    } else {
        Err(PricingError::InvalidInput(msg()))
    }
}
