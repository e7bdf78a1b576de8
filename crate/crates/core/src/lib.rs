//! Dimension reduction for multi-asset Black-Scholes problems.
//!
//! * [`reduction`] reduces a problem through product groups and a numeraire change.
//! * [`payoff`] parses payoffs and detects the structures that permit reduction.
//! * [`pricers`] holds closed forms for the reduced problems.
//! * [`verifiers`] holds Monte Carlo and finite-difference oracles.

pub mod linalg;
pub mod math;
pub mod payoff;
pub mod pricers;
pub mod reduction;
pub mod verifiers;
