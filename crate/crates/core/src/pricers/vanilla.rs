use crate::math::norm_cdf;
use crate::payoff::PayoffExpr;
use crate::reduction::BlackScholesProblem;

use super::{require, PiecewiseLinear, PricingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

/// European option on one lognormal asset with continuous carry `q`.
///
/// A zero vol or zero time to expiry returns the discounted intrinsic value
/// on the deterministic forward.
pub fn bs_vanilla(
    spot: f64,
    strike: f64,
    vol: f64,
    rate: f64,
    q: f64,
    tau: f64,
    kind: OptionKind,
) -> Result<f64, PricingError> {
    require(spot.is_finite() && spot > 0.0, || {
        format!("spot {spot} must be positive")
    })?;
    require(strike.is_finite() && strike > 0.0, || {
        format!("strike {strike} must be positive")
    })?;
    require(vol.is_finite() && vol >= 0.0, || {
        format!("vol {vol} must be nonnegative")
    })?;
    require(tau.is_finite() && tau >= 0.0, || {
        format!("time {tau} must be nonnegative")
    })?;
    require(rate.is_finite() && q.is_finite(), || {
        "rates must be finite".into()
    })?;

    let df = (-rate * tau).exp();
    if vol == 0.0 || tau == 0.0 {
        let forward = spot * ((rate - q) * tau).exp();
        let intrinsic = match kind {
            OptionKind::Call => (forward - strike).max(0.0),
            OptionKind::Put => (strike - forward).max(0.0),
        };
        return Ok(df * intrinsic);
    }
    let sd = vol * tau.sqrt();
    let d1 = ((spot / strike).ln() + (rate - q + 0.5 * vol * vol) * tau) / sd;
    let d2 = d1 - sd;
    let carry = spot * (-q * tau).exp();
    Ok(match kind {
        OptionKind::Call => carry * norm_cdf(d1) - strike * df * norm_cdf(d2),
        OptionKind::Put => strike * df * norm_cdf(-d2) - carry * norm_cdf(-d1),
    })
}

/// Prices any continuous piecewise-linear payoff in `S0` as a forward, cash
/// and a strip of calls.
pub fn price_piecewise_payoff(
    payoff: &PayoffExpr,
    spot: f64,
    vol: f64,
    rate: f64,
    q: f64,
    tau: f64,
) -> Result<f64, PricingError> {
    let f = PiecewiseLinear::from_payoff(payoff).ok_or_else(|| {
        PricingError::NoClosedForm(format!("payoff `{payoff}` is not piecewise linear in S0"))
    })?;
    let ((a, b), calls) = f.call_decomposition();
    // a single put is priced directly rather than through parity
    if let [(k, w)] = calls[..] {
        if a == -w && b == w * k {
            return Ok(w * bs_vanilla(spot, k, vol, rate, q, tau, OptionKind::Put)?);
        }
    }
    let mut value = a * spot * (-q * tau).exp() + b * (-rate * tau).exp();
    for (k, w) in calls {
        value += w * bs_vanilla(spot, k, vol, rate, q, tau, OptionKind::Call)?;
    }
    Ok(value)
}

/// Closed form for a one-dimensional problem with a piecewise-linear payoff,
/// evaluated at the problem's spot.
pub fn price_closed_form_1d(problem: &BlackScholesProblem) -> Result<f64, PricingError> {
    if problem.dim() != 1 {
        return Err(PricingError::NoClosedForm(format!(
            "reduced problem has dimension {}",
            problem.dim()
        )));
    }
    let spot = problem
        .spots()
        .ok_or_else(|| PricingError::InvalidInput("pricing needs spots".into()))?[0];
    price_piecewise_payoff(
        problem.payoff(),
        spot,
        problem.cov()[(0, 0)].sqrt(),
        problem.rate(),
        problem.dividends()[0],
        problem.maturity(),
    )
}
