use crate::linalg::Matrix;
use crate::payoff::parse_payoff;
use crate::reduction::{BlackScholesProblem, ReductionError};

use super::{bs_vanilla, require, OptionKind, PricingError};

/// Call on a pound-denominated stock `S` with a dollar strike `K_d`, where
/// `X` is the dollar price of one pound.
#[derive(Debug, Clone, PartialEq)]
pub struct ForeignStrikeParams {
    pub sigma_s: f64,
    pub sigma_x: f64,
    pub rho: f64,
    pub r_d: f64,
    pub r_p: f64,
    pub s: f64,
    pub x: f64,
    pub k_d: f64,
    pub t: f64,
    pub maturity: f64,
}

impl ForeignStrikeParams {
    pub fn validate(&self) -> Result<(), PricingError> {
        let all = [
            self.sigma_s,
            self.sigma_x,
            self.rho,
            self.r_d,
            self.r_p,
            self.s,
            self.x,
            self.k_d,
            self.t,
            self.maturity,
        ];
        require(all.iter().all(|v| v.is_finite()), || {
            "parameters must be finite".into()
        })?;
        require(self.sigma_s >= 0.0 && self.sigma_x >= 0.0, || {
            "vols must be nonnegative".into()
        })?;
        require(self.rho.abs() < 1.0, || {
            format!("correlation {} outside (-1, 1)", self.rho)
        })?;
        require(self.s > 0.0 && self.x > 0.0 && self.k_d > 0.0, || {
            "S, X and K_d must be positive".into()
        })?;
        require(self.t <= self.maturity, || "t must not exceed T".into())
    }

    pub fn tau(&self) -> f64 {
        self.maturity - self.t
    }

    /// The two-asset problem in `(S, X)` priced in dollars.
    ///
    /// Under the dollar measure the pound stock earns `r_p - ρσ_Sσ_X` and the
    /// exchange rate earns `r_d - r_p`, hence the carries below.
    pub fn to_problem(&self) -> Result<BlackScholesProblem, ReductionError> {
        let c = self.rho * self.sigma_s * self.sigma_x;
        let cov = Matrix::from_rows(&[
            vec![self.sigma_s * self.sigma_s, c],
            vec![c, self.sigma_x * self.sigma_x],
        ])
        .expect("square");
        let payoff = parse_payoff(&format!("max(S0*S1 - {:?}, 0)", self.k_d))?;
        BlackScholesProblem::new(
            cov,
            self.r_d,
            vec![self.r_d - self.r_p + c, self.r_p],
            self.tau(),
            payoff,
        )?
        .with_spots(vec![self.s, self.x])
    }
}

/// `σ_S² + 2ρσ_Sσ_X + σ_X²`, the variance of `ln(S X)`.
pub fn foreign_strike_variance(p: &ForeignStrikeParams) -> f64 {
    p.sigma_s * p.sigma_s + 2.0 * p.rho * p.sigma_s * p.sigma_x + p.sigma_x * p.sigma_x
}

/// Returns `(V_d, V_p)`: the dollar price and its pound equivalent `V_d / X`.
pub fn price_foreign_strike(p: &ForeignStrikeParams) -> Result<(f64, f64), PricingError> {
    p.validate()?;
    let vol = foreign_strike_variance(p).max(0.0).sqrt();
    let v_d = bs_vanilla(p.s * p.x, p.k_d, vol, p.r_d, 0.0, p.tau(), OptionKind::Call)?;
    Ok((v_d, v_d / p.x))
}
