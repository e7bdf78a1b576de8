use crate::linalg::Matrix;
use crate::payoff::PayoffExpr;
use crate::reduction::{validate_psd, BlackScholesProblem, ReductionError};

use super::{bs_vanilla, require, OptionKind, PricingError};

/// Call on the weighted geometric mean `Π S_i^{α_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricBasketParams {
    pub spots: Vec<f64>,
    pub weights: Vec<f64>,
    pub cov: Matrix,
    pub dividends: Vec<f64>,
    pub rate: f64,
    pub strike: f64,
    pub t: f64,
    pub maturity: f64,
}

impl GeometricBasketParams {
    pub fn validate(&self) -> Result<(), PricingError> {
        let m = self.spots.len();
        require(m >= 1, || "basket needs at least one asset".into())?;
        require(
            self.weights.len() == m && self.dividends.len() == m && self.cov.dim() == m,
            || "spots, weights, dividends and covariance disagree in size".into(),
        )?;
        require(self.spots.iter().all(|s| s.is_finite() && *s > 0.0), || {
            "spots must be positive".into()
        })?;
        require(self.strike.is_finite() && self.strike > 0.0, || {
            "strike must be positive".into()
        })?;
        require(self.t <= self.maturity, || "t must not exceed T".into())?;
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(PricingError::WeightsNotSimplex { sum });
        }
        validate_psd(&self.cov)?;
        Ok(())
    }

    /// `(σ̂², q̂)` with `σ̂² = αᵀAα` and `q̂ = Σ(q_i + a_ii/2)α_i - σ̂²/2`.
    pub fn reduced_coefficients(&self) -> (f64, f64) {
        let var = self.cov.bilinear(&self.weights, &self.weights);
        let carry: f64 = (0..self.weights.len())
            .map(|i| (self.dividends[i] + 0.5 * self.cov[(i, i)]) * self.weights[i])
            .sum();
        (var, carry - 0.5 * var)
    }

    pub fn geometric_spot(&self) -> f64 {
        self.spots
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| s.powf(*w))
            .product()
    }

    pub fn payoff(&self) -> PayoffExpr {
        let product = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, &w)| PayoffExpr::pow(PayoffExpr::sym(i), w))
            .reduce(PayoffExpr::mul)
            .expect("at least one asset");
        PayoffExpr::Max(vec![
            PayoffExpr::sub(product, PayoffExpr::Const(self.strike)),
            PayoffExpr::Const(0.0),
        ])
    }

    pub fn to_problem(&self) -> Result<BlackScholesProblem, ReductionError> {
        BlackScholesProblem::new(
            self.cov.clone(),
            self.rate,
            self.dividends.clone(),
            self.maturity - self.t,
            self.payoff(),
        )?
        .with_spots(self.spots.clone())
    }
}

pub fn price_geometric_basket(p: &GeometricBasketParams) -> Result<f64, PricingError> {
    p.validate()?;
    let (var, q_hat) = p.reduced_coefficients();
    bs_vanilla(
        p.geometric_spot(),
        p.strike,
        var.max(0.0).sqrt(),
        p.rate,
        q_hat,
        p.maturity - p.t,
        OptionKind::Call,
    )
}
