use crate::linalg::{symmetric_eigen, Matrix, MAX_DIM};
use crate::payoff::{PayoffExpr, ProbeConfig};

use super::ReductionError;

/// Minimum eigenvalue accepted is `-PSD_REL_TOL · trace`.
pub const PSD_REL_TOL: f64 = 1e-10;
/// Asymmetry accepted, relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Returns the minimum eigenvalue of a symmetric matrix.
pub fn assert_psd(m: &Matrix) -> Result<f64, ReductionError> {
    let asymmetry = m.max_asymmetry();
    if asymmetry > SYMMETRY_TOL * m.max_abs() {
        return Err(ReductionError::NotSymmetric { asymmetry });
    }
    if m.dim() == 0 {
        return Ok(0.0);
    }
    Ok(symmetric_eigen(m)
        .values
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// [`assert_psd`] plus rejection below `-PSD_REL_TOL · trace`.
pub fn validate_psd(m: &Matrix) -> Result<f64, ReductionError> {
    let min_eigenvalue = assert_psd(m)?;
    let trace = m.trace();
    if min_eigenvalue < -PSD_REL_TOL * trace.abs() || (trace == 0.0 && min_eigenvalue < 0.0) {
        return Err(ReductionError::NotPsd {
            min_eigenvalue,
            trace,
        });
    }
    Ok(min_eigenvalue)
}

/// Terminal-value problem for the multi-asset Black-Scholes equation.
///
/// `cov` holds `a_ij`, the annualized covariance of log returns. `spots`
/// are optional: reduction does not need them, pricing does, and when
/// present they also centre the payoff probes.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackScholesProblem {
    cov: Matrix,
    rate: f64,
    dividends: Vec<f64>,
    maturity: f64,
    payoff: PayoffExpr,
    spots: Option<Vec<f64>>,
    names: Vec<String>,
}

impl BlackScholesProblem {
    pub fn new(
        cov: Matrix,
        rate: f64,
        dividends: Vec<f64>,
        maturity: f64,
        payoff: PayoffExpr,
    ) -> Result<Self, ReductionError> {
        let dim = cov.dim();
        let names = (0..dim).map(|i| format!("S{i}")).collect();
        Self::from_parts(cov, rate, dividends, maturity, payoff, None, names)
    }

    pub fn with_spots(mut self, spots: Vec<f64>) -> Result<Self, ReductionError> {
        if spots.len() != self.dim() {
            return Err(ReductionError::InvalidProblem(format!(
                "{} spots for a {}-asset problem",
                spots.len(),
                self.dim()
            )));
        }
        if spots.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(ReductionError::InvalidProblem(
                "spots must be positive".into(),
            ));
        }
        self.spots = Some(spots);
        Ok(self)
    }

    pub fn with_payoff(&self, payoff: PayoffExpr) -> Result<Self, ReductionError> {
        Self::from_parts(
            self.cov.clone(),
            self.rate,
            self.dividends.clone(),
            self.maturity,
            payoff,
            self.spots.clone(),
            self.names.clone(),
        )
    }

    pub(crate) fn from_parts(
        cov: Matrix,
        rate: f64,
        dividends: Vec<f64>,
        maturity: f64,
        payoff: PayoffExpr,
        spots: Option<Vec<f64>>,
        names: Vec<String>,
    ) -> Result<Self, ReductionError> {
        let dim = cov.dim();
        if dim == 0 || dim > MAX_DIM {
            return Err(ReductionError::InvalidProblem(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if !cov.is_finite() {
            return Err(ReductionError::InvalidProblem(
                "covariance has non-finite entries".into(),
            ));
        }
        let asymmetry = cov.max_asymmetry();
        if asymmetry > 1e-12 {
            return Err(ReductionError::NotSymmetric { asymmetry });
        }
        validate_psd(&cov)?;
        if dividends.len() != dim {
            return Err(ReductionError::InvalidProblem(format!(
                "{} dividends for a {dim}-asset problem",
                dividends.len()
            )));
        }
        if !rate.is_finite() || dividends.iter().any(|q| !q.is_finite()) {
            return Err(ReductionError::InvalidProblem(
                "rates must be finite".into(),
            ));
        }
        if !(maturity.is_finite() && maturity > 0.0) {
            return Err(ReductionError::InvalidProblem(
                "maturity must be positive".into(),
            ));
        }
        if let Some(m) = payoff.max_symbol() {
            if m >= dim {
                return Err(ReductionError::InvalidProblem(format!(
                    "payoff references S{m} in a {dim}-asset problem"
                )));
            }
        }
        Ok(Self {
            cov,
            rate,
            dividends,
            maturity,
            payoff,
            spots,
            names,
        })
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn dividends(&self) -> &[f64] {
        &self.dividends
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn payoff(&self) -> &PayoffExpr {
        &self.payoff
    }

    pub fn spots(&self) -> Option<&[f64]> {
        self.spots.as_deref()
    }

    /// Human-readable name of each state variable, e.g. `S0*S1` after a product step.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Risk-neutral log drift `r - q_i - a_ii / 2`.
    pub fn log_drift(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.rate - self.dividends[i] - 0.5 * self.cov[(i, i)])
            .collect()
    }

    /// Probe settings centred on the spots when known.
    pub fn probe_config(&self) -> ProbeConfig {
        self.spots
            .as_deref()
            .map(ProbeConfig::with_center)
            .unwrap_or_default()
    }
}
