use crate::linalg::Matrix;
use crate::payoff::PayoffExpr;

use super::BlackScholesProblem;

/// Constant-coefficient parabolic problem in log prices `x_i = ln S_i`:
///
/// ```text
/// u_t + ½ Σ a_ij u_{x_i x_j} + Σ μ_i u_{x_i} - r u = 0,   u(x, T) = P(e^x)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicProblem {
    pub diffusion: Matrix,
    pub drift: Vec<f64>,
    pub discount: f64,
    pub maturity: f64,
    pub payoff: PayoffExpr,
}

pub fn to_log_parabolic(problem: &BlackScholesProblem) -> ParabolicProblem {
    ParabolicProblem {
        diffusion: problem.cov().clone(),
        drift: problem.log_drift(),
        discount: problem.rate(),
        maturity: problem.maturity(),
        payoff: problem.payoff().clone(),
    }
}

impl ParabolicProblem {
    /// Diffusion and drift seen by `y = T x`: `(T A Tᵀ, T μ)`.
    pub fn map_linear(&self, rows: &[Vec<f64>]) -> (Matrix, Vec<f64>) {
        let n = rows.len();
        let a = &self.diffusion;
        let ta: Vec<Vec<f64>> = rows.iter().map(|r| a.mul_vec(r)).collect();
        let diffusion = Matrix::from_fn(n, |i, j| dot(&ta[i], &rows[j]));
        let drift = rows.iter().map(|r| dot(r, &self.drift)).collect();
        (diffusion, drift)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
