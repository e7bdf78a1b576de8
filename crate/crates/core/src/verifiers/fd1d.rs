use crate::linalg::solve_tridiagonal;
use crate::pricers::PiecewiseLinear;
use crate::reduction::ParabolicProblem;

use super::grid::{half_width, richardson, Axis};
use super::{FdGrid, PriceEstimate, VerifyError};

/// Crank-Nicolson solver for a one-dimensional log-space problem, started
/// with two implicit Euler half-steps.
#[derive(Debug, Clone)]
pub struct Fd1d<'a> {
    parab: &'a ParabolicProblem,
    axis: Axis,
    steps: usize,
}

impl<'a> Fd1d<'a> {
    pub fn new(parab: &'a ParabolicProblem, grid: &FdGrid, spot: f64) -> Result<Self, VerifyError> {
        if parab.diffusion.dim() != 1 {
            return Err(VerifyError::InvalidInput(
                "fd_solve_1d needs a one-dimensional problem".into(),
            ));
        }
        grid.validate(1)?;
        if !(spot.is_finite() && spot > 0.0) {
            return Err(VerifyError::InvalidInput("spot must be positive".into()));
        }
        let sd = (parab.diffusion[(0, 0)] * parab.maturity).sqrt();
        let kinks: Vec<f64> = PiecewiseLinear::from_payoff(&parab.payoff)
            .map(|f| {
                f.call_decomposition()
                    .1
                    .iter()
                    .map(|(k, _)| (k / spot).ln())
                    .collect()
            })
            .unwrap_or_default();
        let w = half_width(sd, grid.width_sigmas, &kinks);
        Ok(Self {
            parab,
            axis: Axis::new(spot.ln(), w, grid.nodes[0]),
            steps: grid.time_steps,
        })
    }

    fn coarsened(&self) -> Self {
        Self {
            parab: self.parab,
            axis: self.axis.coarsened(),
            steps: (self.steps / 2).max(1),
        }
    }

    /// Log-space node positions.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.axis.n).map(|j| self.axis.x(j)).collect()
    }

    /// Payoff on the nodes.
    pub fn terminal(&self) -> Result<Vec<f64>, VerifyError> {
        (0..self.axis.n)
            .map(|j| Ok(self.parab.payoff.eval(&[self.axis.s(j)])?))
            .collect()
    }

    /// Values on the nodes at time zero.
    pub fn solve(&self) -> Result<Vec<f64>, VerifyError> {
        let mut u = self.terminal()?;
        let dt = self.parab.maturity / self.steps as f64;
        self.step(&mut u, 0.5 * dt, 1.0);
        self.step(&mut u, 0.5 * dt, 1.0);
        for _ in 1..self.steps {
            self.step(&mut u, dt, 0.5);
        }
        Ok(u)
    }

    /// Value at the spot the grid was built around.
    pub fn value(&self) -> Result<f64, VerifyError> {
        let u = self.solve()?;
        let (base, w) = self.axis.cubic_weights(self.axis.x0);
        Ok((0..4).map(|k| w[k] * u[base + k]).sum())
    }

    /// One θ-scheme step of size `dt` backwards from expiry.
    fn step(&self, u: &mut [f64], dt: f64, theta: f64) {
        let n = self.axis.n;
        let h = self.axis.h;
        let alpha = 0.5 * self.parab.diffusion[(0, 0)] / (h * h);
        let beta = self.parab.drift[0] / (2.0 * h);
        let r = self.parab.discount;
        let (cl, cd, cu) = (alpha - beta, -2.0 * alpha - r, alpha + beta);

        let m = n - 2;
        let explicit = (1.0 - theta) * dt;
        let mut rhs: Vec<f64> = (1..n - 1)
            .map(|j| u[j] + explicit * (cl * u[j - 1] + cd * u[j] + cu * u[j + 1]))
            .collect();
        let mut lower = vec![-theta * dt * cl; m];
        let mut diag = vec![1.0 - theta * dt * cd; m];
        let mut upper = vec![-theta * dt * cu; m];
        let ((l1, l2), (h1, h2)) = self.axis.edge_weights();
        diag[0] += lower[0] * l1;
        upper[0] += lower[0] * l2;
        diag[m - 1] += upper[m - 1] * h1;
        lower[m - 1] += upper[m - 1] * h2;
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        u[1..n - 1].copy_from_slice(&rhs);
        u[0] = l1 * u[1] + l2 * u[2];
        u[n - 1] = h1 * u[n - 2] + h2 * u[n - 3];
    }
}

/// Value at `spot` with a Richardson error estimate from a half-resolution solve.
pub fn fd_solve_1d(
    parab: &ParabolicProblem,
    grid: &FdGrid,
    spot: f64,
) -> Result<PriceEstimate, VerifyError> {
    let fine = Fd1d::new(parab, grid, spot)?;
    let v = fine.value()?;
    let vc = fine.coarsened().value()?;
    Ok(PriceEstimate {
        value: v,
        std_error: 0.0,
        grid_error: richardson(v, vc)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::payoff::parse_payoff;
    use crate::pricers::{bs_vanilla, OptionKind};

    fn call_problem(k: f64) -> ParabolicProblem {
        let (r, q, v) = (0.05, 0.0, 0.2);
        ParabolicProblem {
            diffusion: Matrix::from_rows(&[vec![v * v]]).unwrap(),
            drift: vec![r - q - 0.5 * v * v],
            discount: r,
            maturity: 1.0,
            payoff: parse_payoff(&format!("max(S0 - {k}, 0)")).unwrap(),
        }
    }

    #[test]
    fn terminal_slice_is_payoff() {
        let p = call_problem(100.0);
        let fd = Fd1d::new(&p, &FdGrid::new(vec![64], 10), 100.0).unwrap();
        let t = fd.terminal().unwrap();
        for (x, v) in fd.nodes().iter().zip(&t) {
            assert_eq!(*v, (x.exp() - 100.0).max(0.0));
        }
    }

    #[test]
    fn call_close_to_closed_form() {
        let p = call_problem(100.0);
        let est = fd_solve_1d(&p, &FdGrid::new(vec![200], 200), 100.0).unwrap();
        let want = bs_vanilla(100.0, 100.0, 0.2, 0.05, 0.0, 1.0, OptionKind::Call).unwrap();
        assert!(
            (est.value - want).abs() < 1e-3 * want,
            "{} vs {want}",
            est.value
        );
        assert!(est.grid_error < 1e-2 * want);
    }

    #[test]
    fn rejects_small_grids_and_wrong_dims() {
        let p = call_problem(100.0);
        assert!(fd_solve_1d(&p, &FdGrid::new(vec![40], 100), 100.0).is_err());
        assert!(fd_solve_1d(&p, &FdGrid::new(vec![100, 100], 100), 100.0).is_err());
        let mut g = FdGrid::new(vec![100], 100);
        g.width_sigmas = 3.0;
        assert!(fd_solve_1d(&p, &g, 100.0).is_err());
    }
}
