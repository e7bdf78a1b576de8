use super::VerifyError;

/// Uniform log-space grid specification.
#[derive(Debug, Clone, PartialEq)]
pub struct FdGrid {
    /// Node count per dimension.
    pub nodes: Vec<usize>,
    /// Domain half-width in units of `σ√T` around the spot.
    pub width_sigmas: f64,
    pub time_steps: usize,
}

impl FdGrid {
    pub fn new(nodes: Vec<usize>, time_steps: usize) -> Self {
        Self {
            nodes,
            width_sigmas: 6.0,
            time_steps,
        }
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<(), VerifyError> {
        let bad = |m: String| Err(VerifyError::InvalidInput(m));
        if self.nodes.len() != dim {
            return bad(format!(
                "grid has {} axes for a {dim}-dimensional problem",
                self.nodes.len()
            ));
        }
        if self.nodes.iter().any(|n| *n < 50) {
            return bad("at least 50 nodes per dimension".into());
        }
        if !(self.width_sigmas >= 5.0) {
            return bad("domain must span at least 5 standard deviations".into());
        }
        if self.time_steps == 0 {
            return bad("need at least one time step".into());
        }
        Ok(())
    }
}

/// One log-space axis: node `j` sits at `x0 + (j - centre)·h`, so the spot
/// `x0` is always a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Axis {
    pub x0: f64,
    pub h: f64,
    pub centre: usize,
    pub n: usize,
}

impl Axis {
    pub fn new(x0: f64, half_width: f64, n: usize) -> Self {
        let centre = n / 2;
        Self {
            x0,
            h: half_width / centre as f64,
            centre,
            n,
        }
    }

    /// Same domain at twice the spacing.
    pub fn coarsened(&self) -> Self {
        Self {
            x0: self.x0,
            h: 2.0 * self.h,
            centre: self.centre / 2,
            n: self.n / 2,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + (j as f64 - self.centre as f64) * self.h
    }

    pub fn s(&self, j: usize) -> f64 {
        self.x(j).exp()
    }

    /// Weights `(w1, w2)` with `u_0 = w1 u_1 + w2 u_2` (linear in `S`) at the
    /// low edge, and likewise `u_{n-1}` from `u_{n-2}, u_{n-3}` at the high edge.
    pub fn edge_weights(&self) -> ((f64, f64), (f64, f64)) {
        let n = self.n;
        let lo = (self.s(0) - self.s(1)) / (self.s(2) - self.s(1));
        let hi = (self.s(n - 1) - self.s(n - 2)) / (self.s(n - 3) - self.s(n - 2));
        ((1.0 - lo, lo), (1.0 - hi, hi))
    }

    /// Four-point Lagrange weights around `x`: `(first index, weights)`.
    pub fn cubic_weights(&self, x: f64) -> (usize, [f64; 4]) {
        let pos = (x - self.x(0)) / self.h;
        let base = (pos.floor() as isize - 1).clamp(0, self.n as isize - 4) as usize;
        let mut w = [0.0; 4];
        for (k, wk) in w.iter_mut().enumerate() {
            let xk = self.x(base + k);
            let mut v = 1.0;
            for m in 0..4 {
                if m != k {
                    let xm = self.x(base + m);
                    v *= (x - xm) / (xk - xm);
                }
            }
            *wk = v;
        }
        (base, w)
    }
}

/// Half-width covering `width·σ√T` and, where known, every payoff kink by a
/// further `3σ√T`.
pub(crate) fn half_width(sd: f64, width_sigmas: f64, kinks: &[f64]) -> f64 {
    let kink = kinks.iter().fold(0.0_f64, |m, k| m.max(k.abs() + 3.0 * sd));
    (width_sigmas * sd).max(kink).max(0.25)
}

/// Richardson estimate for a second-order scheme: `(fine - coarse)/3`.
pub(crate) fn richardson(fine: f64, coarse: f64) -> Result<f64, VerifyError> {
    let estimate = (fine - coarse) / 3.0;
    if estimate.abs() > 1e-2 * fine.abs() && estimate.abs() > 1e-12 {
        return Err(VerifyError::GridTooCoarse {
            estimate,
            value: fine,
        });
    }
    Ok(estimate.abs())
}
