#![allow(dead_code)]

use bsreduce_core::linalg::Matrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Adaptive Simpson quadrature to absolute tolerance `eps`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
    // start from panels so a peaked integrand cannot hide between the first probes
    const PANELS: usize = 64;
    let w = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * w, a + (k + 1) as f64 * w);
            let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            rec(
                f,
                lo,
                hi,
                fa,
                fm,
                fb,
                simpson(fa, fm, fb, lo, hi),
                eps / PANELS as f64,
                50,
            )
        })
        .sum()
}

/// Call price as the quadrature of the discounted payoff against the
/// normal density over the exercise region; no normal CDF involved.
pub fn call_by_quadrature(s: f64, k: f64, vol: f64, r: f64, q: f64, t: f64) -> f64 {
    let sd = vol * t.sqrt();
    let mu = (r - q - 0.5 * vol * vol) * t;
    let z_star = ((k / s).ln() - mu) / sd;
    let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let integrand = |z: f64| (s * (mu + sd * z).exp() - k) * pdf(z);
    let hi = z_star.max(0.0) + 40.0;
    (-r * t).exp() * adaptive_simpson(&integrand, z_star, hi, 1e-13)
}

pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn int(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.0.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }

    /// Box-Muller normal.
    pub fn normal(&mut self) -> f64 {
        let (u1, u2) = (self.uniform(), self.uniform());
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// `B Bᵀ` with `B` of random rank, scaled to vols around 10-50%.
    pub fn psd(&mut self, n: usize) -> Matrix {
        let rank = self.int(1, n);
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..rank)
                    .map(|_| self.normal() * 0.3 / (rank as f64).sqrt())
                    .collect()
            })
            .collect();
        let mut m = Matrix::from_fn(n, |i, j| (0..rank).map(|k| b[i][k] * b[j][k]).sum());
        // exact symmetry
        m = Matrix::from_fn(n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] });
        m
    }

    /// Covariance from vols in `[lo, hi]` and a random correlation matrix.
    pub fn cov_from_vols(&mut self, n: usize, lo: f64, hi: f64) -> Matrix {
        let vols: Vec<f64> = (0..n).map(|_| self.range(lo, hi)).collect();
        let g = self.psd(n);
        let full = Matrix::from_fn(n, |i, j| g[(i, j)] + if i == j { 0.05 } else { 0.0 });
        let corr = Matrix::from_fn(n, |i, j| {
            full[(i, j)] / (full[(i, i)] * full[(j, j)]).sqrt()
        });
        Matrix::from_fn(n, |i, j| {
            let v = corr[(i.min(j), i.max(j))] * vols[i.min(j)] * vols[i.max(j)];
            if i == j {
                vols[i] * vols[i]
            } else {
                v
            }
        })
    }
}
