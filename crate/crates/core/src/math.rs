//! Numerical helpers shared by the pricers and oracles.

use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use libm::erfc;
use statrs::function::erf::erfc_inv;

/// Standard normal CDF through the complementary error function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile. `u` must lie in (0, 1).
///
/// The library inverse is only good to about 1e-12, so one Halley step
/// against [`norm_cdf`] follows.
pub fn norm_inv_cdf(u: f64) -> f64 {
    let x = -SQRT_2 * erfc_inv(2.0 * u);
    if !x.is_finite() {
        return x;
    }
    let e = norm_cdf(x) - u;
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let step = e / pdf;
    x - step / (1.0 + 0.5 * x * step)
}

/// Gauss–Legendre nodes and weights on [-1, 1], found by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Cached 64-point rule.
pub fn gauss_legendre_64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(64))
}

/// ∫_a^b f with the cached 64-point rule.
pub fn integrate_gl64(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre_64();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in base `base`.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

/// `count` points of the Halton sequence in [0,1)^dim, skipping the origin.
pub fn halton(dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(
        dim <= PRIMES.len(),
        "halton: dim {dim} exceeds {}",
        PRIMES.len()
    );
    (1..=count as u64)
        .map(|i| (0..dim).map(|d| radical_inverse(i, PRIMES[d])).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from mpmath at 30 digits.
    #[test]
    fn norm_cdf_reference_values() {
        let cases = [
            (0.0, 0.5),
            (1.0, 0.841344746068542948585232545632),
            (-1.0, 0.158655253931457051414767454368),
            (2.5, 0.993790334674223864833021895426),
            (-3.7, 0.000107799733477388261481335549359),
            (-8.0, 6.22096057427178412351599517259e-16),
        ];
        for (x, want) in cases {
            assert!((norm_cdf(x) - want).abs() < 1e-15, "x={x}");
        }
    }

    #[test]
    fn inverse_cdf_round_trips() {
        for &u in &[1e-10, 1e-4, 0.025, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let x = norm_inv_cdf(u);
            assert!((norm_cdf(x) - u).abs() <= 1e-13 * u.max(1e-3), "u={u}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // x^14 is exact for 8 points: 2/15
        let v: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let v = integrate_gl64(0.0, 2.0, |t| t.exp());
        assert!((v - (2.0f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn halton_points_in_unit_cube() {
        let pts = halton(3, 100);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().flatten().all(|&u| (0.0..1.0).contains(&u)));
        assert_eq!(pts[0], vec![0.5, 1.0 / 3.0, 0.2]);
    }
}
