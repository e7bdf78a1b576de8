use crate::math::{integrate_gl64, norm_cdf};

use super::{require, PricingError};

/// Two Vasicek short rates and a lognormal exchange rate `F` (domestic
/// currency per unit of foreign), all driven by one 3-dimensional Wiener
/// process.
///
/// Under the domestic risk-neutral measure the model simulated is
///
/// ```text
/// dr_1 = (b_1 - a_1 r_1) dt + σ_1·dW
/// dr_2 = (b_2 - λ_2|σ_2| - a_2 r_2 - σ_2·σ_3) dt + σ_2·dW
/// dF/F = (r_1 - r_2) dt + σ_3·dW
/// ```
///
/// so the foreign bond is the Vasicek bond with level `b_2 - λ_2|σ_2|`.
/// The domestic market price of risk is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VasicekFxParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub lambda2: f64,
    pub sigma1: [f64; 3],
    pub sigma2: [f64; 3],
    pub sigma3: [f64; 3],
    pub strike: f64,
    pub maturity: f64,
}

/// Initial state, either as short rates or as bond prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FxState {
    Rates { r1: f64, r2: f64, fx: f64 },
    Bonds { p1: f64, p2: f64, fx: f64 },
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl VasicekFxParams {
    pub fn validate(&self) -> Result<(), PricingError> {
        let scalars = [
            self.a1,
            self.a2,
            self.b1,
            self.b2,
            self.lambda2,
            self.strike,
            self.maturity,
        ];
        let vecs = self.sigma1.iter().chain(&self.sigma2).chain(&self.sigma3);
        require(scalars.iter().chain(vecs).all(|v| v.is_finite()), || {
            "parameters must be finite".into()
        })?;
        require(self.a1 > 0.0 && self.a2 > 0.0, || {
            "mean reversion speeds must be positive".into()
        })?;
        require(self.strike > 0.0, || "strike must be positive".into())?;
        require(self.maturity >= 0.0, || {
            "maturity must be nonnegative".into()
        })
    }

    /// Determinant of the Gram matrix of `σ_1, σ_2, σ_3`.
    pub fn gram_determinant(&self) -> f64 {
        let v = [&self.sigma1, &self.sigma2, &self.sigma3];
        let g: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| dot(v[i], v[j])).collect())
            .collect();
        g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
            - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
            + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
    }

    /// Linear independence of the three volatility vectors.
    pub fn validate_factors(&self) -> Result<(), PricingError> {
        let det = self.gram_determinant();
        require(det > 1e-12, || {
            format!("volatility vectors are nearly dependent (Gram determinant {det:e})")
        })
    }

    /// Foreign rate level under the foreign risk-neutral measure.
    pub fn foreign_level(&self) -> f64 {
        self.b2 - self.lambda2 * norm(&self.sigma2)
    }

    pub fn domestic_bond(&self, r1: f64, tau: f64) -> Result<(f64, f64), PricingError> {
        vasicek_bond(r1, tau, self.a1, self.b1, 0.0, norm(&self.sigma1))
    }

    pub fn foreign_bond(&self, r2: f64, tau: f64) -> Result<(f64, f64), PricingError> {
        vasicek_bond(r2, tau, self.a2, self.b2, self.lambda2, norm(&self.sigma2))
    }

    /// `(r_1, r_2, p_1, p_2, F)` at time `t`.
    pub fn resolve_state(
        &self,
        state: FxState,
        t: f64,
    ) -> Result<(f64, f64, f64, f64, f64), PricingError> {
        let tau = self.maturity - t;
        let (s1, s2) = (norm(&self.sigma1), norm(&self.sigma2));
        Ok(match state {
            FxState::Rates { r1, r2, fx } => {
                let (p1, _) = self.domestic_bond(r1, tau)?;
                let (p2, _) = self.foreign_bond(r2, tau)?;
                (r1, r2, p1, p2, fx)
            }
            FxState::Bonds { p1, p2, fx } => {
                let r1 = vasicek_short_rate(p1, tau, self.a1, self.b1, 0.0, s1)?;
                let r2 = vasicek_short_rate(p2, tau, self.a2, self.b2, self.lambda2, s2)?;
                (r1, r2, p1, p2, fx)
            }
        })
    }
}

const SERIES_LIMIT: f64 = 0.5;
const SERIES_TERMS: usize = 24;

/// `(1 - e^{-x})/x`.
fn h(x: f64) -> f64 {
    if x.abs() < SERIES_LIMIT {
        // Σ (-x)^k / (k+1)!
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..SERIES_TERMS {
            term *= -x / (k + 1) as f64;
            sum += term;
        }
        sum
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(τ - B)/(a τ²) = Σ (-x)^k/(k+2)!` with `x = aτ`.
fn g_over_x(x: f64) -> f64 {
    if x.abs() < SERIES_LIMIT {
        let mut term = 0.5;
        let mut sum = 0.5;
        for k in 1..SERIES_TERMS {
            term *= -x / (k + 2) as f64;
            sum += term;
        }
        sum
    } else {
        (1.0 - h(x)) / x
    }
}

/// `[2 g(x) - x h(x)²] / (4x²)`, the variance term of `ln A` over `σ²τ³`.
fn variance_term(x: f64) -> f64 {
    if x.abs() < SERIES_LIMIT {
        // power series of 2g - x h², divided by 4x²
        let hc: Vec<f64> = (0..SERIES_TERMS)
            .scan(1.0, |c, k| {
                let out = *c;
                *c *= -1.0 / (k + 2) as f64;
                Some(out)
            })
            .collect();
        let mut num = [0.0; SERIES_TERMS + 1];
        // 2g = 2 Σ_{k≥1} (-1)^{k+1} x^k/(k+1)! = -2 Σ_{k≥1} hc[k] x^k
        for k in 1..SERIES_TERMS {
            num[k] -= 2.0 * hc[k];
        }
        for i in 0..SERIES_TERMS {
            for j in 0..SERIES_TERMS - i {
                if i + j < SERIES_TERMS {
                    num[i + j + 1] -= hc[i] * hc[j];
                }
            }
        }
        let mut sum = 0.0;
        let mut p = 1.0;
        for c in &num[2..] {
            sum += c * p;
            p *= x;
        }
        sum / 4.0
    } else {
        let hx = h(x);
        (2.0 * (1.0 - hx) - x * hx * hx) / (4.0 * x * x)
    }
}

/// Zero-coupon bond `p = A(τ) e^{-B(τ) r}` with `B = (1 - e^{-aτ})/a`, for
/// `dr = (b - λσ - a r) dt + σ dW` under the pricing measure.
///
/// ```text
/// ln A = -(b - λσ) τ² g(aτ)/(aτ) + σ² τ³ [2g - x h²]/(4x²),   x = aτ
/// ```
///
/// with `h(x) = (1 - e^{-x})/x` and `g = 1 - h`; both pieces switch to power
/// series for small `aτ`. Returns `(p, B)`.
pub fn vasicek_bond(
    r: f64,
    tau: f64,
    a: f64,
    b: f64,
    lambda: f64,
    sigma: f64,
) -> Result<(f64, f64), PricingError> {
    require(
        [r, tau, a, b, lambda, sigma].iter().all(|v| v.is_finite()),
        || "bond parameters must be finite".into(),
    )?;
    require(a >= 0.0, || {
        format!("mean reversion {a} must be nonnegative")
    })?;
    require(tau >= 0.0, || {
        format!("time to maturity {tau} must be nonnegative")
    })?;
    require(sigma >= 0.0, || "vol must be nonnegative".into())?;
    let (ln_a, big_b) = ln_a_and_b(tau, a, b - lambda * sigma, sigma);
    Ok(((ln_a - big_b * r).exp(), big_b))
}

fn ln_a_and_b(tau: f64, a: f64, level: f64, sigma: f64) -> (f64, f64) {
    let x = a * tau;
    let big_b = tau * h(x);
    let ln_a = -level * tau * tau * g_over_x(x) + sigma * sigma * tau.powi(3) * variance_term(x);
    (ln_a, big_b)
}

/// Short rate implied by a bond price: the inverse of [`vasicek_bond`] in `r`.
pub fn vasicek_short_rate(
    p: f64,
    tau: f64,
    a: f64,
    b: f64,
    lambda: f64,
    sigma: f64,
) -> Result<f64, PricingError> {
    require(p.is_finite() && p > 0.0, || {
        format!("bond price {p} must be positive")
    })?;
    require(tau > 0.0, || {
        "short rate is not identified at maturity".into()
    })?;
    vasicek_bond(0.0, tau, a, b, lambda, sigma)?;
    let (ln_a, big_b) = ln_a_and_b(tau, a, b - lambda * sigma, sigma);
    Ok((ln_a - p.ln()) / big_b)
}

/// `∫_t^T |B_1(u,T)σ_1 - B_2(u,T)σ_2 + σ_3|² du` by 64-point Gauss-Legendre.
pub fn fx_vol_integral(t: f64, maturity: f64, p: &VasicekFxParams) -> Result<f64, PricingError> {
    require(
        t.is_finite() && maturity.is_finite() && t <= maturity,
        || "need t <= T".into(),
    )?;
    let v = integrate_gl64(t, maturity, |u| {
        let tau = maturity - u;
        let b1 = tau * h(p.a1 * tau);
        let b2 = tau * h(p.a2 * tau);
        (0..3)
            .map(|k| {
                let c = b1 * p.sigma1[k] - b2 * p.sigma2[k] + p.sigma3[k];
                c * c
            })
            .sum()
    });
    Ok(v.max(0.0))
}

/// Call on the exchange rate:
/// `V = p_2 F N(d_1) - K p_1 N(d_2)`, `d_1 = [ln(p_2F/(p_1K)) + σ²/2]/σ`.
pub fn price_fx_option_vasicek(
    p1: f64,
    p2: f64,
    fx: f64,
    t: f64,
    p: &VasicekFxParams,
) -> Result<f64, PricingError> {
    p.validate()?;
    require(p1 > 0.0 && p1 <= 1.0 && p2 > 0.0 && p2 <= 1.0, || {
        "bond prices must lie in (0, 1]".into()
    })?;
    require(fx.is_finite() && fx > 0.0, || {
        "exchange rate must be positive".into()
    })?;
    let var = fx_vol_integral(t, p.maturity, p)?;
    let k = p.strike;
    let value = black_on_forward(p2 * fx, k * p1, var);
    // the same price as p_1 times the undiscounted call on y = p_2 F / p_1
    let y = p2 * fx / p1;
    let via_y = p1 * black_on_forward(y, k, var);
    let scale = (p2 * fx).max(k * p1);
    if (value - via_y).abs() > 1e-14 * value.abs().max(1e-3 * scale) {
        return Err(PricingError::NumericFailure(format!(
            "price {value} disagrees with the bond-numeraire form {via_y}"
        )));
    }
    Ok(value)
}

/// `x N(d_1) - k N(d_2)` with total variance `var`.
fn black_on_forward(x: f64, k: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return (x - k).max(0.0);
    }
    let sd = var.sqrt();
    let d1 = ((x / k).ln() + 0.5 * var) / sd;
    x * norm_cdf(d1) - k * norm_cdf(d1 - sd)
}
