//! Numeric detection of the payoff structures that license a reduction.
//!
//! Nothing here is symbolic. A payoff `P` depends on the assets of a group
//! only through `z = Π S_i^{α_i}` exactly when `P ∘ exp` is constant along
//! every log-space direction orthogonal to `α` inside the group. We estimate
//! `α` from a finite-difference gradient at one reference point and then
//! check that invariance on a quasi-random probe set.

use crate::math::halton;

use super::rewrite::substitute_product_group;
use super::{PayoffError, PayoffExpr};

/// Probe settings. The thresholds are engineering choices.
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Per-asset probe centre (typically the spots). Missing entries default to 1.
    pub center: Vec<f64>,
    /// Probes cover `[c / half_range, c · half_range]` per asset.
    pub half_range: f64,
    pub n_points: usize,
    /// Central-difference step in log space.
    pub fd_step: f64,
    pub tol: f64,
    /// Jittered retries when a reference probe sits on a kink.
    pub max_jitter: usize,
    /// Log-space shift used by the invariance test.
    pub shift: f64,
    /// Centre multipliers tried in turn while the payoff is flat on the probe set.
    pub scale_ladder: Vec<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            center: Vec::new(),
            half_range: 2.0,
            n_points: 64,
            fd_step: 1e-5,
            tol: 1e-9,
            max_jitter: 8,
            shift: 0.3,
            scale_ladder: vec![1.0, 10.0, 0.1, 100.0, 0.01, 1000.0],
        }
    }
}

impl ProbeConfig {
    pub fn with_center(center: &[f64]) -> Self {
        Self {
            center: center.to_vec(),
            ..Self::default()
        }
    }

    fn center_of(&self, i: usize) -> f64 {
        self.center
            .get(i)
            .copied()
            .filter(|c| *c > 0.0)
            .unwrap_or(1.0)
    }

    /// Log-space probe points for one rung of the scale ladder.
    pub(crate) fn log_points(&self, dim: usize, scale: f64) -> Vec<Vec<f64>> {
        let w = self.half_range.ln();
        halton(dim, self.n_points)
            .into_iter()
            .map(|u| {
                u.iter()
                    .enumerate()
                    .map(|(i, ui)| (self.center_of(i) * scale).ln() + w * (2.0 * ui - 1.0))
                    .collect()
            })
            .collect()
    }

    /// Wide log-space box (three decades either side) used for soundness checks.
    pub(crate) fn wide_log_points(&self, dim: usize, count: usize) -> Vec<Vec<f64>> {
        let w = 1000f64.ln();
        halton(dim, count)
            .into_iter()
            .map(|u| {
                u.iter()
                    .enumerate()
                    .map(|(i, ui)| self.center_of(i).ln() + w * (2.0 * ui - 1.0))
                    .collect()
            })
            .collect()
    }
}

/// `|a - b|` within `tol` relative, with a floor tied to the probe set's scale.
pub(crate) fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3 * scale)
}

fn exp_all(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.exp()).collect()
}

/// Numeric probe of positive homogeneity of degree one: `P(a·s) = a·P(s)`.
pub fn check_homogeneity(expr: &PayoffExpr, dim: usize, cfg: &ProbeConfig) -> bool {
    let dim = dim.max(expr.max_symbol().map_or(0, |m| m + 1));
    const FACTORS: [f64; 3] = [0.5, 2.0, 3.7];
    for &scale in &cfg.scale_ladder {
        let mut rows = Vec::with_capacity(cfg.n_points);
        for x in cfg.log_points(dim, scale) {
            let s = exp_all(&x);
            let Ok(base) = expr.eval(&s) else {
                return false;
            };
            let mut scaled = [0.0; 3];
            for (k, a) in FACTORS.iter().enumerate() {
                let sa: Vec<f64> = s.iter().map(|v| v * a).collect();
                let Ok(v) = expr.eval(&sa) else { return false };
                scaled[k] = v;
            }
            rows.push((base, scaled));
        }
        let magnitude = rows
            .iter()
            .flat_map(|(b, s)| std::iter::once(b).chain(s.iter()))
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if magnitude == 0.0 {
            // identically zero here; look further out
            continue;
        }
        return rows.iter().all(|(base, scaled)| {
            FACTORS
                .iter()
                .zip(scaled)
                .all(|(a, v)| close(*v, a * base, cfg.tol, magnitude))
        });
    }
    true
}

/// Detected product structure: `P(S) = F(Π_{i∈group} S_i^{α_i}, S_rest)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    pub group: Vec<usize>,
    /// Normalized so the first nonzero exponent is 1.
    pub alphas: Vec<f64>,
    /// `F` over `(z, remaining assets in index order)`.
    pub residual: PayoffExpr,
}

/// Searches for a multiplicative group structure on `candidate` (indices into
/// a `dim`-asset problem). `Ok(None)` when the payoff is not a function of
/// any single product of the candidate assets.
pub fn detect_group_structure(
    expr: &PayoffExpr,
    dim: usize,
    candidate: &[usize],
    cfg: &ProbeConfig,
) -> Result<Option<GroupStructure>, PayoffError> {
    let k = candidate.len();
    if k < 2 {
        return Ok(None);
    }
    let dim = dim
        .max(expr.max_symbol().map_or(0, |m| m + 1))
        .max(candidate.iter().max().map_or(0, |m| m + 1));
    let eval_log = |x: &[f64]| expr.eval(&exp_all(x));

    for &scale in &cfg.scale_ladder {
        let points = cfg.log_points(dim, scale);
        let mut values = Vec::with_capacity(points.len());
        for x in &points {
            values.push(eval_log(x)?);
        }
        let magnitude = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let mut kinks = 0;
        let mut alpha = None;
        for (x, &p0) in points.iter().zip(&values) {
            let h = cfg.fd_step;
            let mut grad = vec![0.0; k];
            let mut kinked = false;
            for (c, &idx) in candidate.iter().enumerate() {
                let mut xp = x.clone();
                xp[idx] += h;
                let mut xm = x.clone();
                xm[idx] -= h;
                let fp = eval_log(&xp)?;
                let fm = eval_log(&xm)?;
                let fwd = (fp - p0) / h;
                let bwd = (p0 - fm) / h;
                if (fwd - bwd).abs() > 1e-3 * (fwd.abs() + bwd.abs()) + 1e-9 * magnitude {
                    kinked = true;
                }
                grad[c] = (fp - fm) / (2.0 * h);
            }
            if kinked {
                kinks += 1;
                if kinks > cfg.max_jitter {
                    return Err(PayoffError::NonDifferentiableKink {
                        attempts: kinks - 1,
                    });
                }
                continue;
            }
            let gmax = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
            if gmax <= 1e-12 * magnitude.max(f64::MIN_POSITIVE) {
                continue;
            }
            let lead = grad
                .iter()
                .position(|g| g.abs() > 1e-8 * gmax)
                .expect("nonzero gradient has a leading entry");
            alpha = Some(
                grad.iter()
                    .map(|g| snap(g / grad[lead]))
                    .collect::<Vec<_>>(),
            );
            break;
        }
        let Some(alpha) = alpha else { continue };

        for x in &points {
            let p0 = eval_log(x)?;
            for v in orthogonal_complement(&alpha) {
                for sign in [1.0, -1.0] {
                    let mut xs = x.clone();
                    for (c, &idx) in candidate.iter().enumerate() {
                        xs[idx] += sign * cfg.shift * v[c];
                    }
                    if !close(eval_log(&xs)?, p0, cfg.tol, magnitude) {
                        return Ok(None);
                    }
                }
            }
        }
        let residual = substitute_product_group(expr, dim, candidate, &alpha);
        return Ok(Some(GroupStructure {
            group: candidate.to_vec(),
            alphas: alpha,
            residual,
        }));
    }
    Ok(None)
}

/// Rounds to a nearby rational with denominator ≤ 12 when within 1e-7.
fn snap(a: f64) -> f64 {
    for d in 1..=12 {
        let r = (a * d as f64).round() / d as f64;
        if (a - r).abs() < 1e-7 * a.abs().max(1.0) {
            return r;
        }
    }
    a
}

/// Orthonormal basis of the complement of `alpha` in `R^k`.
fn orthogonal_complement(alpha: &[f64]) -> Vec<Vec<f64>> {
    let k = alpha.len();
    let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = vec![alpha.iter().map(|a| a / norm).collect()];
    for j in 0..k {
        let mut v = vec![0.0; k];
        v[j] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
        if basis.len() == k {
            break;
        }
    }
    basis.remove(0);
    basis
}
