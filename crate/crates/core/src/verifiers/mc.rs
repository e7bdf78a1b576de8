use rayon::prelude::*;

use crate::linalg::{psd_sqrt_factor, Matrix};
use crate::reduction::{validate_psd, BlackScholesProblem};

use super::{PathRng, PriceEstimate, VerifyError, Welford};

/// Paths (or antithetic pairs) per work unit. Fixed so that the reduction
/// order, and therefore every bit of the estimate, is independent of the
/// number of workers.
pub(crate) const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: u64,
    /// Exact lognormal sub-steps per path; 1 suffices for European payoffs.
    pub n_steps: usize,
    pub seed: u64,
    /// Pairs each draw `z` with `-z`; `n_paths` then counts both members.
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 1,
            seed: 42,
            antithetic: true,
        }
    }
}

impl McConfig {
    pub(crate) fn validate(&self) -> Result<(), VerifyError> {
        if self.n_paths < 2 || self.n_steps == 0 {
            return Err(VerifyError::InvalidInput(
                "need at least two paths and one step".into(),
            ));
        }
        Ok(())
    }

    /// Independent draws: pairs when antithetic, otherwise single paths.
    pub(crate) fn units(&self) -> u64 {
        if self.antithetic {
            self.n_paths.div_ceil(2)
        } else {
            self.n_paths
        }
    }
}

/// Runs `unit(rng)` for every independent draw and averages its outputs,
/// chunk by chunk in parallel, merging chunks in index order.
pub(crate) fn run_units<F>(cfg: &McConfig, unit: F) -> Result<Welford, VerifyError>
where
    F: Fn(&mut PathRng) -> Result<f64, VerifyError> + Sync,
{
    let stats = run_units_multi(cfg, 1, |rng, out| {
        out[0] = unit(rng)?;
        Ok(())
    })?;
    Ok(stats[0])
}

/// [`run_units`] for draws producing `k` outputs each.
pub(crate) fn run_units_multi<F>(
    cfg: &McConfig,
    k: usize,
    unit: F,
) -> Result<Vec<Welford>, VerifyError>
where
    F: Fn(&mut PathRng, &mut [f64]) -> Result<(), VerifyError> + Sync,
{
    let units = cfg.units();
    let chunks = units.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<Welford>, VerifyError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut w = vec![Welford::default(); k];
            let mut out = vec![0.0; k];
            for i in c * CHUNK..((c + 1) * CHUNK).min(units) {
                let mut rng = PathRng::new(cfg.seed, i);
                unit(&mut rng, &mut out)?;
                w.iter_mut().zip(&out).for_each(|(w, x)| w.push(*x));
            }
            Ok(w)
        })
        .collect();
    let mut total = vec![Welford::default(); k];
    for p in parts {
        total.iter_mut().zip(&p?).for_each(|(t, w)| t.merge(w));
    }
    Ok(total)
}

struct GbmSampler {
    spots: Vec<f64>,
    drift_dt: Vec<f64>,
    factor: Matrix,
    sqrt_dt: f64,
    n_steps: usize,
}

impl GbmSampler {
    fn new(problem: &BlackScholesProblem, cfg: &McConfig) -> Result<Self, VerifyError> {
        cfg.validate()?;
        let spots = problem
            .spots()
            .ok_or_else(|| VerifyError::InvalidInput("Monte Carlo needs spots".into()))?
            .to_vec();
        validate_psd(problem.cov())
            .map_err(|e| VerifyError::FactorizationFailure(e.to_string()))?;
        let dt = problem.maturity() / cfg.n_steps as f64;
        Ok(Self {
            spots,
            drift_dt: problem.log_drift().iter().map(|m| m * dt).collect(),
            factor: psd_sqrt_factor(problem.cov()),
            sqrt_dt: dt.sqrt(),
            n_steps: cfg.n_steps,
        })
    }

    fn dim(&self) -> usize {
        self.spots.len()
    }

    /// Terminal values for the normals `z` (`n_steps × dim`), negated when `sign < 0`.
    fn terminal(&self, z: &[f64], sign: f64, out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut x = 0.0;
            for step in 0..self.n_steps {
                let zs = &z[step * n..(step + 1) * n];
                let lz: f64 = (0..n).map(|k| self.factor[(i, k)] * zs[k]).sum();
                x += self.drift_dt[i] + self.sqrt_dt * (sign * lz);
            }
            out[i] = self.spots[i] * x.exp();
        }
    }
}

/// Terminal asset values, one row per path. With antithetic sampling rows
/// come in `(z, -z)` pairs.
pub fn mc_terminal_samples(
    problem: &BlackScholesProblem,
    cfg: &McConfig,
) -> Result<Vec<Vec<f64>>, VerifyError> {
    let sampler = GbmSampler::new(problem, cfg)?;
    let n = sampler.dim();
    let mut rows = Vec::with_capacity(cfg.n_paths as usize);
    let mut z = vec![0.0; n * cfg.n_steps];
    for i in 0..cfg.units() {
        PathRng::new(cfg.seed, i).fill_normal(&mut z);
        let signs: &[f64] = if cfg.antithetic { &[1.0, -1.0] } else { &[1.0] };
        for &sign in signs {
            if rows.len() as u64 == cfg.n_paths {
                break;
            }
            let mut s = vec![0.0; n];
            sampler.terminal(&z, sign, &mut s);
            rows.push(s);
        }
    }
    Ok(rows)
}

/// Discounted mean payoff over exact lognormal terminal draws.
pub fn mc_price(
    problem: &BlackScholesProblem,
    cfg: &McConfig,
) -> Result<PriceEstimate, VerifyError> {
    let sampler = GbmSampler::new(problem, cfg)?;
    let n = sampler.dim();
    let payoff = problem.payoff();
    let stats = run_units(cfg, |rng| {
        let mut z = vec![0.0; n * cfg.n_steps];
        rng.fill_normal(&mut z);
        let mut s = vec![0.0; n];
        sampler.terminal(&z, 1.0, &mut s);
        let up = payoff.eval(&s)?;
        if !cfg.antithetic {
            return Ok(up);
        }
        sampler.terminal(&z, -1.0, &mut s);
        Ok(0.5 * (up + payoff.eval(&s)?))
    })?;
    let df = (-problem.rate() * problem.maturity()).exp();
    Ok(PriceEstimate {
        value: df * stats.mean,
        std_error: df * stats.std_error(),
        grid_error: 0.0,
    })
}
