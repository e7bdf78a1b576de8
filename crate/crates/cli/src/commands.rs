use bsreduce_core::pricers::{
    fx_vol_integral, price_closed_form_1d, price_fx_option_vasicek, PricingError,
};
use bsreduce_core::reduction::{
    apply_group_transform_with_payoff, plan_reduction, to_log_parabolic, BlackScholesProblem,
    MultiplicativeTransform, ReductionPlan, ReductionStep,
};
use bsreduce_core::verifiers::{
    fd_solve_1d, fd_solve_2d, mc_price, mc_price_vasicek_fx, FdGrid, McConfig, PriceEstimate,
};

use crate::input::{Problem, VasicekInput};
use crate::report::{
    EstimateReport, PlanReport, PriceReport, ReduceReport, Report, VasicekReduced, VerifyReport,
};
use crate::{CliError, Method};

/// Relative allowance for rounding when both prices carry no error bar.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub paths: u64,
    pub seed: u64,
    /// Time steps for the short-rate simulation.
    pub steps: usize,
    /// Space nodes per axis and time steps for finite differences.
    pub grid: Option<usize>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            paths: 200_000,
            seed: 42,
            steps: 256,
            grid: None,
        }
    }
}

impl SimOptions {
    fn mc(&self, n_steps: usize) -> McConfig {
        McConfig {
            n_paths: self.paths,
            n_steps,
            seed: self.seed,
            antithetic: true,
        }
    }
}

pub fn reduce(problem: &Problem) -> Result<Report, CliError> {
    let report = match problem {
        Problem::BlackScholes(p) => ReduceReport {
            command: "reduce",
            model: "black_scholes",
            plan: PlanReport::new(&plan_reduction(p), true),
            vasicek: None,
            meta: None,
        },
        Problem::VasicekFx(v) => {
            let (r1, r2, p1, p2, fx) = v.params.resolve_state(v.state, v.t)?;
            ReduceReport {
                command: "reduce",
                model: "vasicek_fx",
                plan: PlanReport::bond_numeraire(),
                vasicek: Some(VasicekReduced {
                    spot: p2 * fx / p1,
                    strike: v.params.strike,
                    total_variance: fx_vol_integral(v.t, v.params.maturity, &v.params)?,
                    discount_bond: p1,
                    foreign_bond: p2,
                    r1,
                    r2,
                }),
                meta: None,
            }
        }
    };
    Ok(Report::Reduce(report))
}

fn require_spots(p: &BlackScholesProblem) -> Result<(), CliError> {
    if p.spots().is_none() {
        return Err(CliError::Schema("at `spots`: pricing needs spots".into()));
    }
    Ok(())
}

fn closed_form(plan: &ReductionPlan) -> Result<PriceEstimate, CliError> {
    let reduced = plan.reduced();
    if reduced.dim() != 1 {
        return Err(CliError::NoClosedForm(format!(
            "the payoff reduces only to dimension {}",
            reduced.dim()
        )));
    }
    let scale = plan.value_scale().unwrap_or(1.0);
    Ok(PriceEstimate::exact(scale * price_closed_form_1d(reduced)?))
}

fn finite_difference(
    plan: &ReductionPlan,
    grid: Option<usize>,
) -> Result<(PriceEstimate, usize), CliError> {
    let reduced = plan.reduced();
    let parab = to_log_parabolic(reduced);
    let s = reduced.spots().expect("spots checked");
    let (est, n) = match reduced.dim() {
        1 => {
            let n = grid.unwrap_or(400);
            (fd_solve_1d(&parab, &FdGrid::new(vec![n], n), s[0])?, n)
        }
        2 => {
            let n = grid.unwrap_or(200);
            (
                fd_solve_2d(&parab, &FdGrid::new(vec![n, n], n), [s[0], s[1]])?,
                n,
            )
        }
        d => {
            return Err(CliError::NoClosedForm(format!(
                "finite differences need a reduced dimension of 1 or 2, found {d}"
            )))
        }
    };
    let scale = plan.value_scale().unwrap_or(1.0);
    Ok((
        PriceEstimate {
            value: scale * est.value,
            std_error: 0.0,
            grid_error: scale * est.grid_error,
        },
        n,
    ))
}

pub fn price(problem: &Problem, method: Method, sim: &SimOptions) -> Result<Report, CliError> {
    let report = match problem {
        Problem::BlackScholes(p) => {
            require_spots(p)?;
            let mut report = PriceReport {
                command: "price",
                model: "black_scholes",
                method: method.name(),
                price: 0.0,
                std_error: None,
                grid_error: None,
                paths: None,
                seed: None,
                grid: None,
                plan_used: PlanReport::identity(p.dim()),
                meta: None,
            };
            match method {
                Method::Closed => {
                    let plan = plan_reduction(p);
                    report.price = closed_form(&plan)?.value;
                    report.plan_used = PlanReport::new(&plan, false);
                }
                Method::Fd => {
                    let plan = plan_reduction(p);
                    let (est, n) = finite_difference(&plan, sim.grid)?;
                    report.price = est.value;
                    report.grid_error = Some(est.grid_error);
                    report.grid = Some(n);
                    report.plan_used = PlanReport::new(&plan, false);
                }
                Method::Mc => {
                    let est = mc_price(p, &sim.mc(1))?;
                    report.price = est.value;
                    report.std_error = Some(est.std_error);
                    report.paths = Some(sim.paths);
                    report.seed = Some(sim.seed);
                }
            }
            report
        }
        Problem::VasicekFx(v) => {
            let mut report = PriceReport {
                command: "price",
                model: "vasicek_fx",
                method: method.name(),
                price: 0.0,
                std_error: None,
                grid_error: None,
                paths: None,
                seed: None,
                grid: None,
                plan_used: PlanReport::identity(3),
                meta: None,
            };
            match method {
                Method::Closed => {
                    report.price = vasicek_closed(v)?;
                    report.plan_used = PlanReport::bond_numeraire();
                }
                Method::Mc => {
                    let est =
                        mc_price_vasicek_fx(&v.params, v.state, v.t, &sim.mc(sim.steps))?.option;
                    report.price = est.value;
                    report.std_error = Some(est.std_error);
                    report.paths = Some(sim.paths);
                    report.seed = Some(sim.seed);
                }
                Method::Fd => {
                    return Err(CliError::NoClosedForm(
                        "finite differences are not offered for the vasicek_fx model".into(),
                    ))
                }
            }
            report
        }
    };
    Ok(Report::Price(report))
}

fn vasicek_closed(v: &VasicekInput) -> Result<f64, CliError> {
    let (_, _, p1, p2, fx) = v.params.resolve_state(v.state, v.t)?;
    Ok(price_fx_option_vasicek(p1, p2, fx, v.t, &v.params)?)
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub sim: SimOptions,
    pub tolerance_sigmas: f64,
    /// Replaces the exponents of the first product step.
    pub force_alpha: Option<Vec<f64>>,
}

/// Replays `plan` with the exponents of its first product step replaced,
/// keeping the payoff that was rewritten for the detected exponents.
pub fn corrupt_plan(plan: &ReductionPlan, alphas: &[f64]) -> Result<ReductionPlan, CliError> {
    let k = plan
        .steps()
        .iter()
        .position(|s| matches!(s, ReductionStep::Product(_)))
        .ok_or_else(|| CliError::Usage("--force-alpha needs a plan with a product step".into()))?;
    let ReductionStep::Product(t) = &plan.steps()[k] else {
        unreachable!()
    };
    if alphas.len() != t.group().len() {
        return Err(CliError::Usage(format!(
            "--force-alpha needs {} exponents for group {:?}",
            t.group().len(),
            t.group()
        )));
    }
    let forced = MultiplicativeTransform::new(t.group().to_vec(), alphas.to_vec(), t.dim())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = ReductionPlan::new(plan.initial().clone());
    for step in &plan.steps()[..k] {
        out.push(step.clone())?;
    }
    let payoff = plan.states()[k + 1].payoff().clone();
    let state = apply_group_transform_with_payoff(out.reduced(), &forced, payoff)?;
    out.push_state(ReductionStep::Product(forced), state);
    for step in &plan.steps()[k + 1..] {
        out.push(step.clone())?;
    }
    Ok(out)
}

fn best_reduced_estimate(
    plan: &ReductionPlan,
    sim: &SimOptions,
) -> Result<(&'static str, PriceEstimate), CliError> {
    match closed_form(plan) {
        Ok(est) => return Ok(("closed", est)),
        Err(CliError::NoClosedForm(_)) => {}
        Err(e) => return Err(e),
    }
    if plan.reduced_dim() <= 2 {
        return Ok(("fd", finite_difference(plan, sim.grid)?.0));
    }
    let cfg = McConfig {
        seed: sim.seed.wrapping_add(1),
        ..sim.mc(1)
    };
    let est = mc_price(plan.reduced(), &cfg)?;
    let scale = plan.value_scale().unwrap_or(1.0);
    Ok((
        "mc",
        PriceEstimate {
            value: scale * est.value,
            std_error: scale * est.std_error,
            grid_error: 0.0,
        },
    ))
}

fn estimate_report(method: &'static str, e: &PriceEstimate) -> EstimateReport {
    EstimateReport {
        method,
        price: e.value,
        std_error: e.std_error,
        grid_error: e.grid_error,
    }
}

fn verdict(
    model: &'static str,
    original: (&'static str, PriceEstimate),
    reduced: (&'static str, PriceEstimate),
    opts: &VerifyOptions,
    plan: PlanReport,
) -> VerifyReport {
    let (o, r) = (original.1, reduced.1);
    let delta = o.value - r.value;
    let sd = (o.std_error.powi(2) + r.std_error.powi(2)).sqrt();
    let tolerance = opts.tolerance_sigmas * sd
        + o.grid_error
        + r.grid_error
        + ROUNDING * o.value.abs().max(r.value.abs());
    VerifyReport {
        command: "verify",
        model,
        verdict: if delta.abs() <= tolerance {
            "PASS"
        } else {
            "FAIL"
        },
        original: estimate_report(original.0, &o),
        reduced: estimate_report(reduced.0, &r),
        delta,
        tolerance,
        tolerance_sigmas: opts.tolerance_sigmas,
        paths: opts.sim.paths,
        seed: opts.sim.seed,
        forced_alphas: opts.force_alpha.clone(),
        plan,
        meta: None,
    }
}

pub fn verify(problem: &Problem, opts: &VerifyOptions) -> Result<Report, CliError> {
    let report = match problem {
        Problem::BlackScholes(p) => {
            require_spots(p)?;
            let mut plan = plan_reduction(p);
            if let Some(alphas) = &opts.force_alpha {
                plan = corrupt_plan(&plan, alphas)?;
            }
            let original = mc_price(p, &opts.sim.mc(1))?;
            let reduced = best_reduced_estimate(&plan, &opts.sim)?;
            verdict(
                "black_scholes",
                ("mc", original),
                reduced,
                opts,
                PlanReport::new(&plan, true),
            )
        }
        Problem::VasicekFx(v) => {
            if opts.force_alpha.is_some() {
                return Err(CliError::Usage(
                    "--force-alpha applies to black_scholes problems only".into(),
                ));
            }
            let mc = mc_price_vasicek_fx(&v.params, v.state, v.t, &opts.sim.mc(opts.sim.steps))?;
            let closed = PriceEstimate::exact(vasicek_closed(v)?);
            verdict(
                "vasicek_fx",
                ("mc", mc.option),
                ("closed", closed),
                opts,
                PlanReport::bond_numeraire(),
            )
        }
    };
    Ok(Report::Verify(report))
}

impl From<PricingError> for CliError {
    fn from(e: PricingError) -> Self {
        match e {
            PricingError::NoClosedForm(m) => CliError::NoClosedForm(m),
            PricingError::InvalidInput(m) => CliError::Schema(m),
            PricingError::WeightsNotSimplex { .. } => CliError::Schema(e.to_string()),
            PricingError::Reduction(r) => r.into(),
            PricingError::NumericFailure(m) => CliError::Numeric(m),
        }
    }
}
