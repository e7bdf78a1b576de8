//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::Instant;

use bsreduce::commands::{verify, SimOptions, VerifyOptions};
use bsreduce::report::Report;
use bsreduce::Problem;
use bsreduce_core::linalg::{symmetric_eigen, Matrix};
use bsreduce_core::payoff::parse_payoff;
use bsreduce_core::pricers::{
    bs_vanilla, fx_vol_integral, price_closed_form_1d, price_foreign_strike,
    price_fx_option_vasicek, price_geometric_basket, ForeignStrikeParams, FxState,
    GeometricBasketParams, OptionKind, VasicekFxParams,
};
use bsreduce_core::reduction::{
    apply_group_transform_unchecked, plan_reduction, to_log_parabolic, BlackScholesProblem,
    MultiplicativeTransform,
};
use bsreduce_core::verifiers::{
    fd_solve_1d, fd_solve_2d, mc_price, mc_price_vasicek_fx, Fd1d, FdGrid, McConfig, PathRng,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mc(n_paths: u64, seed: u64) -> McConfig {
    McConfig {
        n_paths,
        n_steps: 1,
        seed,
        antithetic: true,
    }
}

struct Uniforms(PathRng);

impl Uniforms {
    fn new(seed: u64) -> Self {
        Self(PathRng::new(seed, 0))
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.uniform()
    }

    fn int(&mut self, lo: usize, hi: usize) -> usize {
        (lo + (self.0.uniform() * (hi - lo + 1) as f64) as usize).min(hi)
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
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
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * eps {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            rec(
                f,
                x0,
                x1,
                f0,
                fm,
                f1,
                h / 6.0 * (f0 + 4.0 * fm + f1),
                eps / panels as f64,
                40,
            )
        })
        .sum()
}

fn ac1_psd() -> Outcome {
    let mut u = Uniforms::new(101);
    let mut rng = PathRng::new(102, 0);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..1000 {
        let n = u.int(2, 6);
        let rank = u.int(1, n);
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..rank).map(|_| 0.3 * rng.normal()).collect())
            .collect();
        let cov = Matrix::from_fn(n, |i, j| (0..rank).map(|k| g[i][k] * g[j][k]).sum());
        let p = BlackScholesProblem::new(cov, 0.03, vec![0.0; n], 1.0, parse_payoff("1").unwrap())
            .unwrap();
        let size = u.int(2, n);
        let mut pool: Vec<usize> = (0..n).collect();
        let mut group: Vec<usize> = (0..size)
            .map(|_| pool.remove(u.int(0, pool.len() - 1)))
            .collect();
        group.sort_unstable();
        let alphas: Vec<f64> = (0..size).map(|_| u.range(-3.0, 3.0)).collect();
        let t = MultiplicativeTransform::new(group, alphas, n).unwrap();
        let red = apply_group_transform_unchecked(&p, &t).unwrap();
        let a = red.cov();
        let min = symmetric_eigen(a)
            .values
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let ratio = min / a.trace().abs().max(f64::MIN_POSITIVE);
        worst = worst.min(ratio);
        if min < -1e-10 * a.trace().abs() {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("1000 matrices, {failures} violations, worst min-eig/trace {worst:.3e}"),
    )
}

fn ac2_pair_equivalence() -> Outcome {
    let mut u = Uniforms::new(202);
    let mut agree = 0;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (v0, v1, rho) = (u.range(0.1, 0.5), u.range(0.1, 0.5), u.range(-0.9, 0.9));
        let c = rho * v0 * v1;
        let cov = Matrix::from_rows(&[vec![v0 * v0, c], vec![c, v1 * v1]]).unwrap();
        let (rate, q0, q1) = (u.range(0.0, 0.08), u.range(0.0, 0.05), u.range(0.0, 0.05));
        let spots = vec![u.range(50.0, 150.0), u.range(50.0, 150.0)];
        let strike = (spots[0] * spots[1] * u.range(0.8, 1.2)).round();
        let t = u.range(0.25, 2.0);
        let payoff = parse_payoff(&format!("max(S0*S1 - {strike}, 0)")).unwrap();
        let p = BlackScholesProblem::new(cov, rate, vec![q0, q1], t, payoff)
            .unwrap()
            .with_spots(spots)
            .unwrap();
        let plan = plan_reduction(&p);
        let r = plan.reduced();
        if plan.reduced_dim() != 1 {
            continue;
        }
        let closed = bs_vanilla(
            r.spots().unwrap()[0],
            strike,
            r.cov()[(0, 0)].sqrt(),
            r.rate(),
            r.dividends()[0],
            r.maturity(),
            OptionKind::Call,
        )
        .unwrap();
        let est = mc_price(&p, &mc(1_000_000, 1000 + k)).unwrap();
        let z = (est.value - closed).abs() / est.std_error;
        worst = worst.max(z);
        if z <= 3.0 {
            agree += 1;
        }
    }
    outcome(
        agree >= 19,
        format!("{agree}/20 within 3 std errors, worst {worst:.2} sd"),
    )
}

fn foreign_params(sigma_s: f64, rho: f64) -> ForeignStrikeParams {
    ForeignStrikeParams {
        sigma_s,
        sigma_x: 0.1,
        rho,
        r_d: 0.03,
        r_p: 0.01,
        s: 100.0,
        x: 1.2,
        k_d: 120.0,
        t: 0.0,
        maturity: 1.0,
    }
}

/// The same option priced in pounds: assets `S` and `Y = 1/X` under the
/// pound measure, payoff `max(S - K_d Y, 0)`.
fn pound_price(p: &ForeignStrikeParams) -> f64 {
    let c = -p.rho * p.sigma_s * p.sigma_x;
    let cov = Matrix::from_rows(&[
        vec![p.sigma_s * p.sigma_s, c],
        vec![c, p.sigma_x * p.sigma_x],
    ])
    .unwrap();
    let payoff = parse_payoff(&format!("max(S0 - {:?}*S1, 0)", p.k_d)).unwrap();
    let prob = BlackScholesProblem::new(cov, p.r_p, vec![0.0, p.r_d], p.maturity - p.t, payoff)
        .unwrap()
        .with_spots(vec![p.s, 1.0 / p.x])
        .unwrap();
    let plan = plan_reduction(&prob);
    plan.value_scale().unwrap() * price_closed_form_1d(plan.reduced()).unwrap()
}

fn ac3_foreign_strike() -> Outcome {
    let base = foreign_params(0.25, 0.3);
    let (v_d, _) = price_foreign_strike(&base).unwrap();
    let est = mc_price(&base.to_problem().unwrap(), &mc(1_000_000, 303)).unwrap();
    let z = (est.value - v_d).abs() / est.std_error;
    let mut worst: f64 = 0.0;
    for sigma_s in [0.1, 0.2, 0.3, 0.4, 0.5] {
        for rho in [-0.8, -0.4, 0.0, 0.4, 0.8] {
            let p = foreign_params(sigma_s, rho);
            let (v_d, _) = price_foreign_strike(&p).unwrap();
            let v_p = pound_price(&p);
            worst = worst.max((v_p * p.x - v_d).abs() / v_d);
        }
    }
    outcome(
        z <= 3.0 && worst <= 1e-14,
        format!(
            "V_d {v_d:.10} vs MC {:.10} ({z:.2} sd); max |V_p X - V_d|/V_d {worst:.2e} over 5x5",
            est.value
        ),
    )
}

fn ac4_basket() -> Outcome {
    let p = GeometricBasketParams {
        spots: vec![100.0, 95.0, 110.0],
        weights: vec![0.5, 0.3, 0.2],
        cov: Matrix::from_rows(&[
            vec![0.04, 0.01, 0.0],
            vec![0.01, 0.09, 0.02],
            vec![0.0, 0.02, 0.0625],
        ])
        .unwrap(),
        dividends: vec![0.01, 0.0, 0.02],
        rate: 0.03,
        strike: 100.0,
        t: 0.0,
        maturity: 1.0,
    };
    let closed = price_geometric_basket(&p).unwrap();
    let prob = p.to_problem().unwrap();
    let est = mc_price(&prob, &mc(1_000_000, 404)).unwrap();
    let z = (est.value - closed).abs() / est.std_error;
    let plan = plan_reduction(&prob);
    let r = plan.reduced();
    let pipeline = plan.value_scale().unwrap()
        * bs_vanilla(
            r.spots().unwrap()[0],
            p.strike,
            r.cov()[(0, 0)].sqrt(),
            r.rate(),
            r.dividends()[0],
            r.maturity(),
            OptionKind::Call,
        )
        .unwrap();
    let rel = (pipeline - closed).abs() / closed;
    outcome(
        plan.reduced_dim() == 1 && z <= 3.0 && rel <= 1e-12,
        format!(
            "closed {closed:.10} vs MC {:.10} ({z:.2} sd); pipeline rel diff {rel:.2e}",
            est.value
        ),
    )
}

fn vasicek_params() -> VasicekFxParams {
    VasicekFxParams {
        a1: 0.1,
        a2: 0.2,
        b1: 0.005,
        b2: 0.004,
        lambda2: 0.0,
        sigma1: [0.01, 0.0, 0.0],
        sigma2: [0.0, 0.015, 0.0],
        sigma3: [0.0, 0.0, 0.1],
        strike: 1.3,
        maturity: 1.0,
    }
}

fn ac5_vasicek() -> Outcome {
    let p = vasicek_params();
    let (p1, p2, fx) = (0.95, 0.95, 1.3);
    let closed = price_fx_option_vasicek(p1, p2, fx, 0.0, &p).unwrap();
    let cfg = McConfig {
        n_paths: 200_000,
        n_steps: 256,
        seed: 505,
        antithetic: true,
    };
    let est = mc_price_vasicek_fx(&p, FxState::Bonds { p1, p2, fx }, 0.0, &cfg)
        .unwrap()
        .option;
    let z = (est.value - closed).abs() / est.std_error;

    let var = fx_vol_integral(0.0, 1.0, &p).unwrap();
    let y = p2 * fx / p1;
    let via_y = p1 * bs_vanilla(y, p.strike, var.sqrt(), 0.0, 0.0, 1.0, OptionKind::Call).unwrap();
    let identity = (via_y - closed).abs() / closed;

    let b = |a: f64, tau: f64| (1.0 - (-a * tau).exp()) / a;
    let integrand = |u: f64| {
        let tau = 1.0 - u;
        (0..3)
            .map(|k| {
                let c = b(p.a1, tau) * p.sigma1[k] - b(p.a2, tau) * p.sigma2[k] + p.sigma3[k];
                c * c
            })
            .sum::<f64>()
    };
    let reference = simpson(&integrand, 0.0, 1.0, 1e-16);
    let integral = (var - reference).abs() / reference;
    outcome(
        z <= 3.0 && identity <= 1e-14 && integral <= 1e-10,
        format!(
            "closed {closed:.10} vs MC {:.10} ({z:.2} sd); identity rel {identity:.2e}; vol integral rel {integral:.2e}",
            est.value
        ),
    )
}

fn ac6_triple_product() -> Outcome {
    let cov = Matrix::from_rows(&[
        vec![0.04, 0.006, 0.002],
        vec![0.006, 0.09, -0.009],
        vec![0.002, -0.009, 0.0625],
    ])
    .unwrap();
    let p = BlackScholesProblem::new(
        cov,
        0.03,
        vec![0.01, 0.0, 0.02],
        1.0,
        parse_payoff("max(S0*S1*S2 - 1000000, 0)").unwrap(),
    )
    .unwrap()
    .with_spots(vec![100.0, 95.0, 105.0])
    .unwrap();
    let plan = plan_reduction(&p);
    let closed = plan.value_scale().unwrap() * price_closed_form_1d(plan.reduced()).unwrap();
    let est = mc_price(&p, &mc(1_000_000, 606)).unwrap();
    let z = (est.value - closed).abs() / est.std_error;
    outcome(
        plan.reduced_dim() == 1 && z <= 3.0,
        format!(
            "dim {} -> {}; closed {closed:.6} vs MC {:.6} ({z:.2} sd)",
            p.dim(),
            plan.reduced_dim(),
            est.value
        ),
    )
}

fn ac7_rainbow() -> Outcome {
    let cov = Matrix::from_rows(&[
        vec![0.04, 0.012, 0.006],
        vec![0.012, 0.0625, 0.01],
        vec![0.006, 0.01, 0.09],
    ])
    .unwrap();
    let p = BlackScholesProblem::new(
        cov,
        0.04,
        vec![0.01, 0.02, 0.0],
        1.0,
        parse_payoff("max(S0, S1, S2)").unwrap(),
    )
    .unwrap()
    .with_spots(vec![100.0, 95.0, 105.0])
    .unwrap();
    let plan = plan_reduction(&p);
    let r = plan.reduced();
    let s = r.spots().unwrap();
    let fd = fd_solve_2d(
        &to_log_parabolic(r),
        &FdGrid::new(vec![200, 200], 200),
        [s[0], s[1]],
    )
    .unwrap();
    let scale = plan.value_scale().unwrap();
    let (value, grid) = (scale * fd.value, scale * fd.grid_error);
    let est = mc_price(&p, &mc(1_000_000, 707)).unwrap();
    let diff = (value - est.value).abs();
    outcome(
        plan.reduced_dim() == 2 && r.rate() == 0.0 && diff <= 3.0 * est.std_error + grid,
        format!(
            "dim 3 -> {} at rate {}; FD {value:.6} (grid {grid:.2e}) vs MC {:.6} ± {:.2e}",
            plan.reduced_dim(),
            r.rate(),
            est.value,
            est.std_error
        ),
    )
}

fn ac8_fd_consistency() -> Outcome {
    let p = BlackScholesProblem::new(
        Matrix::from_rows(&[vec![0.04]]).unwrap(),
        0.05,
        vec![0.0],
        1.0,
        parse_payoff("max(S0 - 100, 0)").unwrap(),
    )
    .unwrap();
    let parab = to_log_parabolic(&p);
    let want = bs_vanilla(100.0, 100.0, 0.2, 0.05, 0.0, 1.0, OptionKind::Call).unwrap();
    let est = fd_solve_1d(&parab, &FdGrid::new(vec![400], 400), 100.0).unwrap();
    let rel = (est.value - want).abs() / want;
    let v: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| {
            Fd1d::new(&parab, &FdGrid::new(vec![n], n), 100.0)
                .unwrap()
                .value()
                .unwrap()
        })
        .collect();
    let ratio = (v[1] - v[0]) / (v[2] - v[1]);
    outcome(
        rel <= 1e-3 && (3.2..=4.8).contains(&ratio),
        format!("400x400 rel err {rel:.2e}; Richardson ratio {ratio:.3}"),
    )
}

fn ac9_golden() -> Outcome {
    let (s, k, vol, r, t): (f64, f64, f64, f64, f64) = (100.0, 100.0, 0.2, 0.05, 1.0);
    let sd = vol * t.sqrt();
    let density_payoff = |x: f64| {
        let st = s * ((r - 0.5 * vol * vol) * t + sd * x).exp();
        (st - k).max(0.0) * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let kink = ((k / s).ln() - (r - 0.5 * vol * vol) * t) / sd;
    let quad = (-r * t).exp() * simpson(&density_payoff, kink, 12.0, 1e-13);
    let v = bs_vanilla(s, k, vol, r, 0.0, t, OptionKind::Call).unwrap();
    outcome(
        (quad - 10.450584).abs() <= 1e-6 && (v - 10.450584).abs() <= 1e-6,
        format!("closed {v:.9}, quadrature {quad:.9}"),
    )
}

fn ac10_negative_control() -> Outcome {
    let problem = Problem::BlackScholes(foreign_params(0.25, 0.3).to_problem().unwrap());
    let opts = |force_alpha| VerifyOptions {
        sim: SimOptions {
            paths: 1_000_000,
            seed: 1010,
            ..SimOptions::default()
        },
        tolerance_sigmas: 3.0,
        force_alpha,
    };
    let Ok(Report::Verify(good)) = verify(&problem, &opts(None)) else {
        return outcome(false, "verify did not return a verdict".into());
    };
    let Ok(Report::Verify(bad)) = verify(&problem, &opts(Some(vec![1.0, 0.5]))) else {
        return outcome(
            false,
            "verify with forced alpha did not return a verdict".into(),
        );
    };
    let sds = bad.delta.abs() / bad.original.std_error;
    outcome(
        good.passed() && !bad.passed() && sds > 3.0,
        format!(
            "true plan {} (delta {:.2e}); alpha (1, 0.5) {} with delta {:.4} = {sds:.0} sd",
            good.verdict, good.delta, bad.verdict, bad.delta
        ),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome, Option<f64>); 10] = [
        (
            "AC1",
            "transformed covariance stays PSD",
            ac1_psd,
            Some(5.0),
        ),
        (
            "AC2",
            "pair reduction preserves the price",
            ac2_pair_equivalence,
            Some(60.0),
        ),
        (
            "AC3",
            "foreign-currency strike chain",
            ac3_foreign_strike,
            None,
        ),
        ("AC4", "geometric basket chain", ac4_basket, None),
        ("AC5", "Vasicek FX chain", ac5_vasicek, None),
        (
            "AC6",
            "repeated product reduction",
            ac6_triple_product,
            None,
        ),
        ("AC7", "numeraire reduction of a rainbow", ac7_rainbow, None),
        (
            "AC8",
            "finite differences in log space",
            ac8_fd_consistency,
            None,
        ),
        ("AC9", "vanilla golden value", ac9_golden, None),
        (
            "AC10",
            "wrong exponents fail verification",
            ac10_negative_control,
            None,
        ),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (id, name, run, limit) in criteria {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = limit.is_none_or(|l| secs <= l);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map(|l| format!(", limit {l}s")).unwrap_or_default();
        println!(
            "{id:<5}{} {name}: {} [{secs:.2}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    println!(
        "{} of 10 criteria passed in {:.1}s",
        10 - failed,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
