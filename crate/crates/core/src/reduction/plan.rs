use crate::payoff::{check_homogeneity, detect_group_structure, PayoffExpr};

use super::{
    apply_group_transform, apply_numeraire_change, BlackScholesProblem, MultiplicativeTransform,
    ReductionError,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ReductionStep {
    Product(MultiplicativeTransform),
    /// Division by asset `index` of the state before the step.
    Numeraire {
        index: usize,
    },
}

#[derive(Debug, Clone)]
pub struct PlanOptions {
    /// Largest group tried by the product search.
    pub max_group: usize,
    pub allow_numeraire: bool,
    pub numeraire_index: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            max_group: 4,
            allow_numeraire: true,
            numeraire_index: 0,
        }
    }
}

/// A chain of reductions together with every intermediate problem.
#[derive(Debug, Clone)]
pub struct ReductionPlan {
    steps: Vec<ReductionStep>,
    states: Vec<BlackScholesProblem>,
}

impl ReductionPlan {
    pub fn new(initial: BlackScholesProblem) -> Self {
        Self {
            steps: Vec::new(),
            states: vec![initial],
        }
    }

    /// Applies a step and records the resulting state.
    pub fn push(&mut self, step: ReductionStep) -> Result<(), ReductionError> {
        let next = match &step {
            ReductionStep::Product(t) => apply_group_transform(self.reduced(), t)?,
            ReductionStep::Numeraire { index } => apply_numeraire_change(self.reduced(), *index)?,
        };
        self.push_state(step, next);
        Ok(())
    }

    /// Records a step with a precomputed state. The caller vouches that the
    /// state is what the step produces.
    pub fn push_state(&mut self, step: ReductionStep, state: BlackScholesProblem) {
        self.steps.push(step);
        self.states.push(state);
    }

    pub fn steps(&self) -> &[ReductionStep] {
        &self.steps
    }

    /// `states()[k]` is the problem before step `k`; the last entry is the reduced problem.
    pub fn states(&self) -> &[BlackScholesProblem] {
        &self.states
    }

    pub fn initial(&self) -> &BlackScholesProblem {
        &self.states[0]
    }

    pub fn reduced(&self) -> &BlackScholesProblem {
        self.states.last().expect("plan has an initial state")
    }

    pub fn original_dim(&self) -> usize {
        self.initial().dim()
    }

    pub fn reduced_dim(&self) -> usize {
        self.reduced().dim()
    }

    /// Maps original spots to reduced spots and the factor `V = factor · U`.
    pub fn map_spots(&self, spots: &[f64]) -> (Vec<f64>, f64) {
        let mut s = spots.to_vec();
        let mut factor = 1.0;
        for (step, state) in self.steps.iter().zip(&self.states) {
            match step {
                ReductionStep::Product(t) => s = t.apply_to_values(&s),
                ReductionStep::Numeraire { index } => {
                    let m = *index;
                    let sm = s[m];
                    factor *= sm * (-state.dividends()[m] * state.maturity()).exp();
                    s = (0..s.len())
                        .filter(|&i| i != m)
                        .map(|i| s[i] / sm)
                        .collect();
                }
            }
        }
        (s, factor)
    }

    /// Factor `V = factor · U` for the spots carried by the initial problem.
    pub fn value_scale(&self) -> Option<f64> {
        self.initial().spots().map(|s| self.map_spots(s).1)
    }
}

pub fn plan_reduction(problem: &BlackScholesProblem) -> ReductionPlan {
    plan_reduction_with(problem, &PlanOptions::default())
}

/// Greedy search: merge the first group (smallest size, then lexicographic)
/// on which the payoff factors through a product, repeat until none is left,
/// then divide by a numeraire once if the payoff is homogeneous, and search
/// for products again in the rate-zero problem.
pub fn plan_reduction_with(problem: &BlackScholesProblem, opts: &PlanOptions) -> ReductionPlan {
    let mut plan = ReductionPlan::new(problem.clone());
    product_search(&mut plan, opts);
    let current = plan.reduced();
    if opts.allow_numeraire
        && current.dim() >= 2
        && opts.numeraire_index < current.dim()
        && check_homogeneity(current.payoff(), current.dim(), &current.probe_config())
    {
        match apply_numeraire_change(current, opts.numeraire_index) {
            Ok(next) => {
                plan.push_state(
                    ReductionStep::Numeraire {
                        index: opts.numeraire_index,
                    },
                    next,
                );
                product_search(&mut plan, opts);
            }
            Err(e) => log::debug!("numeraire step rejected: {e}"),
        }
    }
    plan
}

fn product_search(plan: &mut ReductionPlan, opts: &PlanOptions) {
    while let Some((t, next)) = find_product(plan.reduced(), opts.max_group) {
        plan.push_state(ReductionStep::Product(t), next);
    }
}

fn find_product(
    problem: &BlackScholesProblem,
    max_group: usize,
) -> Option<(MultiplicativeTransform, BlackScholesProblem)> {
    let dim = problem.dim();
    let cfg = problem.probe_config();
    for size in 2..=max_group.min(dim) {
        for group in combinations(dim, size) {
            let found = match detect_group_structure(problem.payoff(), dim, &group, &cfg) {
                Ok(Some(g)) => g,
                Ok(None) => continue,
                Err(e) => {
                    log::debug!("probe on {group:?} failed: {e}");
                    continue;
                }
            };
            let Ok(t) = MultiplicativeTransform::new(found.group, found.alphas, dim) else {
                continue;
            };
            match apply_group_transform(problem, &t) {
                Ok(next) => return Some(rescale_to_linear(problem, t, next)),
                Err(e) => log::debug!("candidate {group:?} rejected: {e}"),
            }
        }
    }
    None
}

/// If the new variable enters the payoff only as `z^p`, uses `z^p` instead.
fn rescale_to_linear(
    problem: &BlackScholesProblem,
    t: MultiplicativeTransform,
    next: BlackScholesProblem,
) -> (MultiplicativeTransform, BlackScholesProblem) {
    let mut powers = Vec::new();
    collect_powers(next.payoff(), &mut powers);
    let Some(&p) = powers.first() else {
        return (t, next);
    };
    if p == 1.0 || !p.is_finite() || powers.iter().any(|q| *q != p) {
        return (t, next);
    }
    let alphas = t.alphas().iter().map(|a| a * p).collect();
    let scaled = MultiplicativeTransform::new(t.group().to_vec(), alphas, t.dim())
        .and_then(|s| apply_group_transform(problem, &s).map(|n| (s, n)));
    scaled.unwrap_or((t, next))
}

/// Exponent of every occurrence of `S0`, 1 for a bare symbol.
fn collect_powers(expr: &PayoffExpr, out: &mut Vec<f64>) {
    match expr {
        PayoffExpr::Symbol(0) => out.push(1.0),
        PayoffExpr::Pow(b, p) if matches!(**b, PayoffExpr::Symbol(0)) => out.push(*p),
        PayoffExpr::Symbol(_) | PayoffExpr::Const(_) => {}
        PayoffExpr::Add(a, b)
        | PayoffExpr::Sub(a, b)
        | PayoffExpr::Mul(a, b)
        | PayoffExpr::Div(a, b) => {
            collect_powers(a, out);
            collect_powers(b, out);
        }
        PayoffExpr::Pow(a, _) | PayoffExpr::Neg(a) => collect_powers(a, out),
        PayoffExpr::Max(v) | PayoffExpr::Min(v) => v.iter().for_each(|e| collect_powers(e, out)),
    }
}

/// `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::payoff::parse_payoff;

    fn problem(n: usize, payoff: &str) -> BlackScholesProblem {
        let cov = Matrix::from_fn(n, |i, j| {
            if i == j {
                0.04 + 0.01 * i as f64
            } else {
                0.005
            }
        });
        BlackScholesProblem::new(cov, 0.05, vec![0.01; n], 1.0, parse_payoff(payoff).unwrap())
            .unwrap()
            .with_spots((0..n).map(|i| 90.0 + 5.0 * i as f64).collect())
            .unwrap()
    }

    #[test]
    fn combinations_in_order() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn triple_product_call_goes_to_one_dimension() {
        let p = problem(3, "max(S0*S1*S2 - 1000000, 0)");
        let plan = plan_reduction(&p);
        assert_eq!(plan.reduced_dim(), 1);
        assert_eq!(plan.reduced().payoff().to_string(), "max(S0 - 1000000, 0)");
        let (s, factor) = plan.map_spots(&[90.0, 95.0, 100.0]);
        assert!((s[0] - 90.0 * 95.0 * 100.0).abs() < 1e-6);
        assert_eq!(factor, 1.0);
    }

    #[test]
    fn max_of_three_uses_numeraire() {
        let p = problem(3, "max(S0, S1, S2)");
        let plan = plan_reduction(&p);
        assert_eq!(plan.reduced_dim(), 2);
        assert_eq!(plan.steps(), &[ReductionStep::Numeraire { index: 0 }]);
        assert_eq!(plan.reduced().rate(), 0.0);
        assert_eq!(plan.reduced().payoff().to_string(), "max(S0, S1, 1)");
        let scale = plan.value_scale().unwrap();
        assert!((scale - 90.0 * (-0.01f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn exchange_option_goes_to_one_dimension() {
        let p = problem(2, "max(S1 - S0, 0)");
        let plan = plan_reduction(&p);
        assert_eq!(plan.reduced_dim(), 1);
        assert_eq!(plan.reduced().payoff().to_string(), "max(S0 - 1, 0)");
    }

    #[test]
    fn additive_basket_is_left_alone() {
        let p = problem(2, "max(S0 + S1 - 190, 0)");
        let plan = plan_reduction(&p);
        assert!(plan.steps().is_empty());
        assert_eq!(plan.reduced_dim(), 2);
    }

    #[test]
    fn geometric_mean_keeps_payoff_linear() {
        let p = problem(3, "max(S0^0.5*S1^0.3*S2^0.2 - 100, 0)");
        let plan = plan_reduction(&p);
        assert_eq!(plan.reduced_dim(), 1);
        assert_eq!(plan.reduced().payoff().to_string(), "max(S0 - 100, 0)");
        let ReductionStep::Product(t) = &plan.steps()[0] else {
            panic!()
        };
        assert_eq!(t.alphas(), &[0.5, 0.3]);
    }

    #[test]
    fn product_then_numeraire_reaches_one_dimension() {
        let p = problem(3, "max(S0*S1 - 1.3*S2, 0)");
        let plan = plan_reduction(&p);
        assert_eq!(plan.reduced_dim(), 1);
        assert!(matches!(plan.steps()[0], ReductionStep::Product(_)));
        assert_eq!(plan.steps()[1], ReductionStep::Numeraire { index: 0 });
        assert_eq!(plan.reduced().rate(), 0.0);
    }

    #[test]
    fn plan_is_deterministic() {
        let p = problem(4, "max(S0*S1 - S2*S3, 0)");
        let a = plan_reduction(&p);
        let b = plan_reduction(&p);
        assert_eq!(a.steps(), b.steps());
        assert_eq!(a.reduced(), b.reduced());
        assert_eq!(a.reduced_dim(), 1);
    }
}
