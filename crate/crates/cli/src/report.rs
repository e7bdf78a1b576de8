use bsreduce_core::reduction::{BlackScholesProblem, ReductionPlan, ReductionStep};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ProblemReport {
    pub dim: usize,
    pub cov: Vec<Vec<f64>>,
    pub rate: f64,
    pub dividends: Vec<f64>,
    pub maturity: f64,
    pub payoff: String,
    pub names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spots: Option<Vec<f64>>,
}

impl From<&BlackScholesProblem> for ProblemReport {
    fn from(p: &BlackScholesProblem) -> Self {
        let n = p.dim();
        Self {
            dim: n,
            cov: (0..n)
                .map(|i| (0..n).map(|j| p.cov()[(i, j)]).collect())
                .collect(),
            rate: p.rate(),
            dividends: p.dividends().to_vec(),
            maturity: p.maturity(),
            payoff: p.payoff().to_string(),
            names: p.names().to_vec(),
            spots: p.spots().map(<[f64]>::to_vec),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    /// Problem after the step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ProblemReport>,
}

impl StepReport {
    fn from_step(step: &ReductionStep, after: &BlackScholesProblem, detailed: bool) -> Self {
        let (kind, group, alphas, index) = match step {
            ReductionStep::Product(t) => (
                "product",
                Some(t.group().to_vec()),
                Some(t.alphas().to_vec()),
                None,
            ),
            ReductionStep::Numeraire { index } => ("numeraire", None, None, Some(*index)),
        };
        Self {
            kind,
            group,
            alphas,
            index,
            variable: Some(after.names()[0].clone()),
            result: detailed.then(|| after.into()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub original_dim: usize,
    pub final_dim: usize,
    pub steps: Vec<StepReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ProblemReport>,
    /// Original value = `value_scale` times the reduced value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_scale: Option<f64>,
}

impl PlanReport {
    pub fn new(plan: &ReductionPlan, detailed: bool) -> Self {
        let steps = plan
            .steps()
            .iter()
            .zip(&plan.states()[1..])
            .map(|(s, after)| StepReport::from_step(s, after, detailed))
            .collect();
        Self {
            original_dim: plan.original_dim(),
            final_dim: plan.reduced_dim(),
            steps,
            reduced: detailed.then(|| plan.reduced().into()),
            value_scale: plan.value_scale(),
        }
    }

    /// The trivial plan of pricing the problem as given.
    pub fn identity(dim: usize) -> Self {
        Self {
            original_dim: dim,
            final_dim: dim,
            steps: Vec::new(),
            reduced: None,
            value_scale: None,
        }
    }

    /// Discounting by the domestic bond: the three-factor model becomes a
    /// one-dimensional lognormal problem in `p2*F/p1`.
    pub fn bond_numeraire() -> Self {
        Self {
            original_dim: 3,
            final_dim: 1,
            steps: vec![StepReport {
                kind: "bond_numeraire",
                group: None,
                alphas: None,
                index: None,
                variable: Some("p2*F/p1".into()),
                result: None,
            }],
            reduced: None,
            value_scale: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VasicekReduced {
    pub spot: f64,
    pub strike: f64,
    pub total_variance: f64,
    pub discount_bond: f64,
    pub foreign_bond: f64,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub unix_time: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReduceReport {
    pub command: &'static str,
    pub model: &'static str,
    #[serde(flatten)]
    pub plan: PlanReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vasicek: Option<VasicekReduced>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceReport {
    pub command: &'static str,
    pub model: &'static str,
    pub method: &'static str,
    pub price: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    pub plan_used: PlanReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub method: &'static str,
    pub price: f64,
    pub std_error: f64,
    pub grid_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub model: &'static str,
    pub verdict: &'static str,
    pub original: EstimateReport,
    pub reduced: EstimateReport,
    pub delta: f64,
    pub tolerance: f64,
    pub tolerance_sigmas: f64,
    pub paths: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced_alphas: Option<Vec<f64>>,
    pub plan: PlanReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Reduce(ReduceReport),
    Price(PriceReport),
    Verify(VerifyReport),
}

impl Report {
    pub fn set_meta(&mut self, meta: Option<Meta>) {
        match self {
            Report::Reduce(r) => r.meta = meta,
            Report::Price(r) => r.meta = meta,
            Report::Verify(r) => r.meta = meta,
        }
    }

    pub fn csv_header(&self) -> &'static [&'static str] {
        match self {
            Report::Reduce(_) => &[
                "index",
                "model",
                "original_dim",
                "final_dim",
                "steps",
                "payoff",
            ],
            Report::Price(_) => &[
                "index",
                "model",
                "method",
                "price",
                "std_error",
                "grid_error",
            ],
            Report::Verify(_) => &[
                "index",
                "model",
                "verdict",
                "original",
                "reduced",
                "delta",
                "tolerance",
            ],
        }
    }

    pub fn csv_row(&self, index: usize) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        match self {
            Report::Reduce(r) => vec![
                index.to_string(),
                r.model.into(),
                r.plan.original_dim.to_string(),
                r.plan.final_dim.to_string(),
                r.plan
                    .steps
                    .iter()
                    .map(|s| s.kind)
                    .collect::<Vec<_>>()
                    .join(";"),
                r.plan
                    .reduced
                    .as_ref()
                    .map(|p| p.payoff.clone())
                    .unwrap_or_default(),
            ],
            Report::Price(r) => vec![
                index.to_string(),
                r.model.into(),
                r.method.into(),
                r.price.to_string(),
                opt(r.std_error),
                opt(r.grid_error),
            ],
            Report::Verify(r) => vec![
                index.to_string(),
                r.model.into(),
                r.verdict.into(),
                r.original.price.to_string(),
                r.reduced.price.to_string(),
                r.delta.to_string(),
                r.tolerance.to_string(),
            ],
        }
    }
}
