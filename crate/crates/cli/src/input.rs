use bsreduce_core::linalg::Matrix;
use bsreduce_core::payoff::parse_payoff;
use bsreduce_core::pricers::{FxState, VasicekFxParams};
use bsreduce_core::reduction::BlackScholesProblem;
use serde::Deserialize;
use serde_json::value::RawValue;

use crate::CliError;

/// One entry of a problem file.
#[derive(Debug, Clone)]
pub enum Problem {
    BlackScholes(BlackScholesProblem),
    VasicekFx(VasicekInput),
}

#[derive(Debug, Clone)]
pub struct VasicekInput {
    pub params: VasicekFxParams,
    pub state: FxState,
    /// Valuation time.
    pub t: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BsFile {
    #[allow(dead_code)]
    #[serde(default)]
    model: Option<String>,
    dim: usize,
    #[serde(default)]
    cov: Option<Vec<f64>>,
    #[serde(default)]
    vols: Option<Vec<f64>>,
    #[serde(default)]
    corr: Option<Vec<f64>>,
    rate: f64,
    dividends: Vec<f64>,
    maturity: f64,
    payoff: String,
    #[serde(default)]
    spots: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VasicekFile {
    #[allow(dead_code)]
    model: String,
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    #[serde(default)]
    lambda2: f64,
    sigma1: [f64; 3],
    sigma2: [f64; 3],
    sigma3: [f64; 3],
    strike: f64,
    maturity: f64,
    #[serde(default)]
    t: f64,
    #[serde(default)]
    r1: Option<f64>,
    #[serde(default)]
    r2: Option<f64>,
    #[serde(default)]
    p1: Option<f64>,
    #[serde(default)]
    p2: Option<f64>,
    fx: f64,
}

#[derive(Deserialize)]
struct Peek {
    #[serde(default)]
    model: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct InputOptions {
    /// Covariance given as `vols` and row-major `corr` instead of `cov`.
    pub from_vols: bool,
}

/// Parses a file holding one problem or an array of problems.
pub fn parse_problems(text: &str, opts: InputOptions) -> Result<(Vec<Problem>, bool), CliError> {
    let syntax = |e: serde_json::Error| CliError::Schema(format!("{e}"));
    let batch = text.trim_start().starts_with('[');
    let raws: Vec<&RawValue> = if batch {
        serde_json::from_str(text).map_err(syntax)?
    } else {
        vec![serde_json::from_str(text).map_err(syntax)?]
    };
    let mut out = Vec::with_capacity(raws.len());
    for (k, raw) in raws.into_iter().enumerate() {
        let prefix = if batch {
            format!("[{k}]")
        } else {
            String::new()
        };
        let line0 = line_of(text, raw.get());
        out.push(parse_one(raw.get(), opts).map_err(|e| e.located(&prefix, line0))?);
    }
    Ok((out, batch))
}

fn line_of(text: &str, part: &str) -> usize {
    let offset = part.as_ptr() as usize - text.as_ptr() as usize;
    text[..offset].matches('\n').count()
}

enum EntryError {
    Schema {
        path: String,
        line: usize,
        msg: String,
    },
    Other(CliError),
}

impl EntryError {
    fn located(self, prefix: &str, line0: usize) -> CliError {
        match self {
            EntryError::Schema { path, line, msg } => {
                let path = match (prefix.is_empty(), path.as_str()) {
                    (true, "" | ".") => "<root>".to_string(),
                    (false, "" | ".") => prefix.to_string(),
                    (_, p) => format!("{prefix}{}{p}", if prefix.is_empty() { "" } else { "." }),
                };
                CliError::Schema(format!("line {}: at `{path}`: {msg}", line0 + line))
            }
            EntryError::Other(e) => e,
        }
    }
}

impl From<CliError> for EntryError {
    fn from(e: CliError) -> Self {
        EntryError::Other(e)
    }
}

fn field_error(field: &str, msg: impl Into<String>) -> EntryError {
    EntryError::Schema {
        path: field.to_string(),
        line: 1,
        msg: msg.into(),
    }
}

fn deserialize<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, EntryError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| EntryError::Schema {
        path: e.path().to_string(),
        line: e.inner().line(),
        msg: e.inner().to_string(),
    })
}

fn parse_one(text: &str, opts: InputOptions) -> Result<Problem, EntryError> {
    let peek: Peek = deserialize(text)?;
    match peek.model.as_deref() {
        None | Some("black_scholes") => bs_problem(deserialize(text)?, opts),
        Some("vasicek_fx") => vasicek_problem(deserialize(text)?),
        Some(other) => Err(field_error(
            "model",
            format!("unknown model `{other}`, expected `black_scholes` or `vasicek_fx`"),
        )),
    }
}

fn bs_problem(f: BsFile, opts: InputOptions) -> Result<Problem, EntryError> {
    let n = f.dim;
    if n == 0 {
        return Err(field_error("dim", "must be at least 1"));
    }
    let cov = if opts.from_vols {
        if f.cov.is_some() {
            return Err(field_error("cov", "not allowed with --from-vols"));
        }
        let vols = f
            .vols
            .ok_or_else(|| field_error("vols", "required with --from-vols"))?;
        let corr = f
            .corr
            .ok_or_else(|| field_error("corr", "required with --from-vols"))?;
        check_len("vols", &vols, n)?;
        check_len("corr", &corr, n * n)?;
        if vols.iter().any(|v| !(*v >= 0.0)) {
            return Err(field_error("vols", "must be nonnegative"));
        }
        Matrix::from_fn(n, |i, j| corr[i * n + j] * vols[i] * vols[j])
    } else {
        if f.vols.is_some() || f.corr.is_some() {
            return Err(field_error("vols", "`vols`/`corr` need --from-vols"));
        }
        let cov = f
            .cov
            .ok_or_else(|| field_error("cov", "missing field `cov`"))?;
        check_len("cov", &cov, n * n)?;
        Matrix::from_fn(n, |i, j| cov[i * n + j])
    };
    check_len("dividends", &f.dividends, n)?;
    let payoff = parse_payoff(&f.payoff).map_err(|e| CliError::PayoffParse(e.to_string()))?;
    let mut problem = BlackScholesProblem::new(cov, f.rate, f.dividends, f.maturity, payoff)
        .map_err(CliError::from)?;
    if let Some(spots) = f.spots {
        check_len("spots", &spots, n)?;
        problem = problem.with_spots(spots).map_err(CliError::from)?;
    }
    Ok(Problem::BlackScholes(problem))
}

fn check_len(field: &str, v: &[f64], want: usize) -> Result<(), EntryError> {
    if v.len() != want {
        return Err(field_error(
            field,
            format!("expected {want} entries, found {}", v.len()),
        ));
    }
    Ok(())
}

fn vasicek_problem(f: VasicekFile) -> Result<Problem, EntryError> {
    let params = VasicekFxParams {
        a1: f.a1,
        a2: f.a2,
        b1: f.b1,
        b2: f.b2,
        lambda2: f.lambda2,
        sigma1: f.sigma1,
        sigma2: f.sigma2,
        sigma3: f.sigma3,
        strike: f.strike,
        maturity: f.maturity,
    };
    let state = match (f.r1, f.r2, f.p1, f.p2) {
        (Some(r1), Some(r2), None, None) => FxState::Rates { r1, r2, fx: f.fx },
        (None, None, Some(p1), Some(p2)) => FxState::Bonds { p1, p2, fx: f.fx },
        _ => {
            return Err(field_error(
                "r1",
                "give either `r1` and `r2` or `p1` and `p2`",
            ))
        }
    };
    if !(f.t >= 0.0 && f.t < f.maturity) {
        return Err(field_error("t", "valuation time must lie in [0, maturity)"));
    }
    params
        .validate()
        .map_err(|e| field_error("a1", e.to_string()))?;
    Ok(Problem::VasicekFx(VasicekInput {
        params,
        state,
        t: f.t,
    }))
}
