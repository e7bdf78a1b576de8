use crate::linalg::Matrix;
use crate::payoff::probe::close;
use crate::payoff::rewrite::rest_mapping;
use crate::payoff::{check_homogeneity, rewrite_payoff, rewrite_payoff_unchecked, PayoffExpr};

use super::{BlackScholesProblem, ReductionError};

const LARGE_ALPHA: f64 = 10.0;

/// `z = Π_{i∈G} S_i^{α_i}` for a group of at least two distinct assets.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeTransform {
    group: Vec<usize>,
    alphas: Vec<f64>,
    dim: usize,
}

impl MultiplicativeTransform {
    /// Group members are sorted by index, keeping each exponent with its asset.
    pub fn new(group: Vec<usize>, alphas: Vec<f64>, dim: usize) -> Result<Self, ReductionError> {
        let bad = |m: String| Err(ReductionError::InvalidTransform(m));
        if group.len() != alphas.len() {
            return bad(format!(
                "{} indices but {} exponents",
                group.len(),
                alphas.len()
            ));
        }
        if group.len() < 2 {
            return bad("a group needs at least two assets".into());
        }
        if let Some(&i) = group.iter().find(|&&i| i >= dim) {
            return bad(format!("index {i} out of range for dimension {dim}"));
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return bad("exponents must be finite".into());
        }
        if alphas.iter().all(|a| *a == 0.0) {
            return bad("at least one exponent must be nonzero".into());
        }
        let mut pairs: Vec<(usize, f64)> = group.into_iter().zip(alphas).collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return bad("group indices must be distinct".into());
        }
        if pairs.iter().any(|p| p.1.abs() > LARGE_ALPHA) {
            log::warn!("exponent above {LARGE_ALPHA} in magnitude; reduced variance may be large");
        }
        let (group, alphas) = pairs.into_iter().unzip();
        Ok(Self { group, alphas, dim })
    }

    pub fn group(&self) -> &[usize] {
        &self.group
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reduced_dim(&self) -> usize {
        self.dim - self.group.len() + 1
    }

    /// Maps original asset values to `(z, S_rest...)`.
    pub fn apply_to_values(&self, s: &[f64]) -> Vec<f64> {
        let z = self
            .group
            .iter()
            .zip(&self.alphas)
            .filter(|(_, a)| **a != 0.0)
            .map(|(&i, &a)| if a == 1.0 { s[i] } else { s[i].powf(a) })
            .product::<f64>();
        let mut out = Vec::with_capacity(self.reduced_dim());
        out.push(z);
        out.extend(
            (0..s.len())
                .filter(|i| !self.group.contains(i))
                .map(|i| s[i]),
        );
        out
    }

    /// Rows of the linear map `y = T x` on log prices.
    pub fn log_map(&self) -> Vec<Vec<f64>> {
        let mut rows = Vec::with_capacity(self.reduced_dim());
        let mut first = vec![0.0; self.dim];
        for (&i, &a) in self.group.iter().zip(&self.alphas) {
            first[i] = a;
        }
        rows.push(first);
        for i in (0..self.dim).filter(|i| !self.group.contains(i)) {
            let mut row = vec![0.0; self.dim];
            row[i] = 1.0;
            rows.push(row);
        }
        rows
    }
}

/// Rows of `y_i = x_i - x_m` for `i ≠ m`.
pub fn numeraire_log_map(dim: usize, m: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .filter(|&i| i != m)
        .map(|i| {
            let mut row = vec![0.0; dim];
            row[i] = 1.0;
            row[m] -= 1.0;
            row
        })
        .collect()
}

fn power_name(name: &str, alpha: f64) -> String {
    let base = if name.contains(['*', '/', '^']) {
        format!("({name})")
    } else {
        name.to_string()
    };
    if alpha == 1.0 {
        base
    } else {
        format!("{base}^{alpha}")
    }
}

fn product_name(names: &[String], t: &MultiplicativeTransform) -> String {
    let parts: Vec<String> = t
        .group
        .iter()
        .zip(&t.alphas)
        .filter(|(_, a)| **a != 0.0)
        .map(|(&i, &a)| power_name(&names[i], a))
        .collect();
    parts.join("*")
}

/// Assembles the reduced problem once `ā_00`, `ā_0j` and `q̄_0` are known.
fn assemble(
    problem: &BlackScholesProblem,
    t: &MultiplicativeTransform,
    a00: f64,
    a0: &[f64],
    q0: f64,
    payoff: PayoffExpr,
) -> Result<BlackScholesProblem, ReductionError> {
    let rest: Vec<usize> = (0..problem.dim())
        .filter(|i| !t.group.contains(i))
        .collect();
    let n = rest.len() + 1;
    let a = problem.cov();
    let cov = Matrix::from_fn(n, |i, j| match (i, j) {
        (0, 0) => a00,
        (0, j) => a0[rest[j - 1]],
        (i, 0) => a0[rest[i - 1]],
        (i, j) => a[(rest[i - 1], rest[j - 1])],
    });
    let mut dividends = vec![q0];
    dividends.extend(rest.iter().map(|&i| problem.dividends()[i]));
    let names = problem.names();
    let mut new_names = vec![product_name(names, t)];
    new_names.extend(rest.iter().map(|&i| names[i].clone()));
    let spots = problem.spots().map(|s| t.apply_to_values(s));
    BlackScholesProblem::from_parts(
        cov,
        problem.rate(),
        dividends,
        problem.maturity(),
        payoff,
        spots,
        new_names,
    )
}

fn verified_payoff(
    problem: &BlackScholesProblem,
    t: &MultiplicativeTransform,
) -> Result<PayoffExpr, ReductionError> {
    rewrite_payoff(problem.payoff(), problem.dim(), t, &problem.probe_config())
        .map_err(ReductionError::PayoffNotReducible)
}

fn check_dim(
    problem: &BlackScholesProblem,
    t: &MultiplicativeTransform,
) -> Result<(), ReductionError> {
    if t.dim() != problem.dim() {
        return Err(ReductionError::InvalidTransform(format!(
            "transform built for dimension {} applied to dimension {}",
            t.dim(),
            problem.dim()
        )));
    }
    Ok(())
}

/// Combines assets `i0` and `i1` into `z = S_i0^α0 S_i1^α1`, placed first.
pub fn apply_pair_transform(
    problem: &BlackScholesProblem,
    i0: usize,
    i1: usize,
    alpha0: f64,
    alpha1: f64,
) -> Result<BlackScholesProblem, ReductionError> {
    let t = MultiplicativeTransform::new(vec![i0, i1], vec![alpha0, alpha1], problem.dim())?;
    let payoff = verified_payoff(problem, &t)?;
    let a = problem.cov();
    let (r, q) = (problem.rate(), problem.dividends());
    let idx = [i0, i1];
    let al = [alpha0, alpha1];
    let mut a00 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            a00 += a[(idx[i], idx[j])] * al[i] * al[j];
        }
    }
    let a0: Vec<f64> = (0..problem.dim())
        .map(|j| a[(i0, j)] * alpha0 + a[(i1, j)] * alpha1)
        .collect();
    let carry: f64 = (0..2)
        .map(|i| (r - q[idx[i]] - 0.5 * a[(idx[i], idx[i])]) * al[i])
        .sum();
    let q0 = r - carry - 0.5 * a00;
    assemble(problem, &t, a00, &a0, q0, payoff)
}

fn group_coefficients(
    problem: &BlackScholesProblem,
    t: &MultiplicativeTransform,
) -> (f64, Vec<f64>, f64) {
    let a = problem.cov();
    let (r, q) = (problem.rate(), problem.dividends());
    let mut alpha = vec![0.0; problem.dim()];
    for (&i, &al) in t.group.iter().zip(&t.alphas) {
        alpha[i] = al;
    }
    let a00 = a.bilinear(&alpha, &alpha);
    let a0 = a.mul_vec(&alpha);
    let carry: f64 = t
        .group
        .iter()
        .zip(&t.alphas)
        .map(|(&i, &al)| (r - q[i] - 0.5 * a[(i, i)]) * al)
        .sum();
    (a00, a0, r - carry - 0.5 * a00)
}

/// Applies the group transform directly through the quadratic form `αᵀAα`.
pub fn apply_group_transform(
    problem: &BlackScholesProblem,
    t: &MultiplicativeTransform,
) -> Result<BlackScholesProblem, ReductionError> {
    check_dim(problem, t)?;
    let payoff = verified_payoff(problem, t)?;
    let (a00, a0, q0) = group_coefficients(problem, t);
    assemble(problem, t, a00, &a0, q0, payoff)
}

/// Like [`apply_group_transform`] but trusts the caller that the payoff
/// factors through the group.
pub fn apply_group_transform_unchecked(
    problem: &BlackScholesProblem,
    t: &MultiplicativeTransform,
) -> Result<BlackScholesProblem, ReductionError> {
    check_dim(problem, t)?;
    let payoff = rewrite_payoff_unchecked(problem.payoff(), problem.dim(), t);
    let (a00, a0, q0) = group_coefficients(problem, t);
    assemble(problem, t, a00, &a0, q0, payoff)
}

/// Coefficients from `t` with a caller-supplied payoff in the reduced variables.
pub fn apply_group_transform_with_payoff(
    problem: &BlackScholesProblem,
    t: &MultiplicativeTransform,
    payoff: PayoffExpr,
) -> Result<BlackScholesProblem, ReductionError> {
    check_dim(problem, t)?;
    let (a00, a0, q0) = group_coefficients(problem, t);
    assemble(problem, t, a00, &a0, q0, payoff)
}

/// Applies the group transform as a chain of pair transforms.
///
/// The first pair joins the leading nonzero exponent with one other member;
/// each later member is then joined to the accumulated variable at index 0
/// with exponents `(1, α_k)`.
pub fn fold_pair_transforms(
    problem: &BlackScholesProblem,
    t: &MultiplicativeTransform,
) -> Result<BlackScholesProblem, ReductionError> {
    check_dim(problem, t)?;
    let lead = t
        .alphas
        .iter()
        .position(|a| *a != 0.0)
        .expect("nonzero exponent");
    let mut order: Vec<usize> = (0..t.group.len()).filter(|&k| k != lead).collect();
    let first = order.remove(0);
    let mut current = apply_pair_transform(
        problem,
        t.group[lead],
        t.group[first],
        t.alphas[lead],
        t.alphas[first],
    )?;
    let mut merged = vec![t.group[lead], t.group[first]];
    for k in order {
        let orig = t.group[k];
        // position of `orig` among the assets not yet merged, shifted past z
        let remap = rest_mapping(problem.dim(), &merged);
        let pos = 1 + remap[orig].expect("unmerged member");
        current = apply_pair_transform(&current, 0, pos, 1.0, t.alphas[k])?;
        merged.push(orig);
    }
    Ok(current)
}

/// Divides by asset `m`: rate 0, `ā_ij = a_ij - a_im - a_mj + a_mm`,
/// `q̄_i = q_i - q_m`, and payoff `F(z) = P` with `S_m := 1`.
///
/// The original value is `S_m(0) e^{-q_m T}` times the reduced value.
pub fn apply_numeraire_change(
    problem: &BlackScholesProblem,
    m: usize,
) -> Result<BlackScholesProblem, ReductionError> {
    let dim = problem.dim();
    if dim < 2 {
        return Err(ReductionError::InvalidTransform(
            "numeraire change needs at least two assets".into(),
        ));
    }
    if m >= dim {
        return Err(ReductionError::InvalidTransform(format!(
            "numeraire index {m} out of range"
        )));
    }
    let cfg = problem.probe_config();
    if !check_homogeneity(problem.payoff(), dim, &cfg) {
        return Err(ReductionError::NotHomogeneous);
    }
    let rest: Vec<usize> = (0..dim).filter(|&i| i != m).collect();
    let a = problem.cov();
    let cov = Matrix::from_fn(dim - 1, |i, j| {
        let (i, j) = (rest[i], rest[j]);
        a[(i, j)] - a[(i, m)] - a[(m, j)] + a[(m, m)]
    });
    let q = problem.dividends();
    let dividends = rest.iter().map(|&i| q[i] - q[m]).collect();
    let payoff = problem
        .payoff()
        .substitute(&|i| {
            if i == m {
                PayoffExpr::Const(1.0)
            } else {
                PayoffExpr::sym(if i < m { i } else { i - 1 })
            }
        })
        .simplify();
    verify_numeraire_payoff(
        problem.payoff(),
        &payoff,
        dim,
        m,
        &cfg.wide_log_points(dim, 256),
    )?;
    let names = problem.names();
    let new_names = rest
        .iter()
        .map(|&i| {
            format!(
                "{}/{}",
                power_name(&names[i], 1.0),
                power_name(&names[m], 1.0)
            )
        })
        .collect();
    let spots = problem
        .spots()
        .map(|s| rest.iter().map(|&i| s[i] / s[m]).collect());
    BlackScholesProblem::from_parts(
        cov,
        0.0,
        dividends,
        problem.maturity(),
        payoff,
        spots,
        new_names,
    )
}

fn verify_numeraire_payoff(
    original: &PayoffExpr,
    reduced: &PayoffExpr,
    dim: usize,
    m: usize,
    points: &[Vec<f64>],
) -> Result<(), ReductionError> {
    let mut pairs = Vec::with_capacity(points.len());
    for x in points {
        let s: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let z: Vec<f64> = (0..dim).filter(|&i| i != m).map(|i| s[i] / s[m]).collect();
        pairs.push((original.eval(&s)?, s[m] * reduced.eval(&z)?));
    }
    let scale = pairs.iter().fold(0.0_f64, |acc, (p, _)| acc.max(p.abs()));
    if pairs.iter().all(|(p, u)| close(*p, *u, 1e-12, scale)) {
        Ok(())
    } else {
        Err(ReductionError::NotHomogeneous)
    }
}
