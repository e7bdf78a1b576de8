use crate::reduction::MultiplicativeTransform;

use super::probe::close;
use super::{PayoffError, PayoffExpr, ProbeConfig};

const REWRITE_TOL: f64 = 1e-12;
const REWRITE_POINTS: usize = 256;

/// Substitutes the group by a single new symbol placed first, renumbering the
/// remaining assets contiguously in index order.
///
/// With `p` the first group member carrying a nonzero exponent, the result is
/// `P` with `S_p := z^{1/α_p}` and every other group member set to 1. If `P`
/// truly factors through `z = Π S_i^{α_i}` this is exactly `F`; otherwise it
/// is some other function, which [`rewrite_payoff`] rejects.
pub fn substitute_product_group(
    expr: &PayoffExpr,
    dim: usize,
    group: &[usize],
    alphas: &[f64],
) -> PayoffExpr {
    let lead = alphas
        .iter()
        .position(|a| *a != 0.0)
        .expect("transform has a nonzero exponent");
    let lead_idx = group[lead];
    let inv = 1.0 / alphas[lead];
    let remap = rest_mapping(dim, group);
    expr.substitute(&|i| {
        if i == lead_idx {
            PayoffExpr::pow(PayoffExpr::sym(0), inv)
        } else if group.contains(&i) {
            PayoffExpr::Const(1.0)
        } else {
            PayoffExpr::sym(1 + remap[i].expect("symbol outside group is in range"))
        }
    })
    .simplify()
}

/// Position of each non-group index among the remaining assets.
pub(crate) fn rest_mapping(dim: usize, group: &[usize]) -> Vec<Option<usize>> {
    let mut next = 0;
    (0..dim.max(group.iter().max().map_or(0, |m| m + 1)))
        .map(|i| {
            if group.contains(&i) {
                None
            } else {
                next += 1;
                Some(next - 1)
            }
        })
        .collect()
}

/// Rewrites without checking that the payoff actually factors through the group.
pub fn rewrite_payoff_unchecked(
    expr: &PayoffExpr,
    dim: usize,
    t: &MultiplicativeTransform,
) -> PayoffExpr {
    substitute_product_group(expr, dim, t.group(), t.alphas())
}

/// Rewrites `P` as `F(z, S_rest)` and verifies `F(z(s), s_rest) = P(s)` at
/// 256 points spread over three decades around the probe centre.
pub fn rewrite_payoff(
    expr: &PayoffExpr,
    dim: usize,
    t: &MultiplicativeTransform,
    cfg: &ProbeConfig,
) -> Result<PayoffExpr, PayoffError> {
    let f = rewrite_payoff_unchecked(expr, dim, t);
    let points = cfg.wide_log_points(dim, REWRITE_POINTS);
    let mut pairs = Vec::with_capacity(points.len());
    for x in &points {
        let s: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let reduced = t.apply_to_values(&s);
        pairs.push((expr.eval(&s)?, f.eval(&reduced)?));
    }
    let scale = pairs.iter().fold(0.0_f64, |m, (a, _)| m.max(a.abs()));
    for (k, (orig, red)) in pairs.iter().enumerate() {
        if !close(*orig, *red, REWRITE_TOL, scale) {
            return Err(PayoffError::NotReducible(format!(
                "P = {orig} but F = {red} at probe {k}"
            )));
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::parse_payoff;

    fn transform(group: &[usize], alphas: &[f64]) -> MultiplicativeTransform {
        MultiplicativeTransform::new(group.to_vec(), alphas.to_vec(), 16).unwrap()
    }

    #[test]
    fn pair_of_a_triple_product_merges() {
        let e = parse_payoff("max(S0*S1*S2 - 100, 0)").unwrap();
        let f = rewrite_payoff(
            &e,
            3,
            &transform(&[0, 1], &[1.0, 1.0]),
            &ProbeConfig::default(),
        )
        .unwrap();
        assert_eq!(f.to_string(), "max(S0*S1 - 100, 0)");
    }

    #[test]
    fn identity_transform_only_renames() {
        let e = parse_payoff("max(S0 - S2, S1)").unwrap();
        // z = S0, S1 dropped: not valid since S1 matters
        let t = transform(&[0, 1], &[1.0, 0.0]);
        assert!(rewrite_payoff(&e, 3, &t, &ProbeConfig::default()).is_err());
        // z = S0 with group {0, 2} ... S2 matters too, so use a payoff without S2
        let e = parse_payoff("max(S0 - S1, 0)").unwrap();
        let f = rewrite_payoff(
            &e,
            3,
            &transform(&[0, 2], &[1.0, 0.0]),
            &ProbeConfig::default(),
        )
        .unwrap();
        assert_eq!(f.to_string(), "max(S0 - S1, 0)");
    }

    #[test]
    fn fractional_exponents_fold() {
        let e = parse_payoff("max(S0^0.5*S1^0.5 - 10, 0)").unwrap();
        let t = transform(&[0, 1], &[0.5, 0.5]);
        let f = rewrite_payoff(&e, 2, &t, &ProbeConfig::default()).unwrap();
        assert_eq!(f.to_string(), "max(S0 - 10, 0)");
    }

    #[test]
    fn wrong_exponents_are_rejected() {
        let e = parse_payoff("max(S0*S1 - 130, 0)").unwrap();
        let t = transform(&[0, 1], &[1.0, 0.5]);
        assert!(matches!(
            rewrite_payoff(&e, 2, &t, &ProbeConfig::default()),
            Err(PayoffError::NotReducible(_))
        ));
        // the unchecked path happily produces something
        assert_eq!(
            rewrite_payoff_unchecked(&e, 2, &t).to_string(),
            "max(S0 - 130, 0)"
        );
    }

    #[test]
    fn middle_group_renumbers_rest() {
        let e = parse_payoff("max(S1*S2 - S0, S3)").unwrap();
        let f = rewrite_payoff(
            &e,
            4,
            &transform(&[1, 2], &[1.0, 1.0]),
            &ProbeConfig::default(),
        )
        .unwrap();
        assert_eq!(f.to_string(), "max(S0 - S1, S2)");
    }
}
