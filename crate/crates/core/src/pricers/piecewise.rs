use crate::payoff::PayoffExpr;

/// Continuous piecewise-linear function of one positive variable.
///
/// `lines[k] = (slope, intercept)` holds on `[breaks[k-1], breaks[k]]`, with
/// the first segment starting at 0 and the last unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    breaks: Vec<f64>,
    lines: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        Self {
            breaks: Vec::new(),
            lines: vec![(slope, intercept)],
        }
    }

    /// Reads a payoff in `S0` built from constants, `+ - * /`, `max` and `min`.
    pub fn from_payoff(expr: &PayoffExpr) -> Option<Self> {
        use PayoffExpr::*;
        Some(match expr {
            Symbol(0) => Self::affine(1.0, 0.0),
            Symbol(_) => return None,
            Const(c) => Self::affine(0.0, *c),
            Add(a, b) => Self::from_payoff(a)?.zip(&Self::from_payoff(b)?, |x, y| x + y),
            Sub(a, b) => Self::from_payoff(a)?.zip(&Self::from_payoff(b)?, |x, y| x - y),
            Neg(a) => Self::from_payoff(a)?.scale(-1.0),
            Mul(a, b) => {
                let (fa, fb) = (Self::from_payoff(a)?, Self::from_payoff(b)?);
                if let Some(c) = fa.constant() {
                    fb.scale(c)
                } else {
                    fa.scale(fb.constant()?)
                }
            }
            Div(a, b) => {
                let c = Self::from_payoff(b)?.constant().filter(|c| *c != 0.0)?;
                Self::from_payoff(a)?.scale(1.0 / c)
            }
            Pow(a, e) => {
                let f = Self::from_payoff(a)?;
                match f.constant() {
                    Some(c) => Self::affine(0.0, c.powf(*e)),
                    None if *e == 1.0 => f,
                    None => return None,
                }
            }
            Max(args) | Min(args) => {
                let is_max = matches!(expr, Max(_));
                let mut acc = Self::from_payoff(&args[0])?;
                for a in &args[1..] {
                    acc = acc.extremum(&Self::from_payoff(a)?, is_max);
                }
                acc
            }
        })
    }

    pub fn eval(&self, s: f64) -> f64 {
        let k = self.breaks.partition_point(|b| *b <= s);
        let (a, b) = self.lines[k];
        a * s + b
    }

    fn constant(&self) -> Option<f64> {
        (self.breaks.is_empty() && self.lines[0].0 == 0.0).then_some(self.lines[0].1)
    }

    fn scale(mut self, c: f64) -> Self {
        for l in &mut self.lines {
            *l = (l.0 * c, l.1 * c);
        }
        self.normalized()
    }

    fn refine(&self, breaks: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(breaks.len() + 1);
        for k in 0..=breaks.len() {
            let probe = segment_probe(breaks, k);
            out.push(self.lines[self.breaks.partition_point(|b| *b <= probe)]);
        }
        out
    }

    fn zip(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        let breaks = merge(&self.breaks, &other.breaks);
        let (l1, l2) = (self.refine(&breaks), other.refine(&breaks));
        let lines = l1
            .iter()
            .zip(&l2)
            .map(|(x, y)| (op(x.0, y.0), op(x.1, y.1)))
            .collect();
        Self { breaks, lines }.normalized()
    }

    fn extremum(&self, other: &Self, is_max: bool) -> Self {
        let base = merge(&self.breaks, &other.breaks);
        let (l1, l2) = (self.refine(&base), other.refine(&base));
        let mut breaks = Vec::new();
        let mut lines = Vec::new();
        for k in 0..=base.len() {
            let lo = if k == 0 { 0.0 } else { base[k - 1] };
            let hi = base.get(k).copied().unwrap_or(f64::INFINITY);
            let (x, y) = (l1[k], l2[k]);
            let pick = |s: f64| {
                let (vx, vy) = (x.0 * s + x.1, y.0 * s + y.1);
                if (vx >= vy) == is_max {
                    x
                } else {
                    y
                }
            };
            let cross = if x.0 != y.0 {
                (y.1 - x.1) / (x.0 - y.0)
            } else {
                f64::NAN
            };
            if cross > lo && cross < hi {
                lines.push(pick(mid(lo, cross)));
                breaks.push(cross);
                lines.push(pick(mid(cross, hi)));
            } else {
                lines.push(pick(mid(lo, hi)));
            }
            if k < base.len() {
                breaks.push(base[k]);
            }
        }
        Self { breaks, lines }.normalized()
    }

    fn normalized(self) -> Self {
        let mut breaks = Vec::with_capacity(self.breaks.len());
        let mut lines = vec![self.lines[0]];
        for (b, l) in self.breaks.iter().zip(&self.lines[1..]) {
            if *l != *lines.last().expect("nonempty") {
                breaks.push(*b);
                lines.push(*l);
            }
        }
        Self { breaks, lines }
    }

    /// `f(S) = a S + b + Σ w_k max(S - K_k, 0)` as `((a, b), [(K_k, w_k)])`.
    pub fn call_decomposition(&self) -> ((f64, f64), Vec<(f64, f64)>) {
        let calls = self
            .breaks
            .iter()
            .enumerate()
            .map(|(k, b)| (*b, self.lines[k + 1].0 - self.lines[k].0))
            .collect();
        (self.lines[0], calls)
    }
}

fn mid(lo: f64, hi: f64) -> f64 {
    if hi.is_finite() {
        0.5 * (lo + hi)
    } else {
        lo.max(1.0) * 2.0
    }
}

fn segment_probe(breaks: &[f64], k: usize) -> f64 {
    let lo = if k == 0 { 0.0 } else { breaks[k - 1] };
    mid(lo, breaks.get(k).copied().unwrap_or(f64::INFINITY))
}

fn merge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().filter(|x| *x > 0.0).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::parse_payoff;

    fn pl(s: &str) -> PiecewiseLinear {
        PiecewiseLinear::from_payoff(&parse_payoff(s).unwrap()).unwrap()
    }

    #[test]
    fn call_and_put() {
        assert_eq!(
            pl("max(S0 - 100, 0)").call_decomposition(),
            ((0.0, 0.0), vec![(100.0, 1.0)])
        );
        assert_eq!(
            pl("max(100 - S0, 0)").call_decomposition(),
            ((-1.0, 100.0), vec![(100.0, 1.0)])
        );
    }

    #[test]
    fn matches_pointwise() {
        for s in [
            "max(S0 - 90, 0) - max(S0 - 110, 0)",
            "min(max(S0, 80), 120)",
            "2*max(S0 - 1, 1 - S0) + 3",
            "max(S0 - 1, 0, 0.5*S0 - 0.2)",
            "(max(S0, 1) - 1)/4",
            "-min(S0 - 5, 2*S0 - 12)",
        ] {
            let e = parse_payoff(s).unwrap();
            let f = pl(s);
            for k in 0..400 {
                let x = 0.05 * k as f64;
                let want = e.eval(&[x]).unwrap();
                assert!((f.eval(x) - want).abs() < 1e-12, "{s} at {x}");
                let ((a, b), calls) = f.call_decomposition();
                let rebuilt = a * x
                    + b
                    + calls
                        .iter()
                        .map(|(kk, w)| w * (x - kk).max(0.0))
                        .sum::<f64>();
                assert!((rebuilt - want).abs() < 1e-12, "{s} rebuilt at {x}");
            }
        }
    }

    #[test]
    fn nonlinear_payoffs_are_rejected() {
        for s in ["S0^2", "max(S0*S0 - 1, 0)", "S1", "1/S0"] {
            assert!(
                PiecewiseLinear::from_payoff(&parse_payoff(s).unwrap()).is_none(),
                "{s}"
            );
        }
    }
}
