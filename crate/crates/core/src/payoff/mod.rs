//! Payoff expressions over asset symbols `S0`…`S15`.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= ['+' | '-'] number | '(' constant expr ')'
//! primary := number | 'S'digits | ('max' | 'min') '(' expr (',' expr)+ ')' | '(' expr ')'
//! ```

mod parser;
pub(crate) mod probe;
pub(crate) mod rewrite;

use std::fmt;

use thiserror::Error;

pub use parser::parse_payoff;
pub use probe::{check_homogeneity, detect_group_structure, GroupStructure, ProbeConfig};
pub use rewrite::{rewrite_payoff, rewrite_payoff_unchecked, substitute_product_group};

/// Highest symbol index accepted by the parser.
pub const MAX_SYMBOL: usize = 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PayoffError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("probe straddles a max/min kink after {attempts} jittered attempts")]
    NonDifferentiableKink { attempts: usize },
    #[error("payoff is not a function of the group variable: {0}")]
    NotReducible(String),
}

/// Expression tree for a terminal payoff.
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffExpr {
    Symbol(usize),
    Const(f64),
    Add(Box<PayoffExpr>, Box<PayoffExpr>),
    Sub(Box<PayoffExpr>, Box<PayoffExpr>),
    Mul(Box<PayoffExpr>, Box<PayoffExpr>),
    Div(Box<PayoffExpr>, Box<PayoffExpr>),
    /// Base raised to a constant exponent.
    Pow(Box<PayoffExpr>, f64),
    Max(Vec<PayoffExpr>),
    Min(Vec<PayoffExpr>),
    Neg(Box<PayoffExpr>),
}

use PayoffExpr::*;

impl PayoffExpr {
    pub fn sym(i: usize) -> Self {
        Symbol(i)
    }

    pub fn constant(c: f64) -> Self {
        Const(c)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Self, b: Self) -> Self {
        Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Self, b: Self) -> Self {
        Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Self, b: Self) -> Self {
        Mul(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Self, b: Self) -> Self {
        Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Self, e: f64) -> Self {
        Pow(Box::new(a), e)
    }

    /// Evaluates at asset values `s`.
    pub fn eval(&self, s: &[f64]) -> Result<f64, PayoffError> {
        let v = match self {
            Symbol(i) => *s.get(*i).ok_or_else(|| {
                PayoffError::Domain(format!("symbol S{i} but only {} values supplied", s.len()))
            })?,
            Const(c) => *c,
            Add(a, b) => a.eval(s)? + b.eval(s)?,
            Sub(a, b) => a.eval(s)? - b.eval(s)?,
            Mul(a, b) => a.eval(s)? * b.eval(s)?,
            Div(a, b) => {
                let d = b.eval(s)?;
                if d == 0.0 {
                    return Err(PayoffError::Domain("division by zero".into()));
                }
                a.eval(s)? / d
            }
            Pow(a, e) => {
                let base = a.eval(s)?;
                let v = base.powf(*e);
                if v.is_nan() {
                    return Err(PayoffError::Domain(format!("{base}^{e} is undefined")));
                }
                v
            }
            Max(xs) => {
                let mut m = f64::NEG_INFINITY;
                for x in xs {
                    m = m.max(x.eval(s)?);
                }
                m
            }
            Min(xs) => {
                let mut m = f64::INFINITY;
                for x in xs {
                    m = m.min(x.eval(s)?);
                }
                m
            }
            Neg(a) => -a.eval(s)?,
        };
        Ok(v)
    }

    /// Evaluates at log-coordinates `x` (so `S_i = exp(x_i)`).
    pub fn eval_log(&self, x: &[f64]) -> Result<f64, PayoffError> {
        let s: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        self.eval(&s)
    }

    /// Largest symbol index referenced, if any.
    pub fn max_symbol(&self) -> Option<usize> {
        let mut best = None;
        self.visit(&mut |e| {
            if let Symbol(i) = e {
                best = Some(best.map_or(*i, |b: usize| b.max(*i)));
            }
        });
        best
    }

    /// Whether symbol `i` occurs anywhere in the tree.
    pub fn references(&self, i: usize) -> bool {
        let mut hit = false;
        self.visit(&mut |e| hit |= matches!(e, Symbol(j) if *j == i));
        hit
    }

    fn visit(&self, f: &mut impl FnMut(&PayoffExpr)) {
        f(self);
        match self {
            Symbol(_) | Const(_) => {}
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Pow(a, _) | Neg(a) => a.visit(f),
            Max(xs) | Min(xs) => xs.iter().for_each(|x| x.visit(f)),
        }
    }

    /// Replaces every symbol by `f(index)`.
    pub fn substitute(&self, f: &impl Fn(usize) -> PayoffExpr) -> PayoffExpr {
        let bx = |e: &PayoffExpr| Box::new(e.substitute(f));
        match self {
            Symbol(i) => f(*i),
            Const(c) => Const(*c),
            Add(a, b) => Add(bx(a), bx(b)),
            Sub(a, b) => Sub(bx(a), bx(b)),
            Mul(a, b) => Mul(bx(a), bx(b)),
            Div(a, b) => Div(bx(a), bx(b)),
            Pow(a, e) => Pow(bx(a), *e),
            Max(xs) => Max(xs.iter().map(|x| x.substitute(f)).collect()),
            Min(xs) => Min(xs.iter().map(|x| x.substitute(f)).collect()),
            Neg(a) => Neg(bx(a)),
        }
    }

    /// Constant folding and identity removal. Symbols are positive asset
    /// values, so `(x^a)^b = x^(ab)` holds for symbol-only bases.
    pub fn simplify(&self) -> PayoffExpr {
        match self {
            Symbol(_) | Const(_) => self.clone(),
            Add(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x + y),
                (Const(z), e) | (e, Const(z)) if z == 0.0 => e,
                (x, y) => Add(Box::new(x), Box::new(y)),
            },
            Sub(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x - y),
                (e, Const(z)) if z == 0.0 => e,
                (x, y) => Sub(Box::new(x), Box::new(y)),
            },
            Mul(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) => Const(x * y),
                (Const(o), e) | (e, Const(o)) if o == 1.0 => e,
                (x, y) => Mul(Box::new(x), Box::new(y)),
            },
            Div(a, b) => match (a.simplify(), b.simplify()) {
                (Const(x), Const(y)) if y != 0.0 => Const(x / y),
                (e, Const(o)) if o == 1.0 => e,
                (x, y) => Div(Box::new(x), Box::new(y)),
            },
            Pow(a, e) => match a.simplify() {
                _ if *e == 0.0 => Const(1.0),
                base if *e == 1.0 => base,
                Const(c) => Const(c.powf(*e)),
                Pow(inner, e2) if inner.is_positive_atom_product() => {
                    let combined = e2 * e;
                    if combined == 1.0 {
                        *inner
                    } else {
                        Pow(inner, combined)
                    }
                }
                base => Pow(Box::new(base), *e),
            },
            Max(xs) => fold_extremum(xs, true),
            Min(xs) => fold_extremum(xs, false),
            Neg(a) => match a.simplify() {
                Const(c) => Const(-c),
                Neg(inner) => *inner,
                e => Neg(Box::new(e)),
            },
        }
    }

    /// Products/powers of symbols and positive constants: strictly positive.
    fn is_positive_atom_product(&self) -> bool {
        match self {
            Symbol(_) => true,
            Const(c) => *c > 0.0,
            Mul(a, b) | Div(a, b) => a.is_positive_atom_product() && b.is_positive_atom_product(),
            Pow(a, _) => a.is_positive_atom_product(),
            _ => false,
        }
    }

    /// Coefficients `(a, b)` with `self == a·S_sym + b` when the expression is
    /// affine in that single symbol and references no other.
    pub fn affine_in(&self, sym: usize) -> Option<(f64, f64)> {
        match self {
            Symbol(i) => (*i == sym).then_some((1.0, 0.0)),
            Const(c) => Some((0.0, *c)),
            Add(a, b) => {
                let (a1, b1) = a.affine_in(sym)?;
                let (a2, b2) = b.affine_in(sym)?;
                Some((a1 + a2, b1 + b2))
            }
            Sub(a, b) => {
                let (a1, b1) = a.affine_in(sym)?;
                let (a2, b2) = b.affine_in(sym)?;
                Some((a1 - a2, b1 - b2))
            }
            Mul(a, b) => {
                let (a1, b1) = a.affine_in(sym)?;
                let (a2, b2) = b.affine_in(sym)?;
                match (a1 == 0.0, a2 == 0.0) {
                    (true, _) => Some((b1 * a2, b1 * b2)),
                    (_, true) => Some((a1 * b2, b1 * b2)),
                    _ => None,
                }
            }
            Div(a, b) => {
                let (a1, b1) = a.affine_in(sym)?;
                let (a2, b2) = b.affine_in(sym)?;
                (a2 == 0.0 && b2 != 0.0).then(|| (a1 / b2, b1 / b2))
            }
            Neg(a) => a.affine_in(sym).map(|(x, y)| (-x, -y)),
            Pow(a, e) => {
                let (x, y) = a.affine_in(sym)?;
                if *e == 1.0 {
                    Some((x, y))
                } else if x == 0.0 {
                    Some((0.0, y.powf(*e)))
                } else {
                    None
                }
            }
            Max(_) | Min(_) => None,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 3,
            Pow(..) => 4,
            Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }
}

fn fold_extremum(xs: &[PayoffExpr], is_max: bool) -> PayoffExpr {
    let items: Vec<PayoffExpr> = xs.iter().map(|x| x.simplify()).collect();
    let mut consts = items.iter().filter_map(|x| match x {
        Const(c) => Some(*c),
        _ => None,
    });
    let folded = consts
        .next()
        .map(|first| consts.fold(first, |m, c| if is_max { m.max(c) } else { m.min(c) }));
    let mut rest: Vec<PayoffExpr> = items
        .into_iter()
        .filter(|x| !matches!(x, Const(_)))
        .collect();
    if let Some(c) = folded {
        rest.push(Const(c));
    }
    match rest.len() {
        1 => rest.pop().unwrap(),
        _ if is_max => Max(rest),
        _ => Min(rest),
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 {
        write!(f, "-{}", -c)
    } else {
        write!(f, "{c}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &PayoffExpr, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for PayoffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol(i) => write!(f, "S{i}"),
            Const(c) => write_number(f, *c),
            Add(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(" + ")?;
                write_child(f, b, 2)
            }
            Sub(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(" - ")?;
                write_child(f, b, 2)
            }
            Mul(a, b) => {
                write_child(f, a, 2)?;
                f.write_str("*")?;
                write_child(f, b, 3)
            }
            Div(a, b) => {
                write_child(f, a, 2)?;
                f.write_str("/")?;
                write_child(f, b, 3)
            }
            Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, 4)
            }
            Pow(a, e) => {
                write_child(f, a, 5)?;
                if *e < 0.0 {
                    write!(f, "^({})", PayoffExpr::Const(*e))
                } else {
                    write!(f, "^{e}")
                }
            }
            Max(xs) | Min(xs) => {
                f.write_str(if matches!(self, Max(_)) {
                    "max("
                } else {
                    "min("
                })?;
                for (k, x) in xs.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PayoffExpr {
        parse_payoff(s).unwrap()
    }

    #[test]
    fn eval_examples() {
        let e = p("max(S0*S1 - 100, 0)");
        assert_eq!(e.eval(&[10.0, 20.0]).unwrap(), 100.0);
        assert_eq!(e.eval(&[5.0, 10.0]).unwrap(), 0.0);
        assert_eq!(p("max(S0,S1)").eval(&[3.0, 7.0]).unwrap(), 7.0);
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        let e = p("S0/(S1 - 2)");
        assert!(matches!(e.eval(&[1.0, 2.0]), Err(PayoffError::Domain(_))));
        assert!(matches!(p("S3").eval(&[1.0]), Err(PayoffError::Domain(_))));
    }

    #[test]
    fn display_round_trip_is_exact_on_examples() {
        for src in [
            "max(S0*S1 - 100, 0)",
            "S0^0.5*S1^0.5",
            "-(S0 - S1)/(S2 + 3)",
            "S0 - (S1 - S2)",
            "S0/(S1/S2)",
            "min(S0, -2.5*S1, S2^(-1.5))",
            "(S0*S1*S2)^0.3333333333333333",
            "(-S0)^2 + 1e-7",
        ] {
            let e = p(src);
            let printed = e.to_string();
            assert_eq!(p(&printed), e, "{src} -> {printed}");
        }
    }

    #[test]
    fn simplify_removes_identities() {
        let e = p("max(S0*1*S2 - 100, 0)").simplify();
        assert_eq!(e.to_string(), "max(S0*S2 - 100, 0)");
        let e = p("(S0^2)^0.5*1^0.7").simplify();
        assert_eq!(e, PayoffExpr::sym(0));
        assert_eq!(p("max(1, 3, S1)").simplify().to_string(), "max(S1, 3)");
    }

    #[test]
    fn affine_extraction() {
        assert_eq!(p("max(S0 - 130, 0)").affine_in(0), None);
        assert_eq!(p("S0 - 130").affine_in(0), Some((1.0, -130.0)));
        assert_eq!(p("1 - 2*S0").affine_in(0), Some((-2.0, 1.0)));
        assert_eq!(p("(S0 + 1)/4").affine_in(0), Some((0.25, 0.25)));
        assert_eq!(p("S0*S0").affine_in(0), None);
        assert_eq!(p("S1 - 3").affine_in(0), None);
    }

    #[test]
    fn symbol_queries() {
        let e = p("max(S0*S3 - 1, S1)");
        assert_eq!(e.max_symbol(), Some(3));
        assert!(e.references(1));
        assert!(!e.references(2));
        assert_eq!(p("3").max_symbol(), None);
    }
}
