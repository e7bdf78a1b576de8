use super::{PayoffError, PayoffExpr, MAX_SYMBOL};

/// Parses payoff text into an expression tree.
pub fn parse_payoff(text: &str) -> Result<PayoffExpr, PayoffError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error(&self, message: &str) -> PayoffError {
        let message = if self.pos >= self.src.len() {
            format!("{message} (end of input)")
        } else {
            message.to_string()
        };
        PayoffError::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), PayoffError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<PayoffExpr, PayoffError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = PayoffExpr::add(lhs, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = PayoffExpr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<PayoffExpr, PayoffError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = PayoffExpr::mul(lhs, self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = PayoffExpr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<PayoffExpr, PayoffError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let literal = matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.');
            let inner = self.unary()?;
            // keep literals like `-2.5` as constants
            return Ok(match inner {
                PayoffExpr::Const(c) if literal => PayoffExpr::Const(-c),
                e => PayoffExpr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<PayoffExpr, PayoffError> {
        let base = self.primary()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let exponent = self.exponent()?;
        if self.peek() == Some(b'^') {
            return Err(self.error("chained `^` is ambiguous; use parentheses"));
        }
        Ok(PayoffExpr::pow(base, exponent))
    }

    fn exponent(&mut self) -> Result<f64, PayoffError> {
        match self.peek() {
            Some(b'(') => {
                let start = self.pos;
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                if e.max_symbol().is_some() {
                    return Err(PayoffError::Syntax {
                        offset: start,
                        message: "exponent must be constant".into(),
                    });
                }
                e.eval(&[]).map_err(|_| PayoffError::Syntax {
                    offset: start,
                    message: "exponent does not evaluate to a number".into(),
                })
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.number()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.number()
            }
            _ => self.number(),
        }
    }

    fn number(&mut self) -> Result<f64, PayoffError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - b
        };
        let mut p = self.pos;
        let int_len = digits(&mut p);
        let mut frac_len = 0;
        if p < s.len() && s[p] == b'.' {
            p += 1;
            frac_len = digits(&mut p);
        }
        if int_len + frac_len == 0 {
            return Err(self.error("expected a number"));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        let text = std::str::from_utf8(&s[start..p]).expect("ascii slice");
        self.pos = p;
        text.parse::<f64>().map_err(|_| PayoffError::Syntax {
            offset: start,
            message: format!("invalid number `{text}`"),
        })
    }

    fn primary(&mut self) -> Result<PayoffExpr, PayoffError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(PayoffExpr::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("expected an operand")),
        }
    }

    fn identifier(&mut self) -> Result<PayoffExpr, PayoffError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        match name {
            "max" | "min" => {
                self.expect(b'(')?;
                let mut args = vec![self.expr()?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                self.expect(b')')?;
                if args.len() < 2 {
                    return Err(PayoffError::Syntax {
                        offset: start,
                        message: format!("{name}() needs at least two arguments"),
                    });
                }
                Ok(if name == "max" {
                    PayoffExpr::Max(args)
                } else {
                    PayoffExpr::Min(args)
                })
            }
            _ => {
                let idx = name
                    .strip_prefix('S')
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&i| i <= MAX_SYMBOL);
                idx.map(PayoffExpr::Symbol)
                    .ok_or_else(|| PayoffError::UnknownSymbol {
                        name: name.to_string(),
                        offset: start,
                    })
            }
        }
    }
}
