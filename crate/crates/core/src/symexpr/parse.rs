//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | "(" expr ")" | name primes? ("(" args ")")?
//! ```

use super::{normalize, CoeffFn, Elementary, Expr, ExprError, FieldFn, FnArg, JetVar, Rational};
use num_bigint::BigInt;

/// Extra parameter names accepted besides `c1..c99` and `r`.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub params: Vec<String>,
}

pub fn parse(text: &str) -> Result<Expr, ExprError> {
    parse_with(text, &ParseOptions::default())
}

pub fn parse_with(text: &str, opts: &ParseOptions) -> Result<Expr, ExprError> {
    let mut p = Parser { s: text.as_bytes(), pos: 0, opts };
    let e = p.expr()?;
    p.ws();
    if p.pos < p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    opts: &'a ParseOptions,
}

fn is_param_name(name: &str) -> bool {
    if name == "r" {
        return true;
    }
    match name.strip_prefix('c') {
        Some(d) => !d.is_empty() && d.len() <= 2 && d.bytes().all(|b| b.is_ascii_digit()) && !d.starts_with('0'),
        None => false,
    }
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Sum(terms) })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.peek() == Some(b'/') {
                self.pos += 1;
                factors.push(self.unary()?.recip());
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Product(factors) })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Num(q) => Expr::Num(-q),
                other => -other,
            });
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let exponent = normalize(&self.unary()?);
        match exponent {
            Expr::Num(q) if q.is_integer() => {
                let n: i64 = q
                    .to_integer()
                    .try_into()
                    .map_err(|_| ExprError::Syntax { pos: at, msg: "exponent too large".into() })?;
                Ok(base.pow(n))
            }
            Expr::Num(q) if q.denom() == &BigInt::from(2) => {
                let n: i64 = q.numer().try_into().map_err(|_| ExprError::Syntax { pos: at, msg: "exponent too large".into() })?;
                Ok(base.sqrt().pow(n))
            }
            other => Ok((other * base.ln()).exp()),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = std::str::from_utf8(&self.s[start..self.pos]).unwrap().to_string();
        let mut frac = String::new();
        if self.pos < self.s.len() && self.s[self.pos] == b'.' {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac = std::str::from_utf8(&self.s[fs..self.pos]).unwrap().to_string();
        }
        if int_part.is_empty() && frac.is_empty() {
            return Err(self.err("malformed number"));
        }
        let digits = format!("{}{}", int_part, frac);
        let num: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        Ok(Expr::Num(Rational::new(num, den)))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap().to_string()
    }

    fn primes(&mut self) -> u8 {
        let mut n = 0;
        while self.pos < self.s.len() && self.s[self.pos] == b'\'' {
            self.pos += 1;
            n += 1;
        }
        n
    }

    /// Reads a bare word inside a function argument list.
    fn word(&mut self) -> String {
        self.ws();
        self.ident()
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                let name = self.ident();
                let primes = self.primes();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    self.call(&name, primes, at)
                } else {
                    self.atom(&name, primes, at)
                }
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn atom(&mut self, name: &str, primes: u8, at: usize) -> Result<Expr, ExprError> {
        let var = match (name, primes) {
            ("t", 0) => Some(JetVar::T),
            ("x", 0) => Some(JetVar::X),
            ("x", 1) | ("x1", 0) => Some(JetVar::X1),
            ("x", 2) | ("x2", 0) => Some(JetVar::X2),
            ("xr", 0) => Some(JetVar::XR),
            ("x1r", 0) => Some(JetVar::X1R),
            ("x2r", 0) => Some(JetVar::X2R),
            _ => None,
        };
        if let Some(v) = var {
            return Ok(Expr::Var(v));
        }
        if primes > 0 {
            return Err(ExprError::Syntax { pos: at, msg: format!("derivative marks on `{}`", name) });
        }
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        if is_param_name(name) || self.opts.params.iter().any(|p| p == name) {
            return Ok(Expr::param(name));
        }
        Err(ExprError::UnknownIdentifier { name: name.to_string(), pos: at })
    }

    fn call(&mut self, name: &str, primes: u8, at: usize) -> Result<Expr, ExprError> {
        let elementary = match name {
            "sin" => Some(Elementary::Sin),
            "cos" => Some(Elementary::Cos),
            "exp" => Some(Elementary::Exp),
            "ln" => Some(Elementary::Ln),
            "sqrt" => Some(Elementary::Sqrt),
            _ => None,
        };
        if let Some(f) = elementary {
            if primes > 0 {
                return Err(ExprError::Syntax { pos: at, msg: "derivative marks on elementary function".into() });
            }
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::apply(f, arg));
        }
        if matches!(name, "t" | "x" | "xr" | "x1" | "x1r" | "x2" | "x2r" | "pi") || is_param_name(name) {
            return Err(ExprError::Syntax { pos: at, msg: format!("`{}` is not a function", name) });
        }
        // argument list: t | t-r | t,x | t-r,xr
        let first = self.word();
        if first != "t" {
            return Err(self.err("function argument must be `t` or `t-r`"));
        }
        let delayed = if self.eat(b'-') {
            if self.word() != "r" {
                return Err(self.err("expected `r`"));
            }
            true
        } else {
            false
        };
        let arg = if delayed { FnArg::Delayed } else { FnArg::Now };
        if self.eat(b',') {
            let second = self.word();
            let want = if delayed { "xr" } else { "x" };
            if second != want {
                return Err(self.err(&format!("expected `{}`", want)));
            }
            self.expect(b')')?;
            if primes > 0 {
                return Err(ExprError::Syntax { pos: at, msg: "use subscripts for partials of w(t,x)".into() });
            }
            let (base, subs) = match name.split_once('_') {
                Some((b, s)) => (b, s),
                None => (name, ""),
            };
            if base.is_empty() || !subs.bytes().all(|c| c == b't' || c == b'x') {
                return Err(ExprError::Syntax { pos: at, msg: "malformed partial subscript".into() });
            }
            let dt = subs.bytes().filter(|&c| c == b't').count() as u8;
            let dx = subs.bytes().filter(|&c| c == b'x').count() as u8;
            return Ok(Expr::Field(FieldFn { name: base.to_string(), arg, dt, dx }));
        }
        self.expect(b')')?;
        if primes > super::MAX_COEFF_ORDER {
            return Err(ExprError::DerivativeOrder(name.to_string()));
        }
        Ok(Expr::Coeff(CoeffFn { name: name.to_string(), arg, order: primes }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse("x1^2 * b(t-r)").unwrap(),
            Expr::Product(vec![Expr::Var(JetVar::X1).pow(2), Expr::coeff_r("b", 0)])
        );
        assert_eq!(parse("sin(t)").unwrap(), Expr::t().sin());
        assert_eq!(
            parse("x'' + k(t)*x2r").unwrap(),
            Expr::Sum(vec![Expr::Var(JetVar::X2), Expr::Product(vec![Expr::coeff("k"), Expr::Var(JetVar::X2R)])])
        );
    }

    #[test]
    fn precedence() {
        assert_eq!(normalize(&parse("-x^2").unwrap()), normalize(&(-(Expr::x().pow(2)))));
        assert_eq!(normalize(&parse("2*x^2").unwrap()), normalize(&(Expr::int(2) * Expr::x().pow(2))));
        assert_eq!(normalize(&parse("x^-1").unwrap()), normalize(&Expr::x().recip()));
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse("x + "), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(matches!(parse("x + y"), Err(ExprError::UnknownIdentifier { pos: 4, .. })));
        assert!(matches!(parse("b(2*t)"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.25").unwrap(), Expr::rat(1, 4));
    }

    #[test]
    fn field_functions() {
        let e = parse("omega_tx(t,x) + omega_xx(t-r,xr)").unwrap();
        let mut n = 0;
        e.walk(&mut |x| {
            if matches!(x, Expr::Field(_)) {
                n += 1
            }
        });
        assert_eq!(n, 2);
    }
}
