//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' '-'? integer)?
//! base   := number | identifier | func '(' expr ')' | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_traits::{Num, One, ToPrimitive};

use super::{Chart, ElemFn, Expr, ExprError, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let lit = &text[start..i];
            out.push((start, Tok::Num(decimal(lit, start)?)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

fn decimal(lit: &str, pos: usize) -> Result<Rational, ExprError> {
    let bad = || ExprError::Syntax {
        pos,
        msg: format!("malformed number `{lit}`"),
    };
    let (int, frac) = match lit.split_once('.') {
        Some((a, b)) => (a, b),
        None => (lit, ""),
    };
    if frac.contains('.') {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10).map_err(|_| bad())?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    Ok(Rational::new(n, d))
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    chart: &'a Chart,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                acc = acc * self.factor()?;
            } else if self.eat('/') {
                let pos = self.here();
                let rhs = self.factor()?;
                acc = acc.checked_div(&rhs).map_err(|_| ExprError::Syntax {
                    pos,
                    msg: "division by zero".into(),
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let pos = self.here();
        let n = match self.peek() {
            Some(Tok::Num(q)) if q.denom().is_one() => q.numer().to_i32(),
            _ => None,
        };
        let Some(n) = n else {
            return self.err("expected integer exponent");
        };
        self.pos += 1;
        base.pow(if neg { -n } else { n }).map_err(|_| ExprError::Syntax {
            pos,
            msg: "negative power of zero".into(),
        })
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                Ok(Expr::constant(q))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(f) = ElemFn::from_name(&name) {
                    if !self.eat('(') {
                        return self.err(format!("expected `(` after `{name}`"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return self.err("expected `)`");
                    }
                    return Ok(Expr::apply(f, arg));
                }
                Ok(Expr::symbol(self.chart.resolve(&name)?))
            }
            Some(Tok::Op(c)) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse `text` over `chart` into canonical form.
pub fn parse_expr(text: &str, chart: &Chart) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        chart,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Symbol;

    fn chart() -> Chart {
        let mut c = Chart::new(&["t", "x"], &["phi", "psi"]).unwrap();
        c.add_function("Gpsi", &["t", "x", "psi"]).unwrap();
        c
    }

    #[test]
    fn kdv_lagrangian_roundtrip() {
        let c = chart();
        let l = parse_expr("1/2*phi_t*phi_x + phi_x^3 + phi_x*psi_x + 1/2*psi^2", &c).unwrap();
        let printed = l.to_string();
        assert_eq!(parse_expr(&printed, &c).unwrap(), l);
        assert_eq!(l.num_terms(), 4);
        assert_eq!(parse_expr("0", &c).unwrap(), Expr::zero());
    }

    #[test]
    fn decimals_are_exact() {
        let c = chart();
        assert_eq!(parse_expr("0.5*phi", &c).unwrap(), parse_expr("1/2*phi", &c).unwrap());
        assert_eq!(parse_expr("1.25", &c).unwrap(), Expr::rational(5, 4));
    }

    #[test]
    fn unary_minus_and_powers() {
        let c = chart();
        assert_eq!(parse_expr("-phi^2", &c).unwrap(), -parse_expr("phi*phi", &c).unwrap());
        assert_eq!(parse_expr("phi^-2*phi^2", &c).unwrap(), Expr::one());
        assert_eq!(parse_expr("2*phi^-1", &c).unwrap().to_string(), "2*phi^-1");
    }

    #[test]
    fn errors_carry_positions() {
        let c = chart();
        assert_eq!(
            parse_expr("phi + * psi", &c),
            Err(ExprError::Syntax {
                pos: 6,
                msg: "unexpected `*`".into()
            })
        );
        assert!(matches!(parse_expr("phi +", &c), Err(ExprError::Syntax { pos: 5, .. })));
        assert!(matches!(parse_expr("(phi", &c), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("phi $", &c), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(matches!(parse_expr("chi", &c), Err(ExprError::UnknownIdentifier(_))));
        assert!(matches!(parse_expr("phi_y", &c), Err(ExprError::BadSuffix { .. })));
        assert!(matches!(parse_expr("phi/0", &c), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("phi^x", &c), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn function_symbols() {
        let c = chart();
        let e = parse_expr("Gpsi_t*sech(x)", &c).unwrap();
        assert!(e
            .symbols()
            .iter()
            .any(|s| matches!(s, Symbol::Func(f) if f.derivs().len() == 1)));
        assert_eq!(parse_expr(&e.to_string(), &c).unwrap(), e);
    }
}
