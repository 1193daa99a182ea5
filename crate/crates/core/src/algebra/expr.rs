//! Recursive-descent parser for rational expressions.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' UINT)?
//! base   := NUMBER | IDENT | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-r^2` is `-(r^2)`.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use super::{AlgebraError, Rational, RationalFunction, Variables};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("exponent at {pos} must be a non-negative integer")]
    BadExponent { pos: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Rational),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Neg(Box<Expr>),
}

impl Expr {
    /// Exact value as a rational function over `vars`.
    pub fn to_rational_function(&self, vars: &Variables) -> Result<RationalFunction, AlgebraError> {
        Ok(match self {
            Expr::Const(c) => RationalFunction::constant(vars, c.clone()),
            Expr::Var(name) => {
                let idx = vars.index_of(name).ok_or_else(|| AlgebraError::UnknownVariable(name.clone()))?;
                RationalFunction::var(vars, idx)
            }
            Expr::Add(a, b) => a.to_rational_function(vars)?.checked_add(&b.to_rational_function(vars)?)?,
            Expr::Sub(a, b) => a.to_rational_function(vars)?.checked_add(&-b.to_rational_function(vars)?)?,
            Expr::Mul(a, b) => a.to_rational_function(vars)?.checked_mul(&b.to_rational_function(vars)?)?,
            Expr::Div(a, b) => a.to_rational_function(vars)?.checked_div(&b.to_rational_function(vars)?)?,
            Expr::Pow(a, e) => a.to_rational_function(vars)?.pow(*e),
            Expr::Neg(a) => -a.to_rational_function(vars)?,
        })
    }

    /// Prefix rendering, e.g. `div(pow(r,2),add(1,pow(r,2)))`.
    pub fn sexpr(&self) -> String {
        match self {
            Expr::Const(c) => super::format_rational(c),
            Expr::Var(v) => v.clone(),
            Expr::Add(a, b) => format!("add({},{})", a.sexpr(), b.sexpr()),
            Expr::Sub(a, b) => format!("sub({},{})", a.sexpr(), b.sexpr()),
            Expr::Mul(a, b) => format!("mul({},{})", a.sexpr(), b.sexpr()),
            Expr::Div(a, b) => format!("div({},{})", a.sexpr(), b.sexpr()),
            Expr::Pow(a, e) => format!("pow({},{e})", a.sexpr()),
            Expr::Neg(a) => format!("neg({})", a.sexpr()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if !c.is_integer() => 2,
            Expr::Const(c) if c < &Rational::from_integer(BigInt::from(0)) => 3,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let paren = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(c) => write!(f, "{}", super::format_rational(c)),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Add(a, b) => {
                paren(f, a, 1)?;
                write!(f, " + ")?;
                paren(f, b, 2)
            }
            Expr::Sub(a, b) => {
                paren(f, a, 1)?;
                write!(f, " - ")?;
                paren(f, b, 2)
            }
            Expr::Mul(a, b) => {
                paren(f, a, 2)?;
                write!(f, "*")?;
                paren(f, b, 3)
            }
            Expr::Div(a, b) => {
                paren(f, a, 2)?;
                write!(f, "/")?;
                paren(f, b, 4)
            }
            Expr::Pow(a, e) => {
                paren(f, a, 5)?;
                write!(f, "^{e}")
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                paren(f, a, 3)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(BigInt),
    Ident(String),
    Op(char),
    End,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().map(|(_, c)| c).collect();
            if i < chars.len() && chars[i].1 == '.' {
                return Err(ParseError::Syntax {
                    pos: chars[i].0,
                    message: "decimal points are not supported; write a fraction".into(),
                });
            }
            out.push((pos, Token::Num(digits.parse().expect("ascii digits"))));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((pos, Token::Ident(chars[start..i].iter().map(|(_, c)| c).collect())));
        } else if "+-*/^()".contains(c) {
            out.push((pos, Token::Op(c)));
            i += 1;
        } else {
            return Err(ParseError::Syntax { pos, message: format!("unexpected character `{c}`") });
        }
    }
    out.push((text.len(), Token::End));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    at: usize,
    allowed: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.at].1
    }

    fn pos(&self) -> usize {
        self.tokens[self.at].0
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].1.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Token::Op('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Op('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Token::Op('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Op('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == &Token::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek() == &Token::Op('^') {
            self.bump();
            let pos = self.pos();
            return match self.bump() {
                Token::Num(n) => {
                    if matches!(self.peek(), Token::Op('/'))
                        && matches!(self.tokens.get(self.at + 1), Some((_, Token::Num(_))))
                    {
                        return Err(ParseError::BadExponent { pos });
                    }
                    let e: u32 = n.try_into().map_err(|_| ParseError::BadExponent { pos })?;
                    Ok(Expr::Pow(Box::new(base), e))
                }
                _ => Err(ParseError::BadExponent { pos }),
            };
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Token::Num(n) => Ok(Expr::Const(Rational::from_integer(n))),
            Token::Ident(name) => {
                if self.allowed.iter().any(|a| a == &name) {
                    Ok(Expr::Var(name))
                } else {
                    Err(ParseError::UnknownIdentifier { pos, name })
                }
            }
            Token::Op('(') => {
                let inner = self.expr()?;
                let close = self.pos();
                match self.bump() {
                    Token::Op(')') => Ok(inner),
                    _ => Err(ParseError::Syntax { pos: close, message: "expected `)`".into() }),
                }
            }
            Token::End => Err(ParseError::Syntax { pos, message: "unexpected end of input".into() }),
            Token::Op(c) => Err(ParseError::Syntax { pos, message: format!("unexpected `{c}`") }),
        }
    }
}

/// Parses `text`, accepting only identifiers listed in `allowed_vars`.
pub fn parse_expression<S: AsRef<str>>(text: &str, allowed_vars: &[S]) -> Result<Expr, ParseError> {
    let allowed: Vec<String> = allowed_vars.iter().map(|s| s.as_ref().to_string()).collect();
    let mut parser = Parser { tokens: tokenize(text)?, at: 0, allowed: &allowed };
    let e = parser.expr()?;
    if parser.peek() != &Token::End {
        return Err(ParseError::Syntax { pos: parser.pos(), message: "trailing input".into() });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    const CYL: [&str; 3] = ["r", "theta", "z"];

    #[test]
    fn metric_coefficient_tree() {
        let e = parse_expression("r^2/(1+r^2)", &CYL).unwrap();
        assert_eq!(e.sexpr(), "div(pow(r,2),add(1,pow(r,2)))");
    }

    #[test]
    fn zero_constant() {
        assert_eq!(parse_expression("0", &CYL).unwrap(), Expr::Const(rat(0)));
    }

    #[test]
    fn covector_coefficient_evaluates() {
        let v = Variables::new(&CYL);
        let e = parse_expression("2*z/(1+r^2)", &CYL).unwrap();
        let f = e.to_rational_function(&v).unwrap();
        assert_eq!(f.to_string(), "2*z/(r^2 + 1)");
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse_expression("r + w", &CYL), Err(ParseError::UnknownIdentifier { pos: 4, name: "w".into() }));
        assert_eq!(parse_expression("r^-1", &CYL), Err(ParseError::BadExponent { pos: 2 }));
        assert_eq!(parse_expression("r^1/2", &CYL), Err(ParseError::BadExponent { pos: 2 }));
        assert!(matches!(parse_expression("(r + 1", &CYL), Err(ParseError::Syntax { pos: 6, .. })));
        assert!(matches!(parse_expression("r 1", &CYL), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expression("1.5", &CYL), Err(ParseError::Syntax { pos: 1, .. })));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let v = Variables::new(&CYL);
        let e = parse_expression("-r^2", &CYL).unwrap();
        assert_eq!(e.sexpr(), "neg(pow(r,2))");
        let f = e.to_rational_function(&v).unwrap();
        assert_eq!(f.eval(&[2.0, 0.0, 0.0]).unwrap(), -4.0);
    }

    #[test]
    fn fraction_literal_is_exact() {
        let v = Variables::new(&CYL);
        let f = parse_expression("3/4*r", &CYL).unwrap().to_rational_function(&v).unwrap();
        assert_eq!(f.to_string(), "3/4*r");
    }

    #[test]
    fn print_then_parse_is_fixed_point() {
        for text in ["r^2/(1+r^2)", "-(r - z)^3*2", "1/(1+r^2)^2 - 3/4", "-(-r)", "r - (z - 1)", "r/(z/theta)"] {
            let e = parse_expression(text, &CYL).unwrap();
            let printed = e.to_string();
            let again = parse_expression(&printed, &CYL).unwrap();
            assert_eq!(again, e, "{text} -> {printed}");
        }
    }
}
