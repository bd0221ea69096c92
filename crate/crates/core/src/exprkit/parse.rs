//! Recursive-descent parser for coefficient expressions.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! sum      := product (('+' | '-') product)*
//! product  := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' exponent)*
//! exponent := '-'? primary            (must fold to a rational constant)
//! primary  := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```
//!
//! Variables are `u1..un` with aliases `r1..rn`, plus any extra names
//! supplied by the caller. Sub-trees made only of rational constants are
//! folded, so `1/2` is the constant one half and `-3` is minus three.

use num_rational::Rational64;
use num_traits::{CheckedMul, ToPrimitive, Zero};
use thiserror::Error;

use super::expr::{Expr, Func, NamedConst, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable `{name}` at position {pos} is out of range for dimension {dim}")]
    VariableOutOfRange {
        pos: usize,
        name: String,
        dim: usize,
    },
}

/// Parse `text` as an expression over `n` variables named `u1..un`/`r1..rn`.
pub fn parse_expr(text: &str, n: usize) -> Result<Expr, ParseError> {
    parse_expr_with_names(text, n, &[])
}

/// Like [`parse_expr`], additionally accepting `names[i]` for variable `i`.
pub fn parse_expr_with_names(text: &str, n: usize, names: &[String]) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: text,
        tokens: tokenize(text)?,
        pos: 0,
        dim: n,
        names,
    };
    let expr = parser.sum()?;
    match parser.peek() {
        Tok::End => Ok(expr),
        _ => Err(parser.error("unexpected trailing input")),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // optional exponent: e[+-]digits, only if digits follow
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            Tok::Num(parse_number(&src[start..i], start)?)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ParseError::Syntax {
                        pos: start,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        out.push(Token { tok, pos: start });
    }
    out.push(Token {
        tok: Tok::End,
        pos: src.len(),
    });
    Ok(out)
}

/// Decimal literal with optional exponent, converted exactly.
fn parse_number(text: &str, pos: usize) -> Result<Rational64, ParseError> {
    let bad = |message: &str| ParseError::Syntax {
        pos,
        message: format!("{message}: `{text}`"),
    };
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(k) => (
            &text[..k],
            text[k + 1..]
                .parse::<i32>()
                .map_err(|_| bad("bad exponent"))?,
        ),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() || frac_part.contains('.') {
        return Err(bad("malformed number"));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = digits
        .parse()
        .map_err(|_| bad("numeric literal out of range"))?;
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational64::from_integer(10);
    let mut value = Rational64::from_integer(numer);
    let factor = if scale >= 0 { ten } else { ten.recip() };
    for _ in 0..scale.unsigned_abs() {
        value = value
            .checked_mul(&factor)
            .ok_or_else(|| bad("numeric literal out of range"))?;
    }
    Ok(value)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn here(&self) -> usize {
        self.tokens[self.pos].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> ParseError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            _ => {
                let start = self.here();
                let end = self
                    .tokens
                    .get(self.pos + 1)
                    .map_or(self.src.len(), |t| t.pos);
                format!("`{}`", self.src[start..end].trim())
            }
        };
        ParseError::Syntax {
            pos: self.here(),
            message: format!("{message}, found {found}"),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    let rhs = self.product()?;
                    lhs = fold(Expr::raw_add(lhs, rhs));
                }
                Tok::Op('-') => {
                    self.bump();
                    let rhs = self.product()?;
                    lhs = fold(Expr::raw_sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = fold(Expr::raw_mul(lhs, rhs));
                }
                Tok::Op('/') => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = fold(Expr::raw_div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Tok::Op('-') = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(fold(Expr::raw_neg(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.primary()?;
        while let Tok::Op('^') = self.peek() {
            self.bump();
            let at = self.here();
            let negative = matches!(self.peek(), Tok::Op('-'));
            if negative {
                self.bump();
            }
            let exponent = self.primary()?;
            let mut value = exponent.as_const().ok_or(ParseError::Syntax {
                pos: at,
                message: "exponent must be a constant rational".to_string(),
            })?;
            if negative {
                value = -value;
            }
            base = fold(Expr::raw_pow(base, value));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::constant(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if !matches!(self.peek(), Tok::LParen) {
                        return Err(self.error(&format!("expected `(` after `{name}`")));
                    }
                    self.bump();
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    return Ok(Expr::apply(func, arg));
                }
                self.identifier(&name, pos)
            }
            _ => Err(self.error("expected a number, variable, function or `(`")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::RParen) {
            self.bump();
            Ok(())
        } else {
            Err(self.error("expected `)`"))
        }
    }

    fn identifier(&self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(Expr::var(i));
        }
        match name {
            "pi" => return Ok(Expr::named(NamedConst::Pi)),
            "e" => return Ok(Expr::named(NamedConst::E)),
            _ => {}
        }
        let indexed = name
            .strip_prefix('u')
            .or_else(|| name.strip_prefix('r'))
            .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()));
        match indexed.and_then(|rest| rest.parse::<usize>().ok()) {
            Some(k) if k >= 1 && k <= self.dim => Ok(Expr::var(k - 1)),
            Some(_) => Err(ParseError::VariableOutOfRange {
                pos,
                name: name.to_string(),
                dim: self.dim,
            }),
            None => Err(ParseError::UnknownIdentifier {
                pos,
                name: name.to_string(),
            }),
        }
    }
}

/// Collapse a freshly built node whose children are all rational constants.
fn fold(e: Expr) -> Expr {
    let folded = match e.node() {
        Node::Add(a, b) => both(a, b).map(|(x, y)| Expr::add(x, y)),
        Node::Sub(a, b) => both(a, b).map(|(x, y)| Expr::sub(x, y)),
        Node::Mul(a, b) => both(a, b).map(|(x, y)| Expr::mul(x, y)),
        Node::Div(a, b) => both(a, b)
            .filter(|(_, y)| !y.is_zero())
            .map(|(x, y)| Expr::div(x, y)),
        Node::Neg(a) => a.as_const().map(|c| Expr::constant(-c)),
        Node::Pow(a, p) => a
            .as_const()
            .filter(|c| p.is_integer() && !(c.is_zero() && *p < Rational64::zero()))
            .filter(|_| p.to_integer().to_i32().is_some())
            .map(|_| Expr::pow(a.clone(), *p)),
        _ => None,
    };
    match folded {
        Some(f) if f.as_const().is_some() => f,
        _ => e,
    }
}

fn both(a: &Expr, b: &Expr) -> Option<(Expr, Expr)> {
    match (a.as_const(), b.as_const()) {
        (Some(_), Some(_)) => Some((a.clone(), b.clone())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(i: usize) -> Expr {
        Expr::var(i - 1)
    }

    #[test]
    fn exp_of_difference() {
        let e = parse_expr("exp(r2 - r1)", 3).unwrap();
        assert_eq!(e, Expr::apply(Func::Exp, Expr::raw_sub(u(2), u(1))));
    }

    #[test]
    fn left_association() {
        let e = parse_expr("r1 + r2 + 1", 3).unwrap();
        assert_eq!(e, Expr::raw_add(Expr::raw_add(u(1), u(2)), Expr::int(1)));
        let e = parse_expr("u1 / u2 / u3", 3).unwrap();
        assert_eq!(e, Expr::raw_div(Expr::raw_div(u(1), u(2)), u(3)));
    }

    #[test]
    fn precedence_power_over_product_over_sum() {
        let e = parse_expr("r3^2 - 2*exp(r1-r2)", 3).unwrap();
        let expected = Expr::raw_sub(
            Expr::raw_pow(u(3), Rational64::from_integer(2)),
            Expr::raw_mul(
                Expr::int(2),
                Expr::apply(Func::Exp, Expr::raw_sub(u(1), u(2))),
            ),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        let e = parse_expr("-u1^2", 1).unwrap();
        assert_eq!(
            e,
            Expr::raw_neg(Expr::raw_pow(u(1), Rational64::from_integer(2)))
        );
        let e = parse_expr("u1^-1", 1).unwrap();
        assert_eq!(e, Expr::raw_pow(u(1), Rational64::from_integer(-1)));
        let e = parse_expr("u1^(3/2)", 1).unwrap();
        assert_eq!(e, Expr::raw_pow(u(1), Rational64::new(3, 2)));
    }

    #[test]
    fn constants_fold_to_exact_rationals() {
        assert_eq!(parse_expr("1/2", 1).unwrap(), Expr::rational(1, 2));
        assert_eq!(parse_expr("-3", 1).unwrap(), Expr::int(-3));
        assert_eq!(parse_expr("0.25", 1).unwrap(), Expr::rational(1, 4));
        assert_eq!(parse_expr("2.5e-1", 1).unwrap(), Expr::rational(1, 4));
        assert_eq!(parse_expr("1e3", 1).unwrap(), Expr::int(1000));
        assert_eq!(parse_expr("2^-2", 1).unwrap(), Expr::rational(1, 4));
    }

    #[test]
    fn named_constants_and_aliases() {
        let e = parse_expr("pi*e + log(r1)", 1).unwrap();
        assert_eq!(e.variables().len(), 1);
        let names = vec!["rho1".to_string(), "rho2".to_string(), "u".to_string()];
        let e = parse_expr_with_names("rho1 + u", 3, &names).unwrap();
        assert_eq!(e, Expr::raw_add(u(1), u(3)));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_expr("u1 + * u2", 2) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("unexpected {other:?}"),
        }
        match parse_expr("foo(u1)", 2) {
            Err(ParseError::UnknownIdentifier { pos, name }) => {
                assert_eq!((pos, name.as_str()), (0, "foo"));
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_expr("u1 + r4", 3) {
            Err(ParseError::VariableOutOfRange { pos, dim, .. }) => assert_eq!((pos, dim), (5, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_expr("(u1", 1),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("u1 u2", 2),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("u1^u2", 2),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("u0", 2),
            Err(ParseError::VariableOutOfRange { .. })
        ));
        assert!(matches!(parse_expr("", 2), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse_expr("1.2.3", 2),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn printed_form_parses_back() {
        for text in [
            "exp(r2 - r1)*(1 + r3^2)",
            "-(u1 - u2)/(u3 + 1/2)",
            "sqrt(u1)^3 - cos(-u2)",
            "u1^(-3/2)*ln(u2 + 2)",
        ] {
            let e = parse_expr(text, 3).unwrap();
            let back = parse_expr(&e.to_string(), 3).unwrap();
            assert_eq!(e, back, "{text} -> {e}");
        }
    }
}
