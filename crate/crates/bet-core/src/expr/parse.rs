//! Recursive-descent parser for the expression grammar.
//!
//! Precedence, loosest to tightest: `+ -`, `* /`, unary `-`, `^`, atoms.
//! `+ - * /` associate left, `^` associates right, and `-a^2` parses as
//! `-(a^2)`. Whitespace is insignificant.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts;

use super::{Expression, Func, Node, ParseError};

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn next_token(&mut self) -> Result<(Token, usize), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Token::End, start));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = self.pos;
            let mut seen_dot = false;
            while end < self.src.len() {
                let b = self.src[end];
                if b.is_ascii_digit() {
                    end += 1;
                } else if b == b'.' && !seen_dot {
                    seen_dot = true;
                    end += 1;
                } else if (b == b'e' || b == b'E')
                    && end + 1 < self.src.len()
                    && (self.src[end + 1].is_ascii_digit()
                        || ((self.src[end + 1] == b'+' || self.src[end + 1] == b'-')
                            && end + 2 < self.src.len()
                            && self.src[end + 2].is_ascii_digit()))
                {
                    end += 2; // exponent marker and sign or first digit
                    while end < self.src.len() && self.src[end].is_ascii_digit() {
                        end += 1;
                    }
                    break;
                } else {
                    break;
                }
            }
            let text = core::str::from_utf8(&self.src[self.pos..end]).expect("ascii");
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                position: start,
                expected: format!("a numeric literal (got `{text}`)"),
            })?;
            self.pos = end;
            return Ok((Token::Number(value), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = self.pos;
            while end < self.src.len()
                && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
            {
                end += 1;
            }
            let text = core::str::from_utf8(&self.src[self.pos..end]).expect("ascii");
            self.pos = end;
            return Ok((Token::Ident(text.to_string()), start));
        }
        Err(ParseError::Syntax {
            position: start,
            expected: format!("an operand or operator (got `{}`)", c as char),
        })
    }
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    coords: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &(Token, usize) {
        &self.tokens[self.cursor]
    }

    fn bump(&mut self) -> (Token, usize) {
        let t = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ParseError> {
        let (t, pos) = self.bump();
        if t == want {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                position: pos,
                expected: format!("{what} (got {t:?})"),
            })
        }
    }

    // sum := product (('+'|'-') product)*
    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek().0 {
                Token::Plus => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Token::Minus => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // product := unary (('*'|'/') unary)*
    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().0 {
                Token::Star => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek().0 == Token::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    // power := atom ('^' unary)?   -- right-associative, exponent may carry
    // its own unary minus (a^-b)
    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek().0 == Token::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let (t, pos) = self.bump();
        match t {
            Token::Number(v) => Ok(Node::Const(v)),
            Token::LParen => {
                let inner = self.sum()?;
                self.expect(Token::RParen, "a closing `)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if self.peek().0 == Token::LParen {
                    let f = Func::from_name(&name).ok_or(ParseError::UnknownIdentifier {
                        name: name.clone(),
                        position: pos,
                    })?;
                    self.bump(); // '('
                    let arg = self.sum()?;
                    self.expect(Token::RParen, "a closing `)` after the argument")?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Const(consts::PI)),
                    "e" => Ok(Node::Const(consts::E)),
                    _ => {
                        if let Some(i) = self.coords.iter().position(|c| *c == name) {
                            Ok(Node::Coord(i))
                        } else {
                            Err(ParseError::UnknownIdentifier {
                                name,
                                position: pos,
                            })
                        }
                    }
                }
            }
            other => Err(ParseError::Syntax {
                position: pos,
                expected: format!("a number, coordinate, function or `(` (got {other:?})"),
            }),
        }
    }
}

/// Parse `source` over the named coordinates. `coordinate_names` must have
/// exactly `dimension` distinct entries.
pub fn parse_expression(
    source: &str,
    dimension: usize,
    coordinate_names: &[&str],
) -> Result<Expression, ParseError> {
    if coordinate_names.len() != dimension {
        return Err(ParseError::DimensionMismatch {
            expected: dimension,
            got: coordinate_names.len(),
        });
    }
    for (i, a) in coordinate_names.iter().enumerate() {
        for b in &coordinate_names[i + 1..] {
            if a == b {
                return Err(ParseError::Syntax {
                    position: 0,
                    expected: format!("distinct coordinate names (`{a}` repeats)"),
                });
            }
        }
    }
    if source.trim().is_empty() {
        return Err(ParseError::Syntax {
            position: 0,
            expected: "a nonempty expression".to_string(),
        });
    }
    let mut lexer = Lexer::new(source);
    let mut tokens = Vec::new();
    loop {
        let (t, pos) = lexer.next_token()?;
        let end = t == Token::End;
        tokens.push((t, pos));
        if end {
            break;
        }
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        coords: coordinate_names,
    };
    let root = parser.sum()?;
    let (trailing, pos) = parser.peek().clone();
    if trailing != Token::End {
        return Err(ParseError::Syntax {
            position: pos,
            expected: format!("end of input (got {trailing:?})"),
        });
    }
    Ok(Expression::from_node(root, dimension, coordinate_names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn p(src: &str) -> Expression {
        parse_expression(src, 2, &["x", "y"]).unwrap()
    }

    #[test]
    fn coordinate_identity() {
        let e = parse_expression("x0", 1, &["x0"]).unwrap();
        assert_eq!(*e.node(), Node::Coord(0));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        // -x^2 must be -(x^2): value -4 at x=2
        let e = parse_expression("-x0^2", 1, &["x0"]).unwrap();
        let expected = Node::Neg(Box::new(Node::Pow(
            Box::new(Node::Coord(0)),
            Box::new(Node::Const(2.0)),
        )));
        assert_eq!(*e.node(), expected);
        assert_eq!(e.eval(&[2.0]).unwrap(), -4.0);
    }

    #[test]
    fn function_call_then_power() {
        let e = parse_expression("sin(th)^2", 2, &["th", "ps"]).unwrap();
        let expected = Node::Pow(
            Box::new(Node::Call(Func::Sin, Box::new(Node::Coord(0)))),
            Box::new(Node::Const(2.0)),
        );
        assert_eq!(*e.node(), expected);
        let v = e.eval(&[core::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subtraction_left_associative() {
        // 7 - 3 - 2 = 2, not 6
        assert_eq!(p("7-3-2").eval(&[0.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn power_right_associative() {
        // 2^3^2 = 2^9 = 512
        assert_eq!(p("2^3^2").eval(&[0.0, 0.0]).unwrap(), 512.0);
    }

    #[test]
    fn unknown_identifier_rejected() {
        let err = parse_expression("z + 1", 2, &["x", "y"]).unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { .. }));
    }

    #[test]
    fn trailing_garbage_rejected() {
        let err = parse_expression("x + 1 )", 2, &["x", "y"]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn named_constants() {
        assert_eq!(p("pi").eval(&[0.0, 0.0]).unwrap(), core::f64::consts::PI);
        assert_eq!(p("e").eval(&[0.0, 0.0]).unwrap(), core::f64::consts::E);
    }

    #[test]
    fn printer_roundtrips() {
        for src in [
            "x- y -1",
            "-x^2",
            "2^3^x",
            "x*(y+1)/(x-3)",
            "sin(x)^2+cos(x)^2",
            "-(x+y)",
            "1/ x^2",
            "x^-2",
            "exp(-x^2-y^2)",
            "abs(x)*sqrt(y+2)",
            "x-(y-1)",
            "x/(y*x)",
            "2.5e-3*x",
        ] {
            let once = p(src);
            let twice = p(&once.to_string());
            assert_eq!(once.node(), twice.node(), "printer round trip for `{src}`");
        }
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(p("2.5e-3").eval(&[0.0, 0.0]).unwrap(), 2.5e-3);
        assert_eq!(p("1e2").eval(&[0.0, 0.0]).unwrap(), 100.0);
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        let err = p("1/x").eval(&[0.0, 1.0]).unwrap_err();
        assert!(err.reason.contains("division"));
    }
}
