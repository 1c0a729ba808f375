//! Closed-form scalar expressions and their exact second-order jets.
//!
//! The grammar is fixed: numeric literals, named coordinates, `+ - * / ^`,
//! unary minus, the functions `sin cos tan sinh cosh tanh exp log sqrt abs`,
//! and the constants `pi` and `e`. There is no symbolic simplification; an
//! [`Expression`] is evaluated either as a plain value or as a [`Jet2`]
//! carrying the gradient and Hessian propagated through the tree by the
//! second-order chain rule.

mod jet;
mod parse;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

pub use jet::{evaluate_jet, Jet2};
pub use parse::parse_expression;

/// Unary functions available in the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Expression tree node.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Coord(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    /// Constant value of the node if it is one (allowing a negated literal).
    pub fn const_value(&self) -> Option<f64> {
        match self {
            Node::Const(c) => Some(*c),
            Node::Neg(inner) => inner.const_value().map(|c| -c),
            _ => None,
        }
    }
}

/// A parsed expression over a chart of fixed dimension. Coordinate names are
/// retained for printing and error messages.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    pub(crate) dim: usize,
    pub(crate) names: alloc::vec::Vec<String>,
    pub(crate) root: Node,
}

impl Expression {
    /// Wrap an explicit tree. Callers must keep coordinate indices below
    /// `dimension`; this is checked on evaluation.
    pub fn from_node(root: Node, dimension: usize, names: &[&str]) -> Expression {
        Expression {
            dim: dimension,
            names: names.iter().map(|s| s.to_string()).collect(),
            root,
        }
    }

    /// The constant expression `value` on an `dimension`-coordinate chart.
    pub fn constant(value: f64, dimension: usize, names: &[&str]) -> Expression {
        Expression::from_node(Node::Const(value), dimension, names)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn coordinate_names(&self) -> &[String] {
        &self.names
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    /// True when the expression is a literal constant (possibly negated).
    pub fn as_constant(&self) -> Option<f64> {
        self.root.const_value()
    }

    /// `log(self)`.
    pub fn ln(&self) -> Expression {
        self.map_root(|n| Node::Call(Func::Log, Box::new(n)))
    }

    /// `self ^ p` with a literal exponent.
    pub fn powf(&self, p: f64) -> Expression {
        self.map_root(|n| Node::Pow(Box::new(n), Box::new(Node::Const(p))))
    }

    /// Product of two expressions on the same chart.
    pub fn mul(&self, other: &Expression) -> Expression {
        debug_assert_eq!(self.dim, other.dim);
        self.map_root(|n| Node::Mul(Box::new(n), Box::new(other.root.clone())))
    }

    /// Scale by a literal constant.
    pub fn scale(&self, c: f64) -> Expression {
        self.map_root(|n| Node::Mul(Box::new(Node::Const(c)), Box::new(n)))
    }

    fn map_root(&self, f: impl FnOnce(Node) -> Node) -> Expression {
        Expression {
            dim: self.dim,
            names: self.names.clone(),
            root: f(self.root.clone()),
        }
    }

    /// Re-home the expression on a larger chart, shifting every coordinate
    /// index by `offset`. Used when embedding base/fiber expressions into a
    /// product chart.
    pub fn shift_coords(&self, offset: usize, dimension: usize, names: &[&str]) -> Expression {
        fn shift(node: &Node, offset: usize) -> Node {
            match node {
                Node::Const(c) => Node::Const(*c),
                Node::Coord(i) => Node::Coord(i + offset),
                Node::Neg(a) => Node::Neg(Box::new(shift(a, offset))),
                Node::Add(a, b) => Node::Add(Box::new(shift(a, offset)), Box::new(shift(b, offset))),
                Node::Sub(a, b) => Node::Sub(Box::new(shift(a, offset)), Box::new(shift(b, offset))),
                Node::Mul(a, b) => Node::Mul(Box::new(shift(a, offset)), Box::new(shift(b, offset))),
                Node::Div(a, b) => Node::Div(Box::new(shift(a, offset)), Box::new(shift(b, offset))),
                Node::Pow(a, b) => Node::Pow(Box::new(shift(a, offset)), Box::new(shift(b, offset))),
                Node::Call(f, a) => Node::Call(*f, Box::new(shift(a, offset))),
            }
        }
        Expression::from_node(shift(&self.root, offset), dimension, names)
    }

    /// Plain value at a point (jet evaluation with derivatives discarded
    /// would be wasteful here).
    pub fn eval(&self, point: &[f64]) -> Result<f64, DomainError> {
        if point.len() != self.dim {
            return Err(DomainError {
                subexpression: self.to_string(),
                reason: format!(
                    "point has {} coordinates, expression chart has {}",
                    point.len(),
                    self.dim
                ),
            });
        }
        self.eval_node(&self.root, point)
    }

    fn eval_node(&self, node: &Node, x: &[f64]) -> Result<f64, DomainError> {
        let v = match node {
            Node::Const(c) => *c,
            Node::Coord(i) => x[*i],
            Node::Neg(a) => -self.eval_node(a, x)?,
            Node::Add(a, b) => self.eval_node(a, x)? + self.eval_node(b, x)?,
            Node::Sub(a, b) => self.eval_node(a, x)? - self.eval_node(b, x)?,
            Node::Mul(a, b) => self.eval_node(a, x)? * self.eval_node(b, x)?,
            Node::Div(a, b) => {
                let den = self.eval_node(b, x)?;
                if den == 0.0 {
                    return Err(self.domain_error(node, "division by zero"));
                }
                self.eval_node(a, x)? / den
            }
            Node::Pow(a, b) => {
                use num_traits::Float;
                let base = self.eval_node(a, x)?;
                let exp = self.eval_node(b, x)?;
                if b.const_value().is_none() && base <= 0.0 {
                    return Err(self.domain_error(node, "general power needs a positive base"));
                }
                base.powf(exp)
            }
            Node::Call(f, a) => {
                use num_traits::Float;
                let u = self.eval_node(a, x)?;
                match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tan => u.tan(),
                    Func::Sinh => u.sinh(),
                    Func::Cosh => u.cosh(),
                    Func::Tanh => u.tanh(),
                    Func::Exp => u.exp(),
                    Func::Log => {
                        if u <= 0.0 {
                            return Err(self.domain_error(node, "log of a nonpositive value"));
                        }
                        u.ln()
                    }
                    Func::Sqrt => {
                        if u < 0.0 {
                            return Err(self.domain_error(node, "sqrt of a negative value"));
                        }
                        u.sqrt()
                    }
                    Func::Abs => u.abs(),
                }
            }
        };
        if !v.is_finite() {
            return Err(self.domain_error(node, "non-finite value"));
        }
        Ok(v)
    }

    pub(crate) fn domain_error(&self, node: &Node, reason: &str) -> DomainError {
        DomainError {
            subexpression: self.print_node(node),
            reason: reason.to_string(),
        }
    }

    fn print_node(&self, node: &Node) -> String {
        let mut s = String::new();
        self.fmt_node(&mut s, node, 0).expect("string formatting");
        s
    }

    // Precedence levels: 0 add/sub, 1 mul/div, 2 unary minus, 3 power, 4 atom.
    fn fmt_node(&self, out: &mut String, node: &Node, parent: u8) -> fmt::Result {
        use fmt::Write;
        let level = match node {
            Node::Add(..) | Node::Sub(..) => 0,
            Node::Mul(..) | Node::Div(..) => 1,
            Node::Neg(..) => 2,
            Node::Pow(..) => 3,
            _ => 4,
        };
        let parens = level < parent;
        if parens {
            out.push('(');
        }
        match node {
            Node::Const(c) => write!(out, "{c:?}")?,
            Node::Coord(i) => {
                if let Some(name) = self.names.get(*i) {
                    out.push_str(name);
                } else {
                    write!(out, "x{i}")?;
                }
            }
            Node::Neg(a) => {
                out.push('-');
                self.fmt_node(out, a, 3)?;
            }
            Node::Add(a, b) => {
                self.fmt_node(out, a, 0)?;
                out.push('+');
                // right operand one level up keeps a-(b+c) parenthesized
                self.fmt_node(out, b, 1)?;
            }
            Node::Sub(a, b) => {
                self.fmt_node(out, a, 0)?;
                out.push('-');
                self.fmt_node(out, b, 1)?;
            }
            Node::Mul(a, b) => {
                self.fmt_node(out, a, 1)?;
                out.push('*');
                self.fmt_node(out, b, 2)?;
            }
            Node::Div(a, b) => {
                self.fmt_node(out, a, 1)?;
                out.push('/');
                self.fmt_node(out, b, 2)?;
            }
            Node::Pow(a, b) => {
                // '^' binds tighter than unary minus and associates right
                self.fmt_node(out, a, 4)?;
                out.push('^');
                self.fmt_node(out, b, 2)?;
            }
            Node::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                self.fmt_node(out, a, 0)?;
                out.push(')');
            }
        }
        if parens {
            out.push(')');
        }
        Ok(())
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.print_node(&self.root))
    }
}

/// Parse failure, with a byte position into the source.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("expected {expected} coordinate names, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Evaluation left the expression's domain (log of a nonpositive value,
/// division by zero, ...). Carries the offending subexpression.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("domain error in `{subexpression}`: {reason}")]
pub struct DomainError {
    pub subexpression: String,
    pub reason: String,
}
