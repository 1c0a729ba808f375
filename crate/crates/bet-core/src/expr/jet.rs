//! Second-order forward jets: value, gradient and Hessian propagated through
//! an expression tree in one pass.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::{DomainError, Expression, Func, Node};
use crate::linalg;

/// Value, gradient and symmetric Hessian of a scalar at a point.
///
/// The Hessian is stored dense row-major; every rule fills it symmetrically,
/// so `hess[i*n+j] == hess[j*n+i]` holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, n: usize) -> Jet2 {
        Jet2 {
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    /// The coordinate function `x_index` seeded with unit gradient.
    pub fn variable(value: f64, index: usize, n: usize) -> Jet2 {
        let mut grad = vec![0.0; n];
        grad[index] = 1.0;
        Jet2 {
            value,
            grad,
            hess: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn add(&self, rhs: &Jet2) -> Jet2 {
        let mut out = self.clone();
        out.value += rhs.value;
        for (a, b) in out.grad.iter_mut().zip(&rhs.grad) {
            *a += b;
        }
        for (a, b) in out.hess.iter_mut().zip(&rhs.hess) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &Jet2) -> Jet2 {
        let mut out = self.clone();
        out.value -= rhs.value;
        for (a, b) in out.grad.iter_mut().zip(&rhs.grad) {
            *a -= b;
        }
        for (a, b) in out.hess.iter_mut().zip(&rhs.hess) {
            *a -= b;
        }
        out
    }

    pub fn neg(&self) -> Jet2 {
        let mut out = self.clone();
        out.value = -out.value;
        for a in out.grad.iter_mut() {
            *a = -*a;
        }
        for a in out.hess.iter_mut() {
            *a = -*a;
        }
        out
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        let mut out = self.clone();
        out.value *= c;
        for a in out.grad.iter_mut() {
            *a *= c;
        }
        for a in out.hess.iter_mut() {
            *a *= c;
        }
        out
    }

    pub fn mul(&self, rhs: &Jet2) -> Jet2 {
        let n = self.dim();
        let mut out = Jet2::constant(self.value * rhs.value, n);
        for i in 0..n {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
        }
        for i in 0..n {
            for j in 0..n {
                out.hess[i * n + j] = self.hess[i * n + j] * rhs.value
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i]
                    + self.value * rhs.hess[i * n + j];
            }
        }
        out
    }

    /// Apply a scalar function given its value and first two derivatives at
    /// `self.value`: the second-order chain rule.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.dim();
        let mut out = Jet2::constant(f0, n);
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..n {
            for j in 0..n {
                out.hess[i * n + j] =
                    f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i * n + j];
            }
        }
        out
    }

    pub fn recip(&self) -> Jet2 {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn div(&self, rhs: &Jet2) -> Jet2 {
        self.mul(&rhs.recip())
    }

    /// `self^p` for a literal exponent.
    pub fn powf(&self, p: f64) -> Jet2 {
        if p == 0.0 {
            return Jet2::constant(1.0, self.dim());
        }
        if p == 1.0 {
            return self.clone();
        }
        let u = self.value;
        self.chain(
            u.powf(p),
            p * u.powf(p - 1.0),
            p * (p - 1.0) * u.powf(p - 2.0),
        )
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Jet2 {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// Largest absolute asymmetry of the Hessian (zero by construction).
    pub fn hess_asymmetry(&self) -> f64 {
        linalg::max_asymmetry(&self.hess, self.dim())
    }
}

impl Expression {
    /// Exact value, gradient and Hessian at `point`.
    pub fn jet(&self, point: &[f64]) -> Result<Jet2, DomainError> {
        if point.len() != self.dim {
            return Err(DomainError {
                subexpression: alloc::string::ToString::to_string(self),
                reason: alloc::format!(
                    "point has {} coordinates, expression chart has {}",
                    point.len(),
                    self.dim
                ),
            });
        }
        self.jet_node(&self.root, point)
    }

    fn jet_node(&self, node: &Node, x: &[f64]) -> Result<Jet2, DomainError> {
        let n = self.dim;
        let jet = match node {
            Node::Const(c) => Jet2::constant(*c, n),
            Node::Coord(i) => {
                if *i >= n {
                    return Err(self.domain_error(node, "coordinate index out of range"));
                }
                Jet2::variable(x[*i], *i, n)
            }
            Node::Neg(a) => self.jet_node(a, x)?.neg(),
            Node::Add(a, b) => self.jet_node(a, x)?.add(&self.jet_node(b, x)?),
            Node::Sub(a, b) => self.jet_node(a, x)?.sub(&self.jet_node(b, x)?),
            Node::Mul(a, b) => self.jet_node(a, x)?.mul(&self.jet_node(b, x)?),
            Node::Div(a, b) => {
                let den = self.jet_node(b, x)?;
                if den.value == 0.0 {
                    return Err(self.domain_error(node, "division by zero"));
                }
                self.jet_node(a, x)?.div(&den)
            }
            Node::Pow(a, b) => {
                let base = self.jet_node(a, x)?;
                if let Some(p) = b.const_value() {
                    base.powf(p)
                } else {
                    // general exponent: a^b = exp(b * log a), domain a > 0
                    if base.value <= 0.0 {
                        return Err(
                            self.domain_error(node, "general power needs a positive base")
                        );
                    }
                    let exp = self.jet_node(b, x)?;
                    exp.mul(&base.ln()).exp()
                }
            }
            Node::Call(f, a) => {
                let u = self.jet_node(a, x)?;
                let v = u.value;
                match f {
                    Func::Sin => u.chain(v.sin(), v.cos(), -v.sin()),
                    Func::Cos => u.chain(v.cos(), -v.sin(), -v.cos()),
                    Func::Tan => {
                        let t = v.tan();
                        let sec2 = 1.0 + t * t;
                        u.chain(t, sec2, 2.0 * t * sec2)
                    }
                    Func::Sinh => u.chain(v.sinh(), v.cosh(), v.sinh()),
                    Func::Cosh => u.chain(v.cosh(), v.sinh(), v.cosh()),
                    Func::Tanh => {
                        let t = v.tanh();
                        let sech2 = 1.0 - t * t;
                        u.chain(t, sech2, -2.0 * t * sech2)
                    }
                    Func::Exp => u.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(self.domain_error(node, "log of a nonpositive value"));
                        }
                        u.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(self.domain_error(node, "sqrt of a negative value"));
                        }
                        u.powf(0.5)
                    }
                    Func::Abs => {
                        if v == 0.0 {
                            return Err(self.domain_error(node, "abs is not differentiable at 0"));
                        }
                        let s = if v > 0.0 { 1.0 } else { -1.0 };
                        u.chain(v.abs(), s, 0.0)
                    }
                }
            }
        };
        if !jet.is_finite() {
            return Err(self.domain_error(node, "non-finite jet component"));
        }
        Ok(jet)
    }
}

/// Free-function form of [`Expression::jet`].
pub fn evaluate_jet(expr: &Expression, point: &[f64]) -> Result<Jet2, DomainError> {
    expr.jet(point)
}

#[cfg(test)]
mod tests {
    use super::super::parse_expression;
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_3, PI};

    fn fd_check(expr: &Expression, x: &[f64], tol: f64) {
        let n = x.len();
        let jet = expr.jet(x).unwrap();
        let f = |p: &[f64]| expr.eval(p).unwrap();
        let hg = 1e-5;
        let hh = 1e-4;
        for i in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += hg;
            xm[i] -= hg;
            let fd = (f(&xp) - f(&xm)) / (2.0 * hg);
            assert_relative_eq!(jet.grad[i], fd, max_relative = tol, epsilon = tol);
        }
        for i in 0..n {
            for j in 0..n {
                let fd = if i == j {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[i] += hh;
                    xm[i] -= hh;
                    (f(&xp) - 2.0 * f(x) + f(&xm)) / (hh * hh)
                } else {
                    let mut xpp = x.to_vec();
                    let mut xpm = x.to_vec();
                    let mut xmp = x.to_vec();
                    let mut xmm = x.to_vec();
                    xpp[i] += hh;
                    xpp[j] += hh;
                    xpm[i] += hh;
                    xpm[j] -= hh;
                    xmp[i] -= hh;
                    xmp[j] += hh;
                    xmm[i] -= hh;
                    xmm[j] -= hh;
                    (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * hh * hh)
                };
                assert_relative_eq!(jet.hess_at(i, j), fd, max_relative = tol, epsilon = tol);
            }
        }
    }

    #[test]
    fn gaussian_jet_closed_form() {
        let e = parse_expression("exp(-x0^2)", 1, &["x0"]).unwrap();
        let jet = e.jet(&[1.0]).unwrap();
        let v = (-1.0f64).exp();
        assert_relative_eq!(jet.value, v, max_relative = 1e-15);
        assert_relative_eq!(jet.grad[0], -2.0 * v, max_relative = 1e-15);
        assert_relative_eq!(jet.hess_at(0, 0), 2.0 * v, max_relative = 1e-14);
    }

    #[test]
    fn linear_jet() {
        let e = parse_expression("x0", 1, &["x0"]).unwrap();
        let jet = e.jet(&[3.7]).unwrap();
        assert_eq!(jet.value, 3.7);
        assert_eq!(jet.grad[0], 1.0);
        assert_eq!(jet.hess_at(0, 0), 0.0);
    }

    #[test]
    fn sin_squared_jet_closed_form() {
        let e = parse_expression("sin(th)^2", 2, &["th", "ps"]).unwrap();
        let jet = e.jet(&[FRAC_PI_3, 0.2]).unwrap();
        assert_relative_eq!(jet.value, 0.75, max_relative = 1e-15);
        assert_relative_eq!(jet.grad[0], (2.0 * FRAC_PI_3).sin(), max_relative = 1e-14);
        assert_eq!(jet.grad[1], 0.0);
        assert_relative_eq!(jet.hess_at(0, 0), -1.0, max_relative = 1e-13);
        assert_eq!(jet.hess_at(0, 1), 0.0);
        assert_eq!(jet.hess_at(1, 1), 0.0);
        fd_check(&e, &[FRAC_PI_3, 0.2], 1e-8);
    }

    #[test]
    fn jets_match_finite_differences_on_mixed_terms() {
        for (src, x) in [
            ("x*y + tan(x/4)*sinh(y)", [0.7, -0.4]),
            ("sqrt(x+2)*log(y+3)", [0.3, 0.5]),
            ("(x+2)^(y+1)", [0.4, 0.25]),
            ("cosh(x)*tanh(y) - x/(y+2)", [1.1, -0.6]),
            ("abs(x-1)*y^3", [0.2, 1.3]),
        ] {
            let e = parse_expression(src, 2, &["x", "y"]).unwrap();
            fd_check(&e, &x, 1e-6);
        }
    }

    #[test]
    fn pole_of_log_reports_subexpression() {
        let e = parse_expression("log(x- 1)", 1, &["x"]).unwrap();
        let err = e.jet(&[0.5]).unwrap_err();
        assert_eq!(err.subexpression, "log(x-1.0)");
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let e = parse_expression("exp(x*y)*sin(x-y^2)", 2, &["x", "y"]).unwrap();
        let jet = e.jet(&[0.3, 0.8]).unwrap();
        assert_eq!(jet.hess_asymmetry(), 0.0);
    }

    #[test]
    fn general_power_is_exp_log() {
        let e = parse_expression("x^y", 2, &["x", "y"]).unwrap();
        let jet = e.jet(&[2.0, 3.0]).unwrap();
        assert_relative_eq!(jet.value, 8.0, max_relative = 1e-14);
        // d/dx x^y = y x^{y-1} = 12; d/dy = x^y ln x
        assert_relative_eq!(jet.grad[0], 12.0, max_relative = 1e-13);
        assert_relative_eq!(jet.grad[1], 8.0 * 2.0f64.ln(), max_relative = 1e-13);
        assert!(e.jet(&[-1.0, 3.0]).is_err());
    }

    #[test]
    fn domain_respects_pi_shift() {
        let e = parse_expression("log(sin(x))", 1, &["x"]).unwrap();
        assert!(e.jet(&[PI + 0.1]).is_err());
        assert!(e.jet(&[0.5]).is_ok());
    }
}
