//! Second-order forward-mode automatic differentiation.
//!
//! A [`Jet2`] carries a value, its gradient and its (symmetric) Hessian with
//! respect to `m` independent variables.

use crate::error::Result;
use crate::expr::{real_pow, BinOp, Expr};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    /// `d/du_i`
    pub grad: Vec<f64>,
    /// `d^2/du_i du_j`, row-major `m x m`
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, m: usize) -> Self {
        Self { value, grad: vec![0.0; m], hess: vec![0.0; m * m] }
    }

    pub fn variable(value: f64, index: usize, m: usize) -> Self {
        let mut j = Self::constant(value, m);
        j.grad[index] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    fn is_constant(&self) -> bool {
        self.grad.iter().all(|g| *g == 0.0) && self.hess.iter().all(|h| *h == 0.0)
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// Chain rule for a scalar function with derivatives `(f, f', f'')` at `self.value`.
    pub fn compose(&self, f: f64, f1: f64, f2: f64) -> Self {
        let m = self.dim();
        let mut out = Self::constant(f, m);
        for i in 0..m {
            out.grad[i] = f1 * self.grad[i];
            for j in i..m {
                let h = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i * m + j];
                out.hess[i * m + j] = h;
                out.hess[j * m + i] = h;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        Self {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self.hess.iter().map(|h| -h).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = self.dim();
        let (a, b) = (self, other);
        let mut out = Self::constant(a.value * b.value, m);
        for i in 0..m {
            out.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
            for j in i..m {
                let h = a.hess[i * m + j] * b.value
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i]
                    + a.value * b.hess[i * m + j];
                out.hess[i * m + j] = h;
                out.hess[j * m + i] = h;
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let x = self.value;
        self.compose(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    fn zip(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            value: op(self.value, other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| op(*a, *b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| op(*a, *b)).collect(),
        }
    }
}

/// `x^p` for a constant exponent `p`.
fn pow_const(base: &Jet2, p: f64) -> std::result::Result<Jet2, String> {
    let x = base.value;
    if p == 0.0 {
        return Ok(Jet2::constant(1.0, base.dim()));
    }
    if p == 1.0 {
        return Ok(base.clone());
    }
    if x < 0.0 && p.fract() != 0.0 {
        return Err(format!("negative base {x} with non-integer exponent {p}"));
    }
    let f = real_pow(x, p)?;
    let f1 = p * real_pow(x, p - 1.0)?;
    let f2 = if p == 2.0 { 2.0 } else { p * (p - 1.0) * real_pow(x, p - 2.0)? };
    Ok(base.compose(f, f1, f2))
}

impl Expr {
    /// Value, gradient and Hessian of the expression at `point`.
    pub fn eval_jet(&self, point: &[f64], vars: &[String]) -> Result<Jet2> {
        let m = point.len();
        let jet = match self {
            Expr::Num(x) => Jet2::constant(*x, m),
            Expr::Const(c) => Jet2::constant(c.value(), m),
            Expr::Var(i) => Jet2::variable(point[*i], *i, m),
            Expr::Neg(a) => a.eval_jet(point, vars)?.neg(),
            Expr::Call(f, a) => {
                let inner = a.eval_jet(point, vars)?;
                let (v, d1, d2) = f.eval2(inner.value);
                inner.compose(v, d1, d2)
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval_jet(point, vars)?;
                let y = b.eval_jet(point, vars)?;
                match op {
                    BinOp::Add => x.add(&y),
                    BinOp::Sub => x.sub(&y),
                    BinOp::Mul => x.mul(&y),
                    BinOp::Div => x.div(&y),
                    BinOp::Pow if y.is_constant() => {
                        pow_const(&x, y.value).map_err(|msg| self.eval_error(vars, msg))?
                    }
                    BinOp::Pow => {
                        if !(x.value > 0.0) {
                            return Err(self.eval_error(
                                vars,
                                format!("variable exponent needs a positive base, got {}", x.value),
                            ));
                        }
                        let ln = x.compose(x.value.ln(), 1.0 / x.value, -1.0 / (x.value * x.value));
                        let e = y.mul(&ln);
                        let ev = e.value.exp();
                        e.compose(ev, ev, ev)
                    }
                }
            }
        };
        if jet.is_finite() {
            Ok(jet)
        } else {
            Err(self.eval_error(vars, "non-finite value or derivative"))
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse_expression;

    fn uv() -> Vec<String> {
        vec!["u".into(), "v".into()]
    }

    #[test]
    fn catenoid_second_derivative() {
        // d^2/du^2 cosh(u) cos(v) at (0, 0) = 1
        let e = parse_expression("cosh(u)*cos(v)", &uv()).unwrap();
        let j = e.eval_jet(&[0.0, 0.0], &uv()).unwrap();
        assert!((j.hess[0] - 1.0).abs() < 1e-15);
        assert!((j.hess[3] + 1.0).abs() < 1e-15);
        assert_eq!(j.hess[1], j.hess[2]);
    }

    #[test]
    fn power_rules() {
        let e = parse_expression("u^3 + v^u", &uv()).unwrap();
        let j = e.eval_jet(&[2.0, 3.0], &uv()).unwrap();
        // u^3: 3u^2 = 12, 6u = 12; 3^u: ln3 3^u, ln3^2 3^u
        let l3 = 3f64.ln();
        assert!((j.grad[0] - (12.0 + l3 * 9.0)).abs() < 1e-12);
        assert!((j.hess[0] - (12.0 + l3 * l3 * 9.0)).abs() < 1e-12);
        // d/dv v^u = u v^(u-1) = 6
        assert!((j.grad[1] - 6.0).abs() < 1e-12);
        // d2/du dv v^u = v^(u-1) (1 + u ln v)
        let mixed = 3.0 * (1.0 + 2.0 * l3);
        assert!((j.hess[1] - mixed).abs() < 1e-12);
        assert!((j.hess[2] - mixed).abs() < 1e-12);
    }

    #[test]
    fn square_at_zero_is_finite() {
        let e = parse_expression("u^2", &uv()).unwrap();
        let j = e.eval_jet(&[0.0, 1.0], &uv()).unwrap();
        assert_eq!((j.value, j.grad[0], j.hess[0]), (0.0, 0.0, 2.0));
        let e = parse_expression("sqrt(u)", &uv()).unwrap();
        assert!(e.eval_jet(&[0.0, 1.0], &uv()).is_err());
    }
}
