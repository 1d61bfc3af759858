//! Scalar abstraction so the network code runs either on plain `f64`
//! or on dual numbers (value + tangent), which turns the backprop
//! gradient into an exact Hessian-vector product.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    /// Primal part.
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn relu(self) -> Self;
    /// Subgradient of relu at the primal point: 1 for x > 0, else 0.
    fn relu_grad(self) -> Self;
    fn scale(self, s: f64) -> Self;
}

impl Real for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn relu(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }
    #[inline]
    fn relu_grad(self) -> Self {
        if self > 0.0 {
            1.0
        } else {
            0.0
        }
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Dual number: `v` carries the value, `d` the directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    #[inline]
    pub fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }
    #[inline]
    pub fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        Dual::new(self.v / o.v, (self.d * o.v - self.v * o.d) / (o.v * o.v))
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Real for Dual {
    #[inline]
    fn zero() -> Self {
        Dual::new(0.0, 0.0)
    }
    #[inline]
    fn one() -> Self {
        Dual::new(1.0, 0.0)
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dual::constant(x)
    }
    #[inline]
    fn value(self) -> f64 {
        self.v
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, self.d * e)
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
    #[inline]
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        Dual::new(t, self.d * (1.0 - t * t))
    }
    #[inline]
    fn relu(self) -> Self {
        if self.v > 0.0 {
            self
        } else {
            Dual::zero()
        }
    }
    #[inline]
    fn relu_grad(self) -> Self {
        // The indicator is piecewise constant; its tangent is zero a.e.
        Dual::constant(if self.v > 0.0 { 1.0 } else { 0.0 })
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        Dual::new(self.v * s, self.d * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_rule() {
        // f(x) = x^2 at x=3 with tangent 1: value 9, derivative 6
        let x = Dual::new(3.0, 1.0);
        let y = x * x;
        assert_eq!(y.v, 9.0);
        assert_eq!(y.d, 6.0);
    }

    #[test]
    fn dual_tanh_derivative() {
        let x = Dual::new(0.7, 1.0);
        let y = x.tanh();
        let t = 0.7f64.tanh();
        assert!((y.d - (1.0 - t * t)).abs() < 1e-15);
    }

    #[test]
    fn dual_chain_through_exp_ln() {
        // ln(exp(x)) == x including tangent
        let x = Dual::new(1.3, 2.5);
        let y = x.exp().ln();
        assert!((y.v - 1.3).abs() < 1e-12);
        assert!((y.d - 2.5).abs() < 1e-12);
    }
}
