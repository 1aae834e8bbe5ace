//! First-order forward-mode dual numbers, used to differentiate ODE
//! right-hand sides along a solution without difference quotients.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic shared by `f64` and [`Dual`], so right-hand sides can be
/// written once and evaluated either plainly or with a tangent.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn powf(self, p: f64) -> Self;
    fn value(self) -> f64;
}

impl Real for f64 {
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn value(self) -> f64 {
        self
    }
}

impl Real for Dual {
    fn powf(self, p: f64) -> Self {
        Dual::powf(self, p)
    }
    fn value(self) -> f64 {
        self.re
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub const fn new(re: f64, eps: f64) -> Self {
        Dual { re, eps }
    }

    pub const fn constant(re: f64) -> Self {
        Dual { re, eps: 0.0 }
    }

    pub fn powf(self, p: f64) -> Self {
        let v = self.re.powf(p);
        Dual::new(v, p * self.re.powf(p - 1.0) * self.eps)
    }

    pub fn sqrt(self) -> Self {
        let v = self.re.sqrt();
        Dual::new(v, 0.5 * self.eps / v)
    }
}

impl From<f64> for Dual {
    fn from(x: f64) -> Self {
        Dual::constant(x)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.re / o.re;
        Dual::new(q, (self.eps - q * o.eps) / o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr<f64> for Dual {
            type Output = Dual;
            fn $f(self, o: f64) -> Dual { $tr::$f(self, Dual::constant(o)) }
        }
        impl $tr<Dual> for f64 {
            type Output = Dual;
            fn $f(self, o: Dual) -> Dual { $tr::$f(Dual::constant(self), o) }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_quotient_power_rules() {
        let x = Dual::new(1.7, 1.0);
        let f = (x * x + 3.0) / (x - 0.2) * x.powf(0.4) - x.sqrt();
        let g = |t: f64| (t * t + 3.0) / (t - 0.2) * t.powf(0.4) - t.sqrt();
        let h = 1e-6;
        let fd = (g(1.7 + h) - g(1.7 - h)) / (2.0 * h);
        assert!((f.re - g(1.7)).abs() < 1e-14);
        assert!((f.eps - fd).abs() < 1e-8);
        assert_eq!((-x).eps, -1.0);
    }
}
