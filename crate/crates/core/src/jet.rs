//! Truncated univariate Taylor arithmetic (order 3).
//!
//! Evaluating a function on `x + t d` in this arithmetic yields the
//! directional derivatives `D^k f(x)[d, .., d] = k! c_k` for `k <= 3`.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type the model right-hand side can be evaluated in.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(&self) -> f64;
    fn powf(self, r: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(&self) -> f64 {
        *self
    }
    #[inline]
    fn powf(self, r: f64) -> Self {
        f64::powf(self, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; 4]);

impl Jet {
    pub fn var(x: f64, d: f64) -> Self {
        Jet([x, d, 0.0, 0.0])
    }

    /// `k`-th directional derivative.
    pub fn deriv(&self, k: usize) -> f64 {
        const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
        self.0[k] * FACT[k]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        Jet([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        Jet([a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]])
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let a = self.0;
        Jet([-a[0], -a[1], -a[2], -a[3]])
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        Jet([
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
            a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0],
        ])
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        let mut q = [0.0; 4];
        for k in 0..4 {
            let mut s = a[k];
            for i in 1..=k {
                s -= b[i] * q[k - i];
            }
            q[k] = s / b[0];
        }
        Jet(q)
    }
}

impl Scalar for Jet {
    fn cst(v: f64) -> Self {
        Jet([v, 0.0, 0.0, 0.0])
    }

    fn val(&self) -> f64 {
        self.0[0]
    }

    /// `a^r` by the recurrence `k a0 p_k = sum_{i=1..k} (r i - (k - i)) a_i p_{k-i}`.
    fn powf(self, r: f64) -> Self {
        let a = self.0;
        let mut p = [0.0; 4];
        p[0] = a[0].powf(r);
        for k in 1..4 {
            let mut s = 0.0;
            for i in 1..=k {
                s += (r * i as f64 - (k - i) as f64) * a[i] * p[k - i];
            }
            p[k] = s / (k as f64 * a[0]);
        }
        Jet(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_and_quotient_derivatives() {
        // f(x) = x^2.5 / (1 + x) at x = 1.7
        let x = Jet::var(1.7, 1.0);
        let f = x.powf(2.5) / (Jet::cst(1.0) + x);
        let g = |x: f64| x.powf(2.5) / (1.0 + x);
        // Taylor coefficients by high-order central differences
        let h = 1e-2;
        let d1 = (g(1.7 - 2.0 * h) - 8.0 * g(1.7 - h) + 8.0 * g(1.7 + h) - g(1.7 + 2.0 * h)) / (12.0 * h);
        let d2 = (-g(1.7 - 2.0 * h) + 16.0 * g(1.7 - h) - 30.0 * g(1.7) + 16.0 * g(1.7 + h) - g(1.7 + 2.0 * h))
            / (12.0 * h * h);
        let d3 = (g(1.7 + 2.0 * h) - 2.0 * g(1.7 + h) + 2.0 * g(1.7 - h) - g(1.7 - 2.0 * h)) / (2.0 * h * h * h);
        assert!((f.deriv(0) - g(1.7)).abs() < 1e-14);
        assert!((f.deriv(1) - d1).abs() < 1e-8);
        assert!((f.deriv(2) - d2).abs() < 1e-6);
        assert!((f.deriv(3) - d3).abs() < 1e-3);
    }

    #[test]
    fn integer_power_is_exact_polynomial() {
        let x = Jet::var(2.0, 1.0);
        let c = x.powf(3.0);
        assert_eq!(c.0, [8.0, 12.0, 6.0, 1.0]);
    }
}
