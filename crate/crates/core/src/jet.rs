//! Truncated Taylor arithmetic.
//!
//! Model right-hand sides are written once over [`Carrier`]; evaluating them
//! with [`Jet`] arguments yields the Taylor coefficients of `f(q(t), t)`
//! about the current time, which the engine needs to build state and input
//! polynomials without symbolic differentiation.

use std::ops::{Add, Mul, Neg, Sub};

use crate::poly::MAX_COEFFS;

/// Numeric type a model right-hand side can be evaluated over.
pub trait Carrier:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    /// Zeroth-order value.
    fn value(&self) -> f64;
    fn scale(self, k: f64) -> Self;
}

impl Carrier for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// Taylor coefficients `c0 + c1 τ + c2 τ² + c3 τ³`, truncated at degree 3.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet(pub [f64; MAX_COEFFS]);

impl Jet {
    /// The independent variable `t0 + τ`.
    pub fn time(t0: f64) -> Self {
        Jet([t0, 1.0, 0.0, 0.0])
    }

    pub fn coeffs(&self) -> &[f64; MAX_COEFFS] {
        &self.0
    }
}

impl Carrier for Jet {
    #[inline]
    fn constant(v: f64) -> Self {
        Jet([v, 0.0, 0.0, 0.0])
    }
    #[inline]
    fn value(&self) -> f64 {
        self.0[0]
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        Jet([self.0[0] * k, self.0[1] * k, self.0[2] * k, self.0[3] * k])
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        Jet([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        Jet([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2], self.0[3] - o.0[3]])
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        Jet([-self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_truncates_at_degree_three() {
        let t = Jet::time(0.0);
        let p = t * t * t * t;
        assert_eq!(p.0, [0.0, 0.0, 0.0, 0.0]);
        let p = (t + Jet::constant(1.0)) * (t + Jet::constant(1.0));
        assert_eq!(p.0, [1.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn cubic_reaction_term() {
        // x = 1 + τ: x² - x³ = -τ - 2τ² - τ³ (to degree 3)
        let x = Jet([1.0, 1.0, 0.0, 0.0]);
        let r = x * x - x * x * x;
        assert_eq!(r.0, [0.0, -1.0, -2.0, -1.0]);
    }
}
