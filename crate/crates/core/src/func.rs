//! Closed-form scalar functions of `v` with exact derivatives.
//!
//! Every supported family (polynomials, `1/(4v)`, affine `tau`) is a Laurent
//! polynomial, so one representation serves them all. Derivatives act on the
//! coefficient array and never touch finite differences.

use crate::dd::Dd;
use serde::Serialize;

/// Tag recording which user-facing family a function came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Poly,
    InverseFourV,
    Laurent,
}

/// `sum_j coef[j] * v^(lo + j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Func {
    pub lo: i32,
    pub coef: Vec<f64>,
    pub family: Family,
}

impl Func {
    /// Polynomial with `coef[j]` multiplying `v^j`.
    pub fn poly(coef: &[f64]) -> Self {
        let mut f = Func { lo: 0, coef: coef.to_vec(), family: Family::Poly };
        f.trim();
        f
    }

    pub fn constant(x: f64) -> Self {
        Func::poly(&[x])
    }

    /// `kappa(v) = 1/(4v)`, the hydrodynamic form of NLS.
    pub fn inverse_four_v() -> Self {
        Func { lo: -1, coef: vec![0.25], family: Family::InverseFourV }
    }

    pub fn laurent(lo: i32, coef: &[f64]) -> Self {
        let mut f = Func { lo, coef: coef.to_vec(), family: Family::Laurent };
        f.trim();
        f
    }

    fn trim(&mut self) {
        while self.coef.len() > 1 && *self.coef.last().unwrap() == 0.0 {
            self.coef.pop();
        }
        while self.coef.len() > 1 && self.coef[0] == 0.0 {
            self.coef.remove(0);
            self.lo += 1;
        }
        if self.coef.is_empty() {
            self.coef.push(0.0);
        }
        if self.coef.len() == 1 && self.coef[0] == 0.0 {
            self.lo = 0;
        }
    }

    /// Highest power with a nonzero coefficient.
    pub fn hi(&self) -> i32 {
        self.lo + self.coef.len() as i32 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|&c| c == 0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.is_zero() || (self.lo == 0 && self.coef.len() == 1)
    }

    /// Polynomial of degree at most one.
    pub fn is_affine(&self) -> bool {
        self.is_zero() || (self.lo >= 0 && self.hi() <= 1)
    }

    pub fn is_identity(&self) -> bool {
        self.lo == 1 && self.coef == [1.0]
    }

    pub fn is_polynomial(&self) -> bool {
        self.is_zero() || self.lo >= 0
    }

    /// Coefficient of `v^p`.
    pub fn coeff(&self, p: i32) -> f64 {
        let j = p - self.lo;
        if j < 0 || j as usize >= self.coef.len() {
            0.0
        } else {
            self.coef[j as usize]
        }
    }

    /// Exact `n`-th derivative.
    pub fn deriv(&self, n: usize) -> Func {
        let mut coef = Vec::with_capacity(self.coef.len());
        for (j, &c) in self.coef.iter().enumerate() {
            let p = self.lo + j as i32;
            let mut fac = 1.0;
            for i in 0..n as i32 {
                fac *= (p - i) as f64;
            }
            coef.push(c * fac);
        }
        let mut f = Func { lo: self.lo - n as i32, coef, family: self.family };
        f.trim();
        f
    }

    pub fn eval(&self, v: f64) -> f64 {
        // Horner in v over the nonnegative-offset coefficients, then scale.
        let mut acc = 0.0;
        for &c in self.coef.iter().rev() {
            acc = acc * v + c;
        }
        if self.lo == 0 {
            acc
        } else {
            acc * v.powi(self.lo)
        }
    }

    pub fn eval_dd(&self, x: Dd) -> Dd {
        let mut acc = Dd::ZERO;
        for &c in self.coef.iter().rev() {
            acc = acc * x + Dd::new(c);
        }
        if self.lo == 0 {
            acc
        } else {
            acc * x.powi(self.lo)
        }
    }

    /// Values of `f, f', ..., f^(order)`.
    pub fn jet(&self, v: f64, order: usize) -> Vec<f64> {
        (0..=order).map(|n| self.deriv(n).eval(v)).collect()
    }

    /// `v -> v^m * self(1/v)`, used to build conjugate Lagrangian models.
    pub fn reflect(&self, m: i32) -> Func {
        // v^m * sum c_j v^-(lo+j): powers m - lo - j.
        let hi = self.hi();
        let lo = m - hi;
        let coef: Vec<f64> = self.coef.iter().rev().copied().collect();
        Func::laurent(lo, &coef)
    }

    pub fn scale(&self, s: f64) -> Func {
        let mut f = self.clone();
        for c in &mut f.coef {
            *c *= s;
        }
        f.trim();
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_derivatives() {
        let f = Func::poly(&[0.0, 0.0, 0.0, -1.0 / 6.0]);
        let j = f.jet(2.0, 4);
        assert!((j[0] + 8.0 / 6.0).abs() < 1e-15);
        assert!((j[1] + 2.0).abs() < 1e-15);
        assert!((j[2] + 2.0).abs() < 1e-15);
        assert!((j[3] + 1.0).abs() < 1e-15);
        assert_eq!(j[4], 0.0);
    }

    #[test]
    fn inverse_four_v_derivatives() {
        let k = Func::inverse_four_v();
        let v = 0.7;
        let j = k.jet(v, 2);
        assert!((j[0] - 0.25 / v).abs() < 1e-15);
        assert!((j[1] + 0.25 / (v * v)).abs() < 1e-15);
        assert!((j[2] - 0.5 / (v * v * v)).abs() < 1e-14);
    }

    #[test]
    fn reflection_matches_definition() {
        let f = Func::poly(&[0.3, -1.0, 0.5, 2.0]);
        let r = f.reflect(1);
        for &v in &[0.4, 1.3, 2.2] {
            assert!((r.eval(v) - v * f.eval(1.0 / v)).abs() < 1e-13);
        }
    }

    #[test]
    fn dd_agrees_with_plain() {
        let f = Func::laurent(-2, &[0.1, 0.0, 1.0, -0.5, 0.25]);
        for &v in &[0.5, 1.7, 3.0] {
            assert!((f.eval_dd(Dd::new(v)).to_f64() - f.eval(v)).abs() < 1e-13 * f.eval(v).abs().max(1.0));
        }
    }
}
