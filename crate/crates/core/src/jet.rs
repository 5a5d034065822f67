//! Truncated Taylor arithmetic. `Jet::from_derivs` takes `f, f', f'', ...`
//! and stores normalized Taylor coefficients `f^(j)/j!`.

use std::ops::{Add, Mul, Neg, Sub};

pub const ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; ORDER]);

const FACT: [f64; ORDER] = [1.0, 1.0, 2.0, 6.0, 24.0];

impl Jet {
    pub fn constant(x: f64) -> Self {
        let mut t = [0.0; ORDER];
        t[0] = x;
        Jet(t)
    }

    /// The independent variable expanded at `v`.
    pub fn var(v: f64) -> Self {
        let mut t = [0.0; ORDER];
        t[0] = v;
        t[1] = 1.0;
        Jet(t)
    }

    pub fn from_derivs(d: &[f64]) -> Self {
        let mut t = [0.0; ORDER];
        for (j, &x) in d.iter().take(ORDER).enumerate() {
            t[j] = x / FACT[j];
        }
        Jet(t)
    }

    pub fn derivs(&self) -> [f64; ORDER] {
        let mut d = [0.0; ORDER];
        for j in 0..ORDER {
            d[j] = self.0[j] * FACT[j];
        }
        d
    }

    pub fn scale(self, s: f64) -> Jet {
        let mut t = self.0;
        for x in &mut t {
            *x *= s;
        }
        Jet(t)
    }

    pub fn recip(self) -> Jet {
        let a = self.0;
        let mut r = [0.0; ORDER];
        r[0] = 1.0 / a[0];
        for n in 1..ORDER {
            let mut s = 0.0;
            for j in 1..=n {
                s += a[j] * r[n - j];
            }
            r[n] = -s * r[0];
        }
        Jet(r)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut t = self.0;
        for j in 0..ORDER {
            t[j] += o.0[j];
        }
        Jet(t)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut t = [0.0; ORDER];
        for i in 0..ORDER {
            for j in 0..ORDER - i {
                t[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(t)
    }
}
