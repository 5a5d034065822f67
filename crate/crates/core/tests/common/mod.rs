#![allow(dead_code)]

use modlab_core::{Func, ModelSpec, WaveParams};

/// Complete elliptic integrals `K(m)`, `E(m)` by the AGM.
pub fn ellip_ke(m: f64) -> (f64, f64) {
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..60 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        pow *= 2.0;
        sum += pow * c * c;
        a = an;
        b = bn;
        if c.abs() < 1e-17 {
            break;
        }
    }
    let k = std::f64::consts::PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

/// Periodic trapezoid rule for a smooth pi-periodic even integrand on [0, pi/2].
pub fn trapezoid_quarter<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = std::f64::consts::PI / n as f64;
    (0..n).map(|i| f(i as f64 * h)).sum::<f64>() * h / 2.0
}

/// Closed-form cnoidal KdV quantities for `f = -v^3/6`, `b = kappa = 1`,
/// `c = 1`, `lambda = 0`, given the three real roots of `mu - W`.
pub struct Cnoidal {
    pub xi: f64,
    pub mean_v: f64,
    pub mean_q: f64,
    pub alpha: f64,
    pub theta: f64,
}

pub fn cubic_roots_kdv(mu: f64) -> (f64, f64, f64) {
    // mu - W = (-v^3 + 3 v^2 + 6 mu)/6; roots of v^3 - 3 v^2 - 6 mu = 0.
    // Trigonometric form with v = 1 + 2 cos(phi): 8cos^3 - 6cos - 2 - 6mu = 0.
    let t = ((2.0 + 6.0 * mu) / 2.0).clamp(-1.0, 1.0);
    let base = t.acos() / 3.0;
    let mut r: Vec<f64> = (0..3)
        .map(|j| 1.0 + 2.0 * (base - 2.0 * std::f64::consts::PI * j as f64 / 3.0).cos())
        .collect();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (r[0], r[1], r[2])
}

pub fn cnoidal(mu: f64) -> Cnoidal {
    let (v1, v2, v3) = cubic_roots_kdv(mu);
    let a = v3 - v1;
    let l = v3 - v2;
    let m = l / a;
    let (k, e) = ellip_ke(m);
    let s3 = 3f64.sqrt();
    let sa = a.sqrt();
    let xi = 4.0 * s3 * k / sa;
    let int_v = 2.0 * s3 * (2.0 / sa) * (v1 * k + a * e);
    let e32 = (2.0 * (2.0 - m) * e - (1.0 - m) * k) / 3.0;
    let int_v2 = 2.0 * s3 * (2.0 / sa) * (v1 * v1 * k + 2.0 * v1 * a * e + a * a * e32);
    let j = (2.0 * (m * m - m + 1.0) * e - (2.0 - m) * (1.0 - m) * k) / (15.0 * m * m);
    let theta = 2.0 / s3 * 2.0 * l * l * sa * j;
    let mean_v = int_v / xi;
    let mean_q = 0.5 * int_v2 / xi;
    let alpha = (mean_q - 0.5 * mean_v * mean_v) * xi;
    Cnoidal { xi, mean_v, mean_q, alpha, theta }
}

pub fn kdv() -> ModelSpec {
    ModelSpec::kdv()
}

pub fn kdv_wave() -> WaveParams {
    WaveParams::new(-0.5, 1.0, &[0.0])
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub const KDV_WIN: (f64, f64) = (-20.0, 20.0);

/// Eulerian Euler-Korteweg model with `f = v^2/2`, `kappa = 1`, `tau = v`.
pub fn ek() -> ModelSpec {
    ModelSpec::euler_korteweg(-1.0, Func::poly(&[0.0, 0.0, 0.5]), Func::constant(1.0), Func::poly(&[0.0, 1.0]), None)
        .unwrap()
}

/// A wave in the well at `v = 0.5`, about forty percent of the way up to
/// the saddle near `v = 1 + sqrt 2`.
pub fn ek_wave() -> WaveParams {
    WaveParams::new(2.5064, 0.1, &[-2.495, 1.0])
}

pub const EK_WIN: (f64, f64) = (0.05, 2.41);

/// Scalar model with a state-dependent capillarity: `f = -v^3/6 + v^4/24`,
/// `kappa = 1 + v^2/4`, `b = 1`. At `c = -1`, `lambda = 0` there is a well
/// at `v = 0` between maxima near `-1.37` and `4.37`.
pub fn quartic() -> ModelSpec {
    ModelSpec::scalar(
        1.0,
        Func::poly(&[0.0, 0.0, 0.0, -1.0 / 6.0, 1.0 / 24.0]),
        Func::poly(&[1.0, 0.0, 0.25]),
        Some((-50.0, 50.0)),
    )
    .unwrap()
}

pub const QUARTIC_WIN: (f64, f64) = (-1.3, 4.3);

/// Window reaching past the EK saddle, for homoclinic orbits.
pub const EK_SOLITON_WIN: (f64, f64) = (0.02, 3.0);
