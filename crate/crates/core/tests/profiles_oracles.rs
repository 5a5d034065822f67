mod common;

use common::*;
use modlab_core::profiles::{averaged_state, find_turning_points, period_integrals, profile_sample, shooting_oracle};
use modlab_core::quad::QuadConfig;

#[test]
fn elliptic_j_closed_form_matches_trapezoid() {
    for &m in &[0.05, 0.3, 0.7, 0.95] {
        let (k, e) = ellip_ke(m);
        let closed = (2.0 * (m * m - m + 1.0) * e - (2.0 - m) * (1.0 - m) * k) / (15.0 * m * m);
        let num = trapezoid_quarter(|p| {
            let (s, c) = p.sin_cos();
            s * s * c * c * (1.0 - m * s * s).sqrt()
        }, 400);
        assert!(rel(closed, num) < 1e-13, "m = {m}: {closed} vs {num}");
    }
}

#[test]
fn cnoidal_wave_matches_elliptic_oracle() {
    let m = kdv();
    let p = kdv_wave();
    let br = find_turning_points(&m, &p, (-20.0, 20.0)).unwrap();
    let pi = period_integrals(&m, &p, &br, &QuadConfig::default()).unwrap();
    let ws = averaged_state(&m, &p, &br, 20).unwrap();
    let oracle = cnoidal(-0.5);
    assert!(rel(ws.xi, oracle.xi) < 1e-10, "{} {}", ws.xi, oracle.xi);
    assert!(rel(ws.mean_u[0], oracle.mean_v) < 1e-10);
    assert!(rel(ws.alpha, oracle.alpha) < 1e-10);
    assert!(rel(pi.theta, oracle.theta) < 1e-10, "{} {}", pi.theta, oracle.theta);
    assert!(ws.alpha > 0.0);
}

#[test]
fn shooting_agrees_with_quadrature() {
    let m = kdv();
    let p = kdv_wave();
    let br = find_turning_points(&m, &p, (-20.0, 20.0)).unwrap();
    let ws = averaged_state(&m, &p, &br, 20).unwrap();
    let sh = shooting_oracle(&m, &p, &br).unwrap();
    assert!(rel(sh.state.xi, ws.xi) < 1e-8, "{} {}", sh.state.xi, ws.xi);
    assert!(rel(sh.state.mean_u[0], ws.mean_u[0]) < 1e-7);
    assert!(rel(sh.state.alpha, ws.alpha) < 1e-7);
    assert!(sh.energy_drift < 1e-10, "drift {}", sh.energy_drift);
}

#[test]
fn order_doubling_within_reported_error() {
    let m = kdv();
    let p = kdv_wave();
    let br = find_turning_points(&m, &p, (-20.0, 20.0)).unwrap();
    let a = averaged_state(&m, &p, &br, 10).unwrap();
    let b = averaged_state(&m, &p, &br, 20).unwrap();
    assert!((a.xi - b.xi).abs() / b.xi <= a.quad_error.max(1e-15) * 10.0);
}

#[test]
fn profile_samples_respect_first_integral() {
    let m = kdv();
    let p = kdv_wave();
    let br = find_turning_points(&m, &p, (-20.0, 20.0)).unwrap();
    let n = 201;
    let s = profile_sample(&m, &p, &br, n).unwrap();
    assert_eq!(s[0].1[0], br.v2);
    assert_eq!(s[n / 2].1[0], br.v3);
    for i in 0..n {
        assert!((s[i].1[0] - s[n - 1 - i].1[0]).abs() < 1e-9);
    }
    // Trapezoid mean of v over the uniform periodic grid.
    let mean: f64 = s[..n - 1].iter().map(|x| x.1[0]).sum::<f64>() / (n - 1) as f64;
    let ws = averaged_state(&m, &p, &br, 20).unwrap();
    assert!(rel(mean, ws.mean_u[0]) < 1e-9, "{mean} {}", ws.mean_u[0]);
}
