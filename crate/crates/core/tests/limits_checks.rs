mod common;

use common::*;
use modlab_core::limits::*;
use modlab_core::linalg::{EigTol, Hyperbolicity};
use modlab_core::model::{self, ModelSpec};
use modlab_core::profiles;
use modlab_core::quad::QuadConfig;
use modlab_core::{Error, WaveParams};
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::PI;

const TP: f64 = 2.0 * PI;

fn sorted_re(z: &[num_complex::Complex64]) -> Vec<f64> {
    let mut r: Vec<f64> = z.iter().map(|c| c.re).collect();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r
}

#[test]
fn kdv_harmonic_point_values() {
    let hp = harmonic_point(&kdv(), 1.0, &[0.0], KDV_WIN, None).unwrap();
    assert!((hp.v0 - 2.0).abs() < 1e-12);
    assert!((hp.mu0 + 2.0 / 3.0).abs() < 1e-12);
    assert!(rel(hp.k0, 1.0 / TP) < 1e-12);
    assert!((hp.c0 - 1.0).abs() < 1e-12);
    assert!((hp.vg + 1.0).abs() < 1e-12);
    assert!(rel(hp.a0, 5.0 / 24.0) < 1e-12);
    assert!(rel(hp.b0, -0.5) < 1e-12);
    assert!(rel(hp.w0, 1.0) < 1e-12);
    assert!(rel(hp.c_coef, 0.5) < 1e-12);
}

#[test]
fn kdv_harmonic_limit_matrix() {
    let hp = harmonic_point(&kdv(), 1.0, &[0.0], KDV_WIN, None).unwrap();
    let hl = limiting_whitham_harmonic(&kdv(), &hp, &EigTol::default()).unwrap();
    assert!(rel(hl.a_tilde0, -1.0 / (6.0 * TP * TP)) < 1e-12, "{}", hl.a_tilde0);
    let ev = sorted_re(&hl.eigenvalues);
    assert!((ev[0] + 1.0).abs() < 1e-6 && (ev[1] + 1.0).abs() < 1e-6 && (ev[2] - 2.0).abs() < 1e-12, "{ev:?}");
    assert_eq!(hl.jordan_rank, 2);
    assert!(hl.block_residual < 1e-13);
    assert!(rel(hl.d_kka_h, 12.0 * PI) < 1e-12);
}

/// Solves the defining relation of the harmonic phase velocity by bisection.
fn c0_by_root(m: &ModelSpec, u: &[f64], k: f64, near: f64) -> f64 {
    let g = |c: f64| {
        let (lam, _) = soliton_parameters(m, c, u).unwrap();
        let p = WaveParams::new(0.0, c, &lam);
        model::potential_jet(m, u[0], &p, 2).unwrap()[2] - TP * TP * k * k * m.kappa.eval(u[0])
    };
    let (mut lo, mut hi) = (near - 0.5, near + 0.5);
    assert!(g(lo) * g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) * g(lo) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn harmonic_phase_velocity_matches_root_oracle() {
    let cases: Vec<(ModelSpec, f64, Vec<f64>, (f64, f64))> = vec![
        (kdv(), 1.0, vec![0.0], KDV_WIN),
        (quartic(), -1.0, vec![0.0], QUARTIC_WIN),
        (ek(), ek_wave().c, ek_wave().lambda.clone(), EK_WIN),
    ];
    for (m, c, lam, win) in cases {
        let hp = harmonic_point(&m, c, &lam, win, None).unwrap();
        // At the harmonic point itself the phase velocity is the wave speed.
        assert!((hp.c0 - c).abs() < 1e-10 * c.abs().max(1.0), "{} {}", hp.c0, c);
        let (k, u) = (hp.k0, hp.u0.clone());
        let root = c0_by_root(&m, &u, k, hp.c0);
        assert!((root - hp.c0).abs() < 1e-10);
        let h = 1e-4;
        let dk = (c0_by_root(&m, &u, k + h, hp.c0) - c0_by_root(&m, &u, k - h, hp.c0)) / (2.0 * h);
        assert!((dk - hp.dk_c0).abs() < 1e-6 * hp.dk_c0.abs().max(1.0), "{dk} {}", hp.dk_c0);
        let dkk = (c0_by_root(&m, &u, k + h, hp.c0) - 2.0 * hp.c0 + c0_by_root(&m, &u, k - h, hp.c0)) / (h * h);
        assert!((dkk - hp.dkk_c0).abs() < 1e-4 * hp.dkk_c0.abs().max(1.0), "{dkk} {}", hp.dkk_c0);
        for i in 0..m.n() {
            let mut up = u.clone();
            let mut um = u.clone();
            up[i] += h;
            um[i] -= h;
            let d = (c0_by_root(&m, &up, k, hp.c0) - c0_by_root(&m, &um, k, hp.c0)) / (2.0 * h);
            assert!((d - hp.grad_u_c0[i]).abs() < 1e-6 * d.abs().max(1.0), "{i}: {d} {}", hp.grad_u_c0[i]);
        }
    }
}

/// `d ln Xi / d mu` and `d <v> / d mu` at the well bottom give `a0` and `b0`
/// because `mu - mu0 = W'' delta^2 / 2` to leading order.
#[test]
fn a0_b0_closed_forms_match_period_and_mean_slopes() {
    let cases: Vec<(ModelSpec, f64, Vec<f64>, (f64, f64))> = vec![
        (kdv(), 1.0, vec![0.0], KDV_WIN),
        (quartic(), -1.0, vec![0.0], QUARTIC_WIN),
        (ek(), ek_wave().c, ek_wave().lambda.clone(), EK_WIN),
    ];
    for (m, c, lam, win) in cases {
        let hp = harmonic_point(&m, c, &lam, win, None).unwrap();
        let at = |eps: f64| {
            let p = WaveParams::new(hp.mu0 + eps, c, &lam);
            let br = profiles::find_turning_points(&m, &p, win).unwrap();
            let st = profiles::averaged_state(&m, &p, &br, 20).unwrap();
            ((st.xi / hp.xi0 - 1.0) / eps, (st.mean_u[0] - hp.v0) / eps)
        };
        let e = 2e-4;
        let (a1, b1) = at(e);
        let (a2, b2) = at(0.5 * e);
        let a = 2.0 * a2 - a1;
        let b = 2.0 * b2 - b1;
        assert!((a - hp.a0).abs() < 1e-6 * hp.a0.abs().max(1.0), "a0 {a} {}", hp.a0);
        assert!((b - hp.b0).abs() < 1e-6 * hp.b0.abs().max(1.0), "b0 {b} {}", hp.b0);
        // The expansion coefficient is 1/(2 W'') for both field counts.
        assert!(rel(hp.c_coef, 0.5 / hp.w_derivs[0]) < 1e-10);
    }
}

#[test]
fn ek_harmonic_limit_structure() {
    let p = ek_wave();
    let m = ek();
    let hp = harmonic_point(&m, p.c, &p.lambda, EK_WIN, None).unwrap();
    let hl = limiting_whitham_harmonic(&m, &hp, &EigTol::default()).unwrap();
    assert!(hl.block_residual < 1e-12, "{}", hl.block_residual);
    assert_eq!(hl.jordan_rank, m.n() + 1);
    let sm = model::structural_matrices(&m);
    let tail = -(&sm.b * &hp.hess_h_u);
    assert!(rel(tail.trace() + 2.0 * hp.vg, hl.whitham.trace()) < 1e-12);
}

#[test]
fn kdv_soliton_point_values() {
    let cfg = QuadConfig::default();
    let sp = soliton_point(&kdv(), 1.0, &[0.0], KDV_WIN, &cfg).unwrap();
    assert!((sp.v_outer - 3.0).abs() < 1e-12);
    assert!(sp.mus.abs() < 1e-15 && sp.lambdas[0].abs() < 1e-15);
    assert!(rel(sp.boussinesq, 24.0 / 5.0) < 1e-12, "{}", sp.boussinesq);
    assert!(rel(sp.dc_m, 12.0) < 1e-12, "{}", sp.dc_m);
    assert!(rel(sp.dc_m_fd, 12.0) < 1e-8);
    assert!(rel(sp.dc2_m, 18.0) < 1e-8, "{}", sp.dc2_m);
    // M depends on c - vs only.
    assert!(rel(sp.grad_u_m[0], -12.0) < 1e-8, "{:?}", sp.grad_u_m);
    assert!(rel(sp.xis, TP) < 1e-12);
    let from_lam = soliton_point_from_lambda(&kdv(), 1.0, &[0.0], KDV_WIN, &cfg).unwrap();
    assert_eq!(from_lam.vs, 0.0);
}

#[test]
fn kdv_soliton_point_shifted_background() {
    // Galilean check: M = (24/5)(c - vs)^(5/2) for any endstate vs < c.
    let cfg = QuadConfig::default();
    let (c, vs) = (1.3, 0.4);
    let sp = soliton_point(&kdv(), c, &[vs], KDV_WIN, &cfg).unwrap();
    let ce: f64 = c - vs;
    assert!(rel(sp.boussinesq, 4.8 * ce.powf(2.5)) < 1e-12);
    assert!(rel(sp.dc_m, 12.0 * ce.powf(1.5)) < 1e-12);
    assert!(rel(sp.dc2_m, 18.0 * ce.sqrt()) < 1e-8);
}

#[test]
fn kdv_soliton_limit_matrix() {
    let cfg = QuadConfig::default();
    let sp = soliton_point(&kdv(), 1.0, &[0.0], KDV_WIN, &cfg).unwrap();
    let sl = limiting_whitham_soliton(&kdv(), &sp, &EigTol::default()).unwrap();
    let ev = sorted_re(&sl.eigenvalues);
    assert!(ev[0].abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-6 && (ev[2] - 1.0).abs() < 1e-6, "{ev:?}");
    assert!(sl.block_residual < 1e-12);
    assert!(rel(sl.dk2_h, 144.0) < 1e-8);
}

#[test]
fn ek_soliton_limit_structure() {
    let m = ek();
    let p = ek_wave();
    let cfg = QuadConfig::default();
    let sp = soliton_point_from_lambda(&m, p.c, &p.lambda, EK_SOLITON_WIN, &cfg).unwrap();
    assert!(sp.w2 < 0.0);
    assert!(rel(sp.dc_m, sp.dc_m_fd) < 1e-7, "{} {}", sp.dc_m, sp.dc_m_fd);
    let sl = limiting_whitham_soliton(&m, &sp, &EigTol::default()).unwrap();
    assert!(sl.block_residual < 1e-12, "{}", sl.block_residual);
}

#[test]
fn harmonic_point_error_cases() {
    // c = 0: W = v^3/6 has only a degenerate critical point at 0.
    let e = harmonic_point(&kdv(), 0.0, &[0.0], KDV_WIN, None).unwrap_err();
    assert!(matches!(e, Error::DegenerateWell(_) | Error::NoWellMinimum), "{e:?}");
    // lambda large and positive: no critical points at all.
    let e = harmonic_point(&kdv(), 1.0, &[-5.0], KDV_WIN, None).unwrap_err();
    assert!(matches!(e, Error::NoWellMinimum), "{e:?}");
    let e = soliton_point_from_lambda(&kdv(), 1.0, &[-5.0], KDV_WIN, &QuadConfig::default()).unwrap_err();
    assert!(matches!(e, Error::NoSaddle), "{e:?}");
    // A resonant group velocity is reported.
    let ek = ek();
    let hp = harmonic_point(&ek, ek_wave().c, &ek_wave().lambda, EK_WIN, Some(Branch::Minus));
    if let Err(e) = hp {
        assert!(matches!(e, Error::InadmissibleWavenumber { .. }), "{e:?}");
    }
}

#[test]
fn branch_auto_selection_follows_wave_speed() {
    let m = ek();
    let p = ek_wave();
    let auto = harmonic_point(&m, p.c, &p.lambda, EK_WIN, None).unwrap();
    let other = match auto.branch {
        Branch::Plus => Branch::Minus,
        Branch::Minus => Branch::Plus,
    };
    if let Ok(o) = harmonic_point(&m, p.c, &p.lambda, EK_WIN, Some(other)) {
        assert!((o.c0 - p.c).abs() > (auto.c0 - p.c).abs());
    }
}

#[test]
fn frame_cancellations_and_displayed_forms() {
    for (m, v, c, l2) in [(kdv(), 2.0, 1.0, 0.0), (quartic(), 0.3, -1.0, 0.0), (ek(), 0.5, 0.1, 1.0), (ek(), 1.7, -0.4, 0.3)] {
        let fr = limit_frame(&m, v, c, l2).unwrap();
        assert!(fr.max_cancellation() < 1e-12, "{:?}", fr.cancellations);
        let dd = fr.displayed_d(m.b);
        assert!((&fr.d - dd).amax() < 1e-12);
        let pr = fr.projected(0.3, -1.1, 0.7, 2.5, 0.9);
        let disp = fr.projected_displayed(m.b, 0.3, -1.1, 0.7, 2.5, 0.9);
        assert!((&pr - &disp).amax() < 1e-11 * pr.amax().max(1.0), "{pr}\n{disp}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ek_frame_identities(v in 0.2f64..3.0, c in -2.0f64..2.0, l2 in -2.0f64..2.0,
                           a in -3.0f64..3.0, b in -3.0f64..3.0, cc in -3.0f64..3.0,
                           mm in -3.0f64..3.0, n in -3.0f64..3.0) {
        let m = ek();
        let fr = limit_frame(&m, v, c, l2).unwrap();
        let scale = fr.w.iter().chain(&fr.z).chain(&fr.v).map(|x| x.abs()).fold(1.0, f64::max);
        prop_assert!(fr.max_cancellation() < 1e-12 * scale * scale);
        let pr = fr.projected(a, b, cc, mm, n);
        let disp = fr.projected_displayed(m.b, a, b, cc, mm, n);
        prop_assert!((&pr - &disp).amax() < 1e-10 * pr.amax().max(1.0));
    }

    #[test]
    fn toy_model_eigenpairs(eps in 1e-8f64..1e-2, v in -2.0f64..2.0, a in -2.0f64..2.0,
                            d in -2.0f64..2.0, dp in -2.0f64..2.0) {
        let r = toy_double_root(eps, v, a, d, dp).unwrap();
        for (z, x) in r.eigenvalues.iter().zip(&r.eigenvectors) {
            let m = r.matrix.map(|e| num_complex::Complex64::new(e, 0.0));
            let xv = nalgebra::DVector::from_column_slice(x);
            let res = (&m * &xv - &xv * *z).camax();
            prop_assert!(res < 1e-12 * (1.0 + r.matrix.amax()));
        }
        let hyper = r.classification == Hyperbolicity::Hyperbolic;
        if (a * d).abs() > 1e-6 {
            prop_assert_eq!(hyper, r.predicted_hyperbolic);
            if let Some(e) = r.expansion_residual {
                let s = (eps * d * a).sqrt();
                prop_assert!(e <= 2.0 * eps * d.abs() * dp.abs() / s.max(1e-300) + 1e-12);
            }
        }
    }
}

#[test]
fn toy_model_degenerate_top_entry() {
    let r = toy_double_root(1e-3, 0.5, 0.0, 1.0, 1.0).unwrap();
    assert_eq!(r.classification, Hyperbolicity::Hyperbolic);
    assert!(r.predicted_hyperbolic);
    let r = toy_double_root(1e-3, 0.5, 0.0, 1.0, -1.0).unwrap();
    assert_eq!(r.classification, Hyperbolicity::Elliptic);
    assert!(!r.predicted_hyperbolic);
    let r = toy_double_root(1e-3, 0.5, 1.0, 0.0, 0.0).unwrap();
    assert_eq!(r.classification, Hyperbolicity::WeaklyHyperbolic);
    let _ = DMatrix::<f64>::zeros(1, 1);
}
