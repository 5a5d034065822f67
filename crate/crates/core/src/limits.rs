//! Harmonic and soliton limit points, the frame vectors and their
//! cancellations, the explicit limiting Whitham matrices, and the 2x2 toy
//! model of double-root splitting.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::linalg::{self, EigTol, Hyperbolicity};
use crate::model::{self, ModelKind, ModelSpec, WaveParams};
use crate::profiles;
use crate::quad::{self, QuadConfig};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

const TWO_PI: f64 = 2.0 * PI;

/// Which root of the quadratic defining the harmonic phase velocity is
/// followed in the two-field case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitFrame {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub p: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub d: DMatrix<f64>,
    /// Zero by convention for one field.
    pub sigma: f64,
    pub w_ss: f64,
    pub zeta: f64,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub a_small: DMatrix<f64>,
    /// Named cancellation residuals.
    pub cancellations: Vec<(String, f64)>,
}

fn dot_s(si: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let av = DVector::from_column_slice(a);
    let bv = DVector::from_column_slice(b);
    av.dot(&(si * bv))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Frame vectors at the constant state carried by level `vi`.
pub fn limit_frame(model: &ModelSpec, vi: f64, c: f64, lambda2: f64) -> Result<LimitFrame> {
    let n = model.n();
    let d = n + 2;
    let b = model.b;
    let q = model::impulse_jet(model, vi, c, lambda2)?;
    let (v, w, z, t) = match model.kind {
        ModelKind::Scalar => (
            vec![1.0, q[0], vi],
            vec![0.0, q[1], 1.0],
            vec![0.0, q[2], 0.0],
            vec![0.0; 3],
        ),
        ModelKind::EulerKorteweg => {
            let g = model::velocity_jet(model, vi, c, lambda2)?;
            let st = model.tau_jet(vi, 0)[0].sqrt();
            (
                vec![1.0, q[0], vi, g[0]],
                vec![0.0, q[1], 1.0, g[1]],
                vec![0.0, q[2], 0.0, g[2]],
                vec![0.0, vi / (b * st), 0.0, 1.0 / st],
            )
        }
    };
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    let mut f = vec![0.0; d];
    f[1] = -1.0;
    let si = model::s_inverse(model);
    let s = model::structural_matrices(model).s;
    let cols: Vec<&Vec<f64>> = if n == 1 { vec![&f, &v, &w] } else { vec![&f, &v, &t, &w] };
    let mut raw = DMatrix::zeros(d, d);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..d {
            raw[(i, j)] = col[i];
        }
    }
    let p = &si * raw;
    let dm = p.transpose() * &s * &p;
    let sigma = dot_s(&si, &t, &w);
    let w_ss = dot_s(&si, &w, &w);
    let zeta = dot_s(&si, &z, &w);
    let a_small = if n == 1 {
        DMatrix::from_element(1, 1, 1.0)
    } else {
        let tau = model.tau_jet(vi, 0)[0];
        let g1 = model::velocity_jet(model, vi, c, lambda2)?[1];
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / tau.sqrt(), 1.0, g1])
    };
    let es = si.clone() * DVector::from_column_slice(&f);
    let cancellations = vec![
        ("V.S^-1 V".to_string(), dot_s(&si, &v, &v)),
        ("V.S^-1 W".to_string(), dot_s(&si, &v, &w)),
        ("V.S^-1 T".to_string(), dot_s(&si, &v, &t)),
        ("V.S^-1 Z + W.S^-1 W".to_string(), dot_s(&si, &v, &z) + w_ss),
        ("T.S^-1 T".to_string(), dot_s(&si, &t, &t)),
        ("T.S^-1 Z".to_string(), dot_s(&si, &t, &z)),
        ("E.V - 1".to_string(), dot(&e, &v) - 1.0),
        ("E.W".to_string(), dot(&e, &w)),
        ("E.Z".to_string(), dot(&e, &z)),
        ("E.T".to_string(), dot(&e, &t)),
        ("S^-1 F - E".to_string(), (es - DVector::from_column_slice(&e)).amax()),
    ];
    Ok(LimitFrame { v, w, z, t, e, f, p, d: dm, sigma, w_ss, zeta, a_small, cancellations })
}

impl LimitFrame {
    pub fn max_cancellation(&self) -> f64 {
        self.cancellations.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max)
    }

    /// The closed form of `P^T S P`.
    pub fn displayed_d(&self, b: f64) -> DMatrix<f64> {
        let d = self.v.len();
        let mut m = DMatrix::zeros(d, d);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        if d == 3 {
            m[(2, 2)] = 1.0 / b;
        } else {
            m[(2, 3)] = self.sigma;
            m[(3, 2)] = self.sigma;
            m[(3, 3)] = self.w_ss;
        }
        m
    }

    /// `P^T (a V V + b (V W + W V) + m W W + c (V Z + Z V) + n T T) P`.
    pub fn projected(&self, a: f64, bq: f64, cq: f64, m: f64, nq: f64) -> DMatrix<f64> {
        let d = self.v.len();
        let col = |x: &[f64]| DVector::from_column_slice(x);
        let (v, w, z, t) = (col(&self.v), col(&self.w), col(&self.z), col(&self.t));
        let inner = &v * v.transpose() * a
            + (&v * w.transpose() + &w * v.transpose()) * bq
            + &w * w.transpose() * m
            + (&v * z.transpose() + &z * v.transpose()) * cq
            + &t * t.transpose() * nq;
        let out = self.p.transpose() * inner * &self.p;
        debug_assert_eq!(out.nrows(), d);
        out
    }

    /// The displayed arrow form of [`LimitFrame::projected`].
    pub fn projected_displayed(&self, b: f64, a: f64, bq: f64, cq: f64, m: f64, nq: f64) -> DMatrix<f64> {
        let d = self.v.len();
        let mut r = DMatrix::zeros(d, d);
        if d == 3 {
            r[(0, 0)] = a;
            r[(0, 1)] = -cq / b;
            r[(1, 0)] = -cq / b;
            r[(0, 2)] = bq / b;
            r[(2, 0)] = bq / b;
            r[(2, 2)] = m / (b * b);
        } else {
            let (s, w, z) = (self.sigma, self.w_ss, self.zeta);
            r[(0, 0)] = a;
            r[(0, 1)] = -cq * w;
            r[(1, 0)] = -cq * w;
            r[(0, 2)] = bq * s;
            r[(2, 0)] = bq * s;
            r[(0, 3)] = bq * w + cq * z;
            r[(3, 0)] = bq * w + cq * z;
            r[(2, 2)] = m * s * s;
            r[(2, 3)] = m * s * w;
            r[(3, 2)] = m * s * w;
            r[(3, 3)] = m * w * w + nq * s * s;
        }
        r
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicPoint {
    pub v0: f64,
    pub mu0: f64,
    pub c: f64,
    pub lambda: Vec<f64>,
    pub u0: Vec<f64>,
    pub k0: f64,
    pub xi0: f64,
    pub c0: f64,
    pub branch: Branch,
    pub vg: f64,
    pub dk_c0: f64,
    pub dkk_c0: f64,
    pub grad_u_c0: Vec<f64>,
    pub a0: f64,
    pub b0: f64,
    pub w0: f64,
    /// `(W'', W''', W'''')` at `v0`.
    pub w_derivs: [f64; 3],
    /// The order-`delta^2` coefficient of the expansions, from the limiting
    /// `(k, alpha)` Hessian entry: `1 / (w0 (c0 - vg))`.
    pub c_coef: f64,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub hess_h_u: DMatrix<f64>,
    pub dispersionless_hyperbolic: bool,
    pub frame: LimitFrame,
}

fn clip(model: &ModelSpec, window: (f64, f64)) -> Result<(f64, f64)> {
    profiles::clip_window(model, window)
}

/// Critical points of `W` in the window with the sign of `W''`.
fn classified_critical_points(model: &ModelSpec, p: &WaveParams, window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (a, b) = clip(model, window)?;
    let crit = profiles::critical_points(model, p, a, b, profiles::GRID)?;
    crit.into_iter()
        .map(|v| Ok((v, model::potential_jet(model, v, p, 2)?[2])))
        .collect()
}

/// Harmonic phase velocity on the state `(v, u)` at wavenumber `k`, with
/// `(d_k c0, d_kk c0, grad_U c0)`.
pub fn harmonic_phase_velocity(
    model: &ModelSpec,
    u: &[f64],
    k: f64,
    branch: Branch,
) -> Result<(f64, f64, f64, Vec<f64>)> {
    let v = u[0];
    let b = model.b;
    let f = model.f.jet(v, 3);
    let kap = model.kappa_jet(v, 1);
    let w = TWO_PI * TWO_PI;
    match model.kind {
        ModelKind::Scalar => {
            let c0 = -b * (f[2] + w * k * k * kap[0]);
            let dk = -2.0 * b * w * k * kap[0];
            let dkk = -2.0 * b * w * kap[0];
            let dv = -b * (f[3] + w * k * k * kap[1]);
            Ok((c0, dk, dkk, vec![dv]))
        }
        ModelKind::EulerKorteweg => {
            let t = model.tau_jet(v, 3);
            let uu = u[1];
            let inner = w * k * k * kap[0] + f[2] + 0.5 * t[2] * uu * uu;
            let rb = b * b * t[0] * inner;
            if !(rb > 0.0) {
                let kmin = (-(f[2] + 0.5 * t[2] * uu * uu) / (w * kap[0])).max(0.0).sqrt();
                return Err(Error::InadmissibleWavenumber { k0: k, kmin });
            }
            let s = branch.sign();
            let sq = rb.sqrt();
            let c0 = -b * t[1] * uu + s * sq;
            let g = b * b * t[0] * w * k * kap[0];
            let dk = s * g / sq;
            let dkk = s * (b * b * t[0] * w * kap[0]) / sq - s * g * g / (rb * sq);
            let drv = b * b * (t[1] * inner + t[0] * (w * k * k * kap[1] + f[3] + 0.5 * t[3] * uu * uu));
            let dru = b * b * t[0] * t[2] * uu;
            let dv = -b * t[2] * uu + s * drv / (2.0 * sq);
            let du = -b * t[1] + s * dru / (2.0 * sq);
            Ok((c0, dk, dkk, vec![dv, du]))
        }
    }
}

/// `a0` from the closed form in `kappa` and the derivatives of `W`.
pub fn a0_closed_form(kap: &[f64], w2: f64, w3: f64, w4: f64) -> f64 {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    let r3 = w3 / w2;
    (0.25 * (krr - 0.5 * kr * kr) - 0.25 * kr * r3 - 0.125 * w4 / w2 + 5.0 / 24.0 * r3 * r3) / w2
}

/// `b0 = (kappa'/kappa - W'''/W'') / (2 W'')`.
pub fn b0_closed_form(kap: &[f64], w2: f64, w3: f64) -> f64 {
    0.5 / w2 * (kap[1] / kap[0] - w3 / w2)
}

/// The unique well minimum of `W(.; c, lambda)` in the window.
pub fn harmonic_point(
    model: &ModelSpec,
    c: f64,
    lambda: &[f64],
    window: (f64, f64),
    branch: Option<Branch>,
) -> Result<HarmonicPoint> {
    let p0 = WaveParams::new(0.0, c, lambda);
    let crit = classified_critical_points(model, &p0, window)?;
    let minima: Vec<f64> = crit.iter().filter(|(_, w2)| *w2 > 0.0).map(|(v, _)| *v).collect();
    let v0 = match minima.len() {
        0 => {
            if let Some((v, w2)) = crit.first() {
                if w2.abs() <= 1e-10 {
                    return Err(Error::DegenerateWell(*v));
                }
            }
            return Err(Error::NoWellMinimum);
        }
        1 => minima[0],
        _ => return Err(Error::MultipleWells),
    };
    harmonic_point_at(model, c, lambda, v0, branch)
}

/// Harmonic point data at a known well bottom `v0`.
pub fn harmonic_point_at(
    model: &ModelSpec,
    c: f64,
    lambda: &[f64],
    v0: f64,
    branch: Option<Branch>,
) -> Result<HarmonicPoint> {
    let p0 = WaveParams::new(0.0, c, lambda);
    let wj = model::potential_jet(model, v0, &p0, 4)?;
    let (w2, w3, w4) = (wj[2], wj[3], wj[4]);
    let scale = wj[3].abs().max(wj[4].abs()).max(1.0);
    if w2 <= 1e-10 * scale {
        return Err(Error::DegenerateWell(w2));
    }
    let kap = model.kappa_jet(v0, 2);
    let k0 = (w2 / kap[0]).sqrt() / TWO_PI;
    let u0 = model::state_at(model, v0, c, p0.lambda2())?;
    let (branch, (c0, dk, dkk, grad)) = match (model.kind, branch) {
        (ModelKind::Scalar, b) => (b.unwrap_or(Branch::Plus), harmonic_phase_velocity(model, &u0, k0, Branch::Plus)?),
        (_, Some(b)) => (b, harmonic_phase_velocity(model, &u0, k0, b)?),
        (_, None) => {
            let plus = harmonic_phase_velocity(model, &u0, k0, Branch::Plus)?;
            let minus = harmonic_phase_velocity(model, &u0, k0, Branch::Minus)?;
            if (plus.0 - c).abs() <= (minus.0 - c).abs() {
                (Branch::Plus, plus)
            } else {
                (Branch::Minus, minus)
            }
        }
    };
    let vg = c0 + k0 * dk;
    let frame = limit_frame(model, v0, c, p0.lambda2())?;
    let w0 = frame.w_ss;
    let hess = model::hess_h_u(model, &u0)?;
    let dispersionless_hyperbolic = match model.kind {
        ModelKind::Scalar => true,
        ModelKind::EulerKorteweg => {
            let f2 = model.f.jet(v0, 2)[2];
            let t2 = model.tau_jet(v0, 2)[2];
            f2 + 0.5 * t2 * u0[1] * u0[1] > 0.0
        }
    };
    Ok(HarmonicPoint {
        v0,
        mu0: wj[0],
        c,
        lambda: lambda.to_vec(),
        u0,
        k0,
        xi0: 1.0 / k0,
        c0,
        branch,
        vg,
        dk_c0: dk,
        dkk_c0: dkk,
        grad_u_c0: grad,
        a0: a0_closed_form(&kap, w2, w3, w4),
        b0: b0_closed_form(&kap, w2, w3),
        w0,
        w_derivs: [w2, w3, w4],
        c_coef: 1.0 / (w0 * (c0 - vg)),
        hess_h_u: hess,
        dispersionless_hyperbolic,
        frame,
    })
}

impl HarmonicPoint {
    pub fn params(&self) -> WaveParams {
        WaveParams::new(self.mu0, self.c, &self.lambda)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicLimit {
    #[serde(serialize_with = "crate::ser::matrix")]
    pub hess_h: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub whitham: DMatrix<f64>,
    pub d_alpha2_h: f64,
    pub a_tilde0: f64,
    /// `d^3_{kk alpha} H = -2 d_k c0 - k0 d_kk c0`.
    pub d_kka_h: f64,
    /// `d^2_{k alpha} grad_M H = -grad_U c0 - k0 d_k grad_U c0`, when the
    /// mixed derivative is available in closed form (one field).
    #[serde(serialize_with = "crate::ser::matrix")]
    pub p_tilde: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub block: DMatrix<f64>,
    pub block_residual: f64,
    /// `rank(W - vg I)`.
    pub jordan_rank: usize,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    pub classification: Hyperbolicity,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub dispersionless_eigenvalues: Vec<Complex64>,
}

fn inv(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or(Error::SingularJacobian)
}

fn block_expected(d: usize, z: f64, off: f64, tail: &DMatrix<f64>, lower: bool) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    m[(0, 0)] = z;
    m[(1, 1)] = z;
    if lower {
        m[(1, 0)] = off;
    } else {
        m[(0, 1)] = off;
    }
    let n = d - 2;
    for i in 0..n {
        for j in 0..n {
            m[(2 + i, 2 + j)] = tail[(i, j)];
        }
    }
    m
}

/// Resonance test: `z` within `tol` (relative) of the spectrum of `-B Hess H`.
fn resonant(model: &ModelSpec, hess: &DMatrix<f64>, z: f64) -> bool {
    let sm = model::structural_matrices(model);
    let shifted = hess + &sm.binv * z;
    let det = shifted.determinant();
    let scale = hess.amax().max(z.abs() * sm.binv.amax()).max(1e-300);
    det.abs() <= 1e-12 * scale.powi(hess.nrows() as i32)
}

/// The limiting Hessian and Whitham matrix at `(k0, 0, U0)`.
pub fn limiting_whitham_harmonic(model: &ModelSpec, hp: &HarmonicPoint, tol: &EigTol) -> Result<HarmonicLimit> {
    let n = model.n();
    let d = n + 2;
    let sm = model::structural_matrices(model);
    let k0 = hp.k0;
    let hess = &hp.hess_h_u;
    let gc = DVector::from_column_slice(&hp.grad_u_c0);
    if resonant(model, hess, hp.vg) {
        return Err(Error::GroupVelocityResonance);
    }
    let m_c0 = inv(&(hess + &sm.binv * hp.c0))?;
    let m_vg = inv(&(hess + &sm.binv * hp.vg))?;
    let q_c0 = gc.dot(&(&m_c0 * &gc));
    let q_vg = gc.dot(&(&m_vg * &gc));
    let d_alpha2_h = k0.powi(4) * hp.dk_c0 * hp.dk_c0 * hp.a0 + k0 * k0 * q_c0;
    let a_tilde0 = -d_alpha2_h + k0 * k0 * q_vg;
    let mut h = DMatrix::zeros(d, d);
    h[(0, 1)] = -hp.vg;
    h[(1, 0)] = -hp.vg;
    h[(1, 1)] = d_alpha2_h;
    for i in 0..n {
        h[(1, 2 + i)] = -k0 * gc[i];
        h[(2 + i, 1)] = -k0 * gc[i];
        for j in 0..n {
            h[(2 + i, 2 + j)] = hess[(i, j)];
        }
    }
    let w = -(&sm.bb * &h);
    let mut pt = DMatrix::identity(d, d);
    let row = -(gc.transpose() * &m_vg * &sm.binv) * k0;
    let col = &m_vg * &gc * k0;
    for i in 0..n {
        pt[(0, 2 + i)] = row[i];
        pt[(2 + i, 1)] = col[i];
    }
    let block = inv(&pt)? * &w * &pt;
    let tail = -(&sm.b * hess);
    let expected = block_expected(d, hp.vg, a_tilde0, &tail, false);
    let block_residual = (&block - &expected).amax() / w.amax().max(1.0);
    let jordan_rank = linalg::rank(&(&w - DMatrix::identity(d, d) * hp.vg), 1e-10);
    let sp = linalg::spectrum_and_classification(&w, tol)?;
    let disp = linalg::poly_roots(&linalg::char_poly(&tail));
    Ok(HarmonicLimit {
        hess_h: h,
        whitham: w,
        d_alpha2_h,
        a_tilde0,
        d_kka_h: -2.0 * hp.dk_c0 - k0 * hp.dkk_c0,
        p_tilde: pt,
        block,
        block_residual,
        jordan_rank,
        eigenvalues: sp.eigenvalues,
        classification: sp.classification,
        dispersionless_eigenvalues: disp,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonPoint {
    pub vs: f64,
    /// The outer turning level of the homoclinic orbit.
    pub v_outer: f64,
    pub mus: f64,
    pub cs: f64,
    pub us: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `2 pi sqrt(-kappa(vs) / W''(vs))`.
    pub xis: f64,
    pub w2: f64,
    pub boussinesq: f64,
    pub dc_m: f64,
    pub dc2_m: f64,
    pub grad_u_m: Vec<f64>,
    /// `d_c M` by central differences of `M`, as a cross-check.
    pub dc_m_fd: f64,
    pub quad_error: f64,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub hess_h_u: DMatrix<f64>,
    pub frame: LimitFrame,
}

impl SolitonPoint {
    pub fn params(&self) -> WaveParams {
        WaveParams::new(self.mus, self.cs, &self.lambdas)
    }
}

/// `lambda_s = -grad_U (H + c Q)(U_s, 0)` and `mu_s`.
pub fn soliton_parameters(model: &ModelSpec, c: f64, us: &[f64]) -> Result<(Vec<f64>, f64)> {
    let gh = model::grad_h_u(model, us)?;
    let gq = model::grad_q(model, us);
    let grad: Vec<f64> = gh.iter().zip(&gq).map(|(h, q)| h + c * q).collect();
    let lam: Vec<f64> = grad.iter().map(|x| -x).collect();
    let hq = model::h_u(model, us)? + c * model::big_q(model, us);
    let mu = -hq + dot(&grad, us);
    Ok((lam, mu))
}

struct Homoclinic<'a> {
    model: &'a ModelSpec,
    p: WaveParams,
    vs: f64,
    l: f64,
    ws_dd: Dd,
    w1_outer: f64,
}

impl<'a> Homoclinic<'a> {
    /// `(v, gap, |dv/dtheta|)` on `v = vs + L sin^2 theta`.
    fn point(&self, th: f64) -> Result<(f64, f64, f64)> {
        let (s, co) = th.sin_cos();
        let s2 = s * s;
        let v = self.vs + self.l * s2;
        let dv = 2.0 * self.l.abs() * s * co;
        let gap = if co * co < 1e-8 {
            // Linear model at the outer simple root.
            self.w1_outer.abs() * self.l.abs() * co * co
        } else {
            let x = Dd::new(self.vs) + Dd::new(self.l) * Dd::new(s2);
            (self.ws_dd - model::potential_dd_at(self.model, x, &self.p)?).to_f64()
        };
        Ok((v, gap.max(0.0), dv))
    }
}

/// `(M, d_c M, quadrature error)` for the solitary wave of speed `c`
/// homoclinic to `us`.
fn boussinesq_integrals(
    model: &ModelSpec,
    c: f64,
    us: &[f64],
    window: (f64, f64),
    cfg: &QuadConfig,
) -> Result<(f64, f64, f64, f64, f64)> {
    let (lam, mu) = soliton_parameters(model, c, us)?;
    let p = WaveParams::new(mu, c, &lam);
    let vs = us[0];
    let wj = model::potential_jet(model, vs, &p, 2)?;
    if !(wj[2] < 0.0) {
        return Err(Error::NoSaddle);
    }
    let v_outer = outer_level(model, &p, vs, window)?;
    let w1_outer = model::potential_jet(model, v_outer, &p, 1)?[1];
    let h = Homoclinic { model, p: p.clone(), vs, l: v_outer - vs, ws_dd: model::potential_dd(model, vs, &p)?, w1_outer };
    let qs = model::big_q(model, us);
    let gqs = model::grad_q(model, us);
    let lam2 = p.lambda2();
    let mut breaks = vec![0.0];
    let mut th = 1e-4;
    while th < 0.5 {
        breaks.push(th);
        th *= 4.0;
    }
    breaks.push(0.5 * FRAC_PI_2);
    breaks.push(FRAC_PI_2);
    let res = quad::integrate_adaptive(
        |t, out| {
            let (v, gap, dv) = h.point(t)?;
            let kappa = model.kappa.eval(v);
            let u = model::state_at(model, v, c, lam2)?;
            let dq = model::big_q(model, &u) - qs - dot(&gqs, &u.iter().zip(us).map(|(a, b)| a - b).collect::<Vec<_>>());
            out[0] = 2.0 * (2.0 * kappa * gap).sqrt() * dv;
            out[1] = if gap > 0.0 { 2.0 * dq * (kappa / (2.0 * gap)).sqrt() * dv } else { 0.0 };
            Ok(())
        },
        &breaks,
        2,
        cfg,
    )?;
    if res.value.iter().any(|x| !x.is_finite()) {
        return Err(Error::TailDivergence("non-finite homoclinic integral".into()));
    }
    let err = res.error.iter().cloned().fold(0.0, f64::max);
    Ok((res.value[0], res.value[1], err, v_outer, wj[2]))
}

/// The turning level across the well adjacent to the saddle `vs`.
fn outer_level(model: &ModelSpec, p: &WaveParams, vs: f64, window: (f64, f64)) -> Result<f64> {
    let (a, b) = clip(model, window)?;
    let n = profiles::GRID;
    let ws = model::potential_dd(model, vs, p)?;
    let gap = |v: f64| -> Result<f64> { Ok((ws - model::potential_dd(model, v, p)?).to_f64()) };
    let mut found = Vec::new();
    for dir in [-1.0f64, 1.0] {
        let end = if dir > 0.0 { b } else { a };
        if (end - vs) * dir <= 0.0 {
            continue;
        }
        let step = (end - vs) / n as f64;
        let mut prev = vs + step;
        // Skip the immediate neighbourhood where the gap is second order.
        if gap(prev)? <= 0.0 {
            continue;
        }
        for i in 2..=n {
            let x = vs + step * i as f64;
            if gap(x)? <= 0.0 {
                let (mut lo, mut hi) = (prev, x);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if m == lo || m == hi {
                        break;
                    }
                    if gap(m)? > 0.0 {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                found.push(0.5 * (lo + hi));
                break;
            }
            prev = x;
        }
    }
    match found.len() {
        0 => Err(Error::NoPeriodicOrbit("no well adjacent to the saddle in the window".into())),
        1 => Ok(found[0]),
        _ => Err(Error::MultipleWells),
    }
}

/// Solitary-wave data for speed `c` and endstate `us`.
pub fn soliton_point(model: &ModelSpec, c: f64, us: &[f64], window: (f64, f64), cfg: &QuadConfig) -> Result<SolitonPoint> {
    let n = model.n();
    let (lam, mu) = soliton_parameters(model, c, us)?;
    let (m0, dcm, err, v_outer, w2) = boussinesq_integrals(model, c, us, window, cfg)?;
    let kap = model.kappa.eval(us[0]);
    let xis = TWO_PI * (-kap / w2).sqrt();
    let hc = 1e-3 * c.abs().max(1.0);
    let mc = |dc: f64| boussinesq_integrals(model, c + dc, us, window, cfg);
    let (mp, dp, ..) = mc(hc)?;
    let (mm, dm, ..) = mc(-hc)?;
    let (mp2, dp2, ..) = mc(0.5 * hc)?;
    let (mm2, dm2, ..) = mc(-0.5 * hc)?;
    let rich = |a1: f64, a2: f64| (4.0 * a2 - a1) / 3.0;
    let dc_m_fd = rich((mp - mm) / (2.0 * hc), (mp2 - mm2) / hc);
    let dc2_m = rich((dp - dm) / (2.0 * hc), (dp2 - dm2) / hc);
    let mut grad_u_m = Vec::with_capacity(n);
    for i in 0..n {
        let hu = 1e-3 * us[i].abs().max(1.0);
        let at = |du: f64| -> Result<f64> {
            let mut u = us.to_vec();
            u[i] += du;
            Ok(boussinesq_integrals(model, c, &u, window, cfg)?.0)
        };
        let d1 = (at(hu)? - at(-hu)?) / (2.0 * hu);
        let d2 = (at(0.5 * hu)? - at(-0.5 * hu)?) / hu;
        grad_u_m.push(rich(d1, d2));
    }
    let frame = limit_frame(model, us[0], c, if n == 2 { lam[1] } else { 0.0 })?;
    Ok(SolitonPoint {
        vs: us[0],
        v_outer,
        mus: mu,
        cs: c,
        us: us.to_vec(),
        lambdas: lam,
        xis,
        w2,
        boussinesq: m0,
        dc_m: dcm,
        dc2_m,
        grad_u_m,
        dc_m_fd,
        quad_error: err,
        hess_h_u: model::hess_h_u(model, us)?,
        frame,
    })
}

/// Soliton point from `(c, lambda)`: the unique local maximum of `W` in
/// the window adjacent to a well.
pub fn soliton_point_from_lambda(
    model: &ModelSpec,
    c: f64,
    lambda: &[f64],
    window: (f64, f64),
    cfg: &QuadConfig,
) -> Result<SolitonPoint> {
    let p0 = WaveParams::new(0.0, c, lambda);
    let crit = classified_critical_points(model, &p0, window)?;
    let maxima: Vec<f64> = crit.iter().filter(|(_, w2)| *w2 < 0.0).map(|(v, _)| *v).collect();
    let vs = match maxima.len() {
        0 => return Err(Error::NoSaddle),
        1 => maxima[0],
        _ => return Err(Error::MultipleWells),
    };
    let us = model::state_at(model, vs, c, p0.lambda2())?;
    soliton_point(model, c, &us, window, cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonLimit {
    #[serde(serialize_with = "crate::ser::matrix")]
    pub hess_h: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub whitham: DMatrix<f64>,
    pub dk2_h: f64,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub p_tilde: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub block: DMatrix<f64>,
    pub block_residual: f64,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    pub classification: Hyperbolicity,
    /// `I_U = -(Hess H + c_s B^-1)^-1 grad_U M`, the soliton excess
    /// `int (U - U_s) dxi`.
    pub excess: Vec<f64>,
    /// `(1, -Q(I_U), I_U)`, normalized: the common limit of the two
    /// eigenvectors splitting from `c_s`.
    pub pair_eigenvector: Vec<f64>,
}

/// The limiting Hessian and Whitham matrix at `(0, d_c M, U_s)`.
pub fn limiting_whitham_soliton(model: &ModelSpec, sp: &SolitonPoint, tol: &EigTol) -> Result<SolitonLimit> {
    let n = model.n();
    let d = n + 2;
    let sm = model::structural_matrices(model);
    let hess = &sp.hess_h_u;
    if resonant(model, hess, sp.cs) {
        return Err(Error::SpeedResonance);
    }
    let gm = DVector::from_column_slice(&sp.grad_u_m);
    let m_cs = inv(&(hess + &sm.binv * sp.cs))?;
    let dk2_h = gm.dot(&(&m_cs * &gm));
    let mut h = DMatrix::zeros(d, d);
    h[(0, 0)] = dk2_h;
    h[(0, 1)] = -sp.cs;
    h[(1, 0)] = -sp.cs;
    for i in 0..n {
        h[(0, 2 + i)] = gm[i];
        h[(2 + i, 0)] = gm[i];
        for j in 0..n {
            h[(2 + i, 2 + j)] = hess[(i, j)];
        }
    }
    let w = -(&sm.bb * &h);
    let mut pt = DMatrix::identity(d, d);
    let row = gm.transpose() * &m_cs * &sm.binv;
    let col = -(&m_cs * &gm);
    for i in 0..n {
        pt[(1, 2 + i)] = row[i];
        pt[(2 + i, 0)] = col[i];
    }
    let block = inv(&pt)? * &w * &pt;
    let tail = -(&sm.b * hess);
    let expected = block_expected(d, sp.cs, 0.0, &tail, true);
    let block_residual = (&block - &expected).amax() / w.amax().max(1.0);
    let sp_w = linalg::spectrum_and_classification(&w, tol)?;
    let excess: Vec<f64> = col.iter().cloned().collect();
    let mut pv = vec![1.0, -model::big_q(model, &excess)];
    pv.extend_from_slice(&excess);
    let nrm = pv.iter().map(|x| x * x).sum::<f64>().sqrt();
    let pair_eigenvector = pv.iter().map(|x| x / nrm).collect();
    Ok(SolitonLimit {
        hess_h: h,
        whitham: w,
        dk2_h,
        p_tilde: pt,
        block,
        block_residual,
        eigenvalues: sp_w.eigenvalues,
        classification: sp_w.classification,
        excess,
        pair_eigenvector,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ToyReport {
    #[serde(serialize_with = "crate::ser::matrix")]
    pub matrix: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    #[serde(serialize_with = "crate::ser::complex_vecs")]
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// `max |z - (v +- sqrt(eps delta a))|` when `delta a > 0`.
    pub expansion_residual: Option<f64>,
    pub classification: Hyperbolicity,
    /// Small-`eps` hyperbolicity predicted by the case analysis.
    pub predicted_hyperbolic: bool,
}

/// Exact eigenpairs of `[[v, a + eps delta'], [eps delta, v]]`.
pub fn toy_double_root(eps: f64, v: f64, a: f64, delta: f64, delta_p: f64) -> Result<ToyReport> {
    let top = a + eps * delta_p;
    let bot = eps * delta;
    let m = DMatrix::from_row_slice(2, 2, &[v, top, bot, v]);
    let disc = top * bot;
    let root = if disc >= 0.0 { Complex64::new(disc.sqrt(), 0.0) } else { Complex64::new(0.0, (-disc).sqrt()) };
    let z1 = Complex64::new(v, 0.0) - root;
    let z2 = Complex64::new(v, 0.0) + root;
    let vecs = if top != 0.0 {
        // (top, root) spans the kernel of M - (v + root).
        let mk = |r: Complex64| {
            let x = vec![Complex64::new(top, 0.0), r];
            let nrm = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
            let mut y: Vec<Complex64> = x.iter().map(|c| c / nrm).collect();
            let ph = y[0] / y[0].norm();
            for c in &mut y {
                *c /= ph;
            }
            y
        };
        vec![mk(-root), mk(root)]
    } else if bot != 0.0 {
        let u = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        vec![u.clone(), u]
    } else {
        vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ]
    };
    let expansion_residual = if delta * a > 0.0 {
        let s = (eps * delta * a).sqrt();
        Some((z2.re - (v + s)).abs().max((z1.re - (v - s)).abs()))
    } else {
        None
    };
    let classification = if disc > 0.0 {
        Hyperbolicity::Hyperbolic
    } else if disc < 0.0 {
        Hyperbolicity::Elliptic
    } else if top == 0.0 && bot == 0.0 {
        Hyperbolicity::Hyperbolic
    } else {
        Hyperbolicity::WeaklyHyperbolic
    };
    let predicted_hyperbolic = if a == 0.0 { delta * delta_p > 0.0 || (delta == 0.0 && delta_p == 0.0) } else { delta * a > 0.0 };
    Ok(ToyReport {
        matrix: m,
        eigenvalues: vec![z1, z2],
        eigenvectors: vecs,
        expansion_residual,
        classification,
        predicted_hyperbolic,
    })
}
