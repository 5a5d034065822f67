//! The `(mu, c, lambda) <-> (k, alpha, M)` change of variables, the Hessian
//! of the averaged Hamiltonian, the Whitham matrix and its spectrum, and
//! the exact averaged identities used as diagnostics.

use crate::action::{self, ActionJet, FdConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, EigTol, Hyperbolicity, Spectrum};
use crate::model::{self, ModelSpec, WaveParams};
use crate::profiles;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModVars {
    pub k: f64,
    pub alpha: f64,
    pub m: Vec<f64>,
}

impl ModVars {
    pub fn as_vec(&self) -> Vec<f64> {
        let mut v = vec![self.k, self.alpha];
        v.extend_from_slice(&self.m);
        v
    }

    pub fn from_slice(x: &[f64]) -> Self {
        ModVars { k: x[0], alpha: x[1], m: x[2..].to_vec() }
    }
}

/// `k = 1/Theta_mu`, `M = grad_lambda Theta / Theta_mu`,
/// `alpha = Theta_c - Theta_mu Q(M)`.
pub fn params_to_modvars(model: &ModelSpec, jet: &ActionJet) -> ModVars {
    modvars_from_grad(model, &jet.grad)
}

pub fn modvars_from_grad(model: &ModelSpec, g: &[f64]) -> ModVars {
    let k = 1.0 / g[0];
    let m: Vec<f64> = g[2..].iter().map(|x| x / g[0]).collect();
    let alpha = g[1] - g[0] * model::big_q(model, &m);
    ModVars { k, alpha, m }
}

/// The gradient of `Theta` a wave with modulation variables `mv` must have.
pub fn target_grad(model: &ModelSpec, mv: &ModVars) -> Vec<f64> {
    let mut g = vec![1.0 / mv.k, mv.alpha + model::big_q(model, &mv.m) / mv.k];
    g.extend(mv.m.iter().map(|x| x / mv.k));
    g
}

/// The coupling matrix `A(k, M)`.
pub fn coupling_matrix_a(model: &ModelSpec, k: f64, m: &[f64]) -> DMatrix<f64> {
    let n = model.n();
    let d = n + 2;
    let mut a = DMatrix::zeros(d, d);
    a[(0, 0)] = -1.0 / k;
    a[(1, 0)] = -model::big_q(model, m) / k;
    a[(1, 1)] = k;
    let gq = model::grad_q(model, m);
    for i in 0..n {
        a[(1, 2 + i)] = gq[i];
        a[(2 + i, 0)] = -m[i] / k;
        a[(2 + i, 2 + i)] = 1.0;
    }
    a
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonReport {
    pub params: WaveParams,
    pub iterations: usize,
    pub residual: f64,
    pub jacobian_condition: f64,
}

fn scaled_residual(target: &[f64], g: &[f64]) -> f64 {
    let s = target.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    target.iter().zip(g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / s
}

fn grad_at(model: &ModelSpec, p: &WaveParams, cfg: &FdConfig) -> Result<(Vec<f64>, profiles::OrbitBracket)> {
    let br = profiles::find_turning_points(model, p, cfg.window)?;
    let pi = profiles::period_integrals(model, p, &br, &cfg.quad)?;
    let mut g = vec![pi.xi, pi.int_q];
    g.extend_from_slice(&pi.int_u);
    Ok((g, br))
}

/// Newton on `grad Theta(p) = G(k, alpha, M)` with step halving.
pub fn modvars_to_params(
    model: &ModelSpec,
    target: &ModVars,
    guess: &WaveParams,
    cfg: &FdConfig,
) -> Result<NewtonReport> {
    if !(target.k > 0.0) {
        return Err(Error::InvalidModel("target wavenumber must be positive".into()));
    }
    let tg = target_grad(model, target);
    let mut p = guess.clone();
    let (mut g, mut br) = grad_at(model, &p, cfg).map_err(|_| Error::LeftBranch)?;
    let mut res = scaled_residual(&tg, &g);
    let fd = FdConfig { richardson: false, ..cfg.clone() };
    let tol = 1e-12;
    let mut last_hess: Option<DMatrix<f64>> = None;
    for it in 0..40 {
        if res <= tol {
            let hess = match last_hess {
                Some(h) => h,
                None => action::action_hessian(model, &p, &br, &fd)?.0,
            };
            let cond = jacobian_condition(model, &hess, target);
            return Ok(NewtonReport { params: p, iterations: it, residual: res, jacobian_condition: cond });
        }
        let (hess, ..) = action::action_hessian(model, &p, &br, &fd)?;
        let r = DVector::from_iterator(tg.len(), tg.iter().zip(&g).map(|(a, b)| a - b));
        let lu = hess.clone().lu();
        let dp = lu.solve(&r).ok_or(Error::SingularJacobian)?;
        if dp.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let mut t = 1.0;
        let mut accepted = false;
        let mut any_orbit = false;
        for _ in 0..30 {
            let trial: Vec<f64> = p.as_vec().iter().zip(dp.iter()).map(|(a, b)| a + t * b).collect();
            let tp = WaveParams::from_slice(&trial);
            if let Ok((tgr, tbr)) = grad_at(model, &tp, cfg) {
                any_orbit = true;
                let tres = scaled_residual(&tg, &tgr);
                if tres < res || tres <= tol {
                    p = tp;
                    g = tgr;
                    br = tbr;
                    res = tres;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        last_hess = Some(hess);
        if !accepted {
            return Err(if any_orbit { Error::NoConvergence(res) } else { Error::LeftBranch });
        }
    }
    Err(Error::NoConvergence(res))
}

/// Condition number of the chart Jacobian `(Hess Theta)^-1 A / k`.
pub fn jacobian_condition(model: &ModelSpec, hess_theta: &DMatrix<f64>, mv: &ModVars) -> f64 {
    let a = coupling_matrix_a(model, mv.k, &mv.m);
    match hess_theta.clone().try_inverse() {
        Some(inv) => {
            let j = inv * a / mv.k;
            let sv = j.svd(false, false).singular_values;
            let smax = sv.iter().cloned().fold(0.0, f64::max);
            let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

/// `Hess_{k, alpha, M} H = -(1/k) A^T (Hess Theta)^-1 A - c BB^-1`.
pub fn hessian_h(model: &ModelSpec, jet: &ActionJet, mv: &ModVars, c: f64) -> Result<DMatrix<f64>> {
    let inv = jet
        .hess
        .clone()
        .try_inverse()
        .ok_or(Error::SingularThetaHessian(jet.det))?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularThetaHessian(jet.det));
    }
    let a = coupling_matrix_a(model, mv.k, &mv.m);
    let h = -(a.transpose() * inv * &a) / mv.k - model::bb_inverse(model) * c;
    Ok((&h + h.transpose()) * 0.5)
}

/// `W = -BB Hess H` and the characteristic matrix of the `(mu, c, lambda)`
/// chart, `(1/k) (Hess Theta)^-1 S + c I`.
pub fn whitham_matrix(
    model: &ModelSpec,
    hess_h: &DMatrix<f64>,
    jet: &ActionJet,
    k: f64,
    c: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let sm = model::structural_matrices(model);
    let w = -(&sm.bb * hess_h);
    let inv = jet.hess.clone().try_inverse().ok_or(Error::SingularThetaHessian(jet.det))?;
    let d = w.nrows();
    let chart = inv * &sm.s / k + DMatrix::identity(d, d) * c;
    Ok((w, chart))
}

#[derive(Debug, Clone, Serialize)]
pub struct WhithamReport {
    #[serde(serialize_with = "crate::ser::matrix")]
    pub hess_h: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub whitham: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    #[serde(serialize_with = "crate::ser::complex_vecs")]
    pub eigenvectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub classification: Hyperbolicity,
    pub eigvec_condition: f64,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub char_in_params: DMatrix<f64>,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub char_eigenvalues: Vec<Complex64>,
    pub spectral_match_residual: f64,
    /// `Hess H BB Hess H` asymmetry relative to its norm.
    pub entropy_symmetry_residual: f64,
    pub hess_h_positive_definite: bool,
    pub negative_signature_hess_h: usize,
    pub negative_signature_hess_theta: usize,
    pub jacobian_condition: f64,
}

fn negative_count(m: &DMatrix<f64>) -> usize {
    let e = nalgebra::SymmetricEigen::new(m.clone());
    let s = e.eigenvalues.amax();
    e.eigenvalues.iter().filter(|&&x| x < -1e-12 * s).count()
}

/// Spectrum with the default tolerances.
pub fn spectrum(w: &DMatrix<f64>, tol: &EigTol) -> Result<Spectrum> {
    linalg::spectrum_and_classification(w, tol)
}

pub fn whitham_report(model: &ModelSpec, jet: &ActionJet, tol: &EigTol) -> Result<(ModVars, WhithamReport)> {
    let mv = params_to_modvars(model, jet);
    let c = jet.params.c;
    let hess_h = hessian_h(model, jet, &mv, c)?;
    let (w, chart) = whitham_matrix(model, &hess_h, jet, mv.k, c)?;
    let sp = linalg::spectrum_and_classification(&w, tol)?;
    let cp = linalg::poly_roots(&linalg::char_poly(&chart));
    let scale = w.amax().max(1.0);
    let matched = linalg::match_spectra(&sp.eigenvalues, &cp) / scale;
    let sm = model::structural_matrices(model);
    let ent = &hess_h * &sm.bb * &hess_h;
    let ent_res = (&ent - ent.transpose()).amax() / ent.amax().max(1e-300);
    let pd = hess_h.clone().cholesky().is_some();
    let mut char_eigs = cp;
    char_eigs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    let report = WhithamReport {
        negative_signature_hess_h: negative_count(&hess_h),
        negative_signature_hess_theta: jet.negative_signature,
        jacobian_condition: jacobian_condition(model, &jet.hess, &mv),
        hess_h,
        whitham: w,
        eigenvalues: sp.eigenvalues,
        eigenvectors: sp.eigenvectors,
        residuals: sp.residuals,
        classification: sp.classification,
        eigvec_condition: sp.eigvec_condition,
        char_in_params: chart,
        char_eigenvalues: char_eigs,
        spectral_match_residual: matched,
        entropy_symmetry_residual: ent_res,
        hess_h_positive_definite: pd,
    };
    Ok((mv, report))
}

/// `H` as a function of `(k, alpha, M)` through Newton inversion.
pub fn chart_h(model: &ModelSpec, mv: &ModVars, guess: &WaveParams, cfg: &FdConfig) -> Result<(f64, WaveParams)> {
    let nr = modvars_to_params(model, mv, guess, cfg)?;
    let br = profiles::find_turning_points(model, &nr.params, cfg.window)?;
    let st = profiles::averaged_state(model, &nr.params, &br, cfg.quad.order)?;
    Ok((st.mean_h, nr.params))
}

/// Gradient of `H(k, alpha, M)` by central differences through the chart,
/// with one Richardson level.
pub fn chart_grad_h(model: &ModelSpec, mv: &ModVars, guess: &WaveParams, cfg: &FdConfig, rel_step: f64) -> Result<Vec<f64>> {
    let x = mv.as_vec();
    let mut out = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let h = rel_step * x[j].abs().max(if j == 0 { x[0] } else { 1.0 });
        let diff = |h: f64| -> Result<f64> {
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += h;
            b[j] -= h;
            let (ha, _) = chart_h(model, &ModVars::from_slice(&a), guess, cfg)?;
            let (hb, _) = chart_h(model, &ModVars::from_slice(&b), guess, cfg)?;
            Ok((ha - hb) / (2.0 * h))
        };
        let d1 = diff(h)?;
        let d2 = diff(0.5 * h)?;
        out.push((4.0 * d2 - d1) / 3.0);
    }
    Ok(out)
}

/// Hessian of `H(k, alpha, M)` by central differences of the chart map.
pub fn chart_hess_h(model: &ModelSpec, mv: &ModVars, guess: &WaveParams, cfg: &FdConfig, rel_step: f64) -> Result<DMatrix<f64>> {
    let x = mv.as_vec();
    let d = x.len();
    let steps: Vec<f64> = (0..d).map(|j| rel_step * x[j].abs().max(if j == 0 { x[0] } else { 1.0 })).collect();
    let eval = |dx: &[(usize, f64)]| -> Result<f64> {
        let mut y = x.clone();
        for &(j, s) in dx {
            y[j] += s;
        }
        Ok(chart_h(model, &ModVars::from_slice(&y), guess, cfg)?.0)
    };
    let h0 = eval(&[])?;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        let hi = steps[i];
        let fp = eval(&[(i, hi)])?;
        let fm = eval(&[(i, -hi)])?;
        m[(i, i)] = (fp - 2.0 * h0 + fm) / (hi * hi);
        for j in (i + 1)..d {
            let hj = steps[j];
            let pp = eval(&[(i, hi), (j, hj)])?;
            let pm = eval(&[(i, hi), (j, -hj)])?;
            let mp = eval(&[(i, -hi), (j, hj)])?;
            let mm = eval(&[(i, -hi), (j, -hj)])?;
            let v = (pp - pm - mp + mm) / (4.0 * hi * hj);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// `d_k H - (Theta - alpha c)`, relative, finite differences.
    pub dk_h: f64,
    /// `d_alpha H + k c`, relative, finite differences.
    pub dalpha_h: f64,
    /// `<dH[U]> + c grad Q(M) + lambda`, relative, quadrature.
    pub dm_h: f64,
    /// `<U . dH[U]> - (M . <dH[U]> - 2 c k alpha)`, relative.
    pub u_dot_dh: f64,
    /// `<LH> - (k Theta - H)`, relative.
    pub lh: f64,
    /// `mu + c<Q> + lambda . M + H - <kappa v_x^2>`, relative.
    pub energy_flux: f64,
    /// `<dH . B dH>/2 - (<dH> . B <dH>/2 + c^2 k alpha)`, relative.
    pub quadratic_flux: f64,
    /// `H* - (<LH> + <U . dH>)` with `H*` from the chart gradient, relative.
    pub h_star: f64,
    /// The chart gradient used above.
    pub grad_h: Vec<f64>,
}

/// Residuals of the exact averaged identities.
pub fn averaged_identities(model: &ModelSpec, jet: &ActionJet, mv: &ModVars, cfg: &FdConfig) -> Result<IdentityReport> {
    let p = &jet.params;
    let c = p.c;
    let n = model.n();
    let st = &jet.state;
    // Pointwise dH through the profile equation: -(kappa v_x)_x + kappa' v_x^2 / 2
    // equals W' on the orbit, so d_v H = W' + f' + tau' g^2 / 2 and d_u H = tau g.
    let means = profiles::period_means(model, p, &jet.bracket, &cfg.quad, n + 3, |v, gap, out| {
        let w1 = model::potential_jet(model, v, p, 1)?[1];
        let f1 = model.f.jet(v, 1)[1];
        if model.is_system() {
            let g = model::velocity_jet(model, v, c, p.lambda2())?[0];
            let t = model.tau_jet(v, 1);
            let dv = w1 + f1 + 0.5 * t[1] * g * g;
            let du = t[0] * g;
            out[0] = dv;
            out[1] = du;
            out[2] = v * dv + g * du;
            out[3] = 2.0 * gap;
            out[4] = model.b * dv * du;
        } else {
            let dv = w1 + f1;
            out[0] = dv;
            out[1] = v * dv;
            out[2] = 2.0 * gap;
            out[3] = 0.5 * model.b * dv * dv;
        }
        Ok(())
    })?;
    let dh: Vec<f64> = means[..n].to_vec();
    let u_dh = means[n];
    let kvx2 = means[n + 1];
    let quad = means[n + 2];
    let gq = model::grad_q(model, &mv.m);
    let scale_m = dh.iter().chain(p.lambda.iter()).map(|x| x.abs()).fold(1e-300, f64::max);
    let dm_h = (0..n).map(|i| (dh[i] + c * gq[i] + p.lambda[i]).abs()).fold(0.0, f64::max) / scale_m;
    let m_dot_dh: f64 = mv.m.iter().zip(&dh).map(|(a, b)| a * b).sum();
    let rhs = m_dot_dh - 2.0 * c * mv.k * mv.alpha;
    let u_dot_dh = (u_dh - rhs).abs() / u_dh.abs().max(rhs.abs()).max(1e-300);
    let lh = (st.mean_lh - (st.k * jet.theta - st.mean_h)).abs() / st.mean_lh.abs().max(st.mean_h.abs()).max(1e-300);
    let lam_m: f64 = p.lambda.iter().zip(&mv.m).map(|(a, b)| a * b).sum();
    let ef_lhs = p.mu + c * st.mean_q + lam_m + st.mean_h;
    let energy_flux = (ef_lhs - kvx2).abs() / kvx2.abs().max(ef_lhs.abs()).max(1e-300);
    let dh_b_dh = if n == 2 { model.b * dh[0] * dh[1] } else { 0.5 * model.b * dh[0] * dh[0] };
    let qrhs = dh_b_dh + c * c * mv.k * mv.alpha;
    let quadratic_flux = (quad - qrhs).abs() / quad.abs().max(qrhs.abs()).max(1e-300);

    let grad_h = chart_grad_h(model, mv, p, cfg, 1e-4)?;
    let dk_ref = jet.theta - mv.alpha * c;
    let dk_h = (grad_h[0] - dk_ref).abs() / dk_ref.abs().max(1e-300);
    let da_ref = -mv.k * c;
    let dalpha_h = (grad_h[1] - da_ref).abs() / da_ref.abs().max(1e-300);
    let h_star = mv.k * grad_h[0] + mv.alpha * grad_h[1]
        + (0..n).map(|i| mv.m[i] * grad_h[2 + i]).sum::<f64>()
        - st.mean_h;
    let hs_ref = st.mean_lh + u_dh;
    let h_star_res = (h_star - hs_ref).abs() / hs_ref.abs().max(st.mean_h.abs()).max(1e-300);
    Ok(IdentityReport {
        dk_h,
        dalpha_h,
        dm_h,
        u_dot_dh,
        lh,
        energy_flux,
        quadratic_flux,
        h_star: h_star_res,
        grad_h,
    })
}
