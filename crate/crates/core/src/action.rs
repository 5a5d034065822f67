//! The abbreviated action `Theta(mu, c, lambda)`, its gradient
//! `(Xi, int Q, int U)` and its Hessian by central differences of the
//! gradient.

use crate::error::{Error, Result};
use crate::model::{self, ModelSpec, WaveParams};
use crate::profiles::{self, OrbitBracket, PeriodIntegrals, WaveState};
use crate::quad::QuadConfig;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct FdConfig {
    /// Search window handed to the turning-point finder at stencil points.
    pub window: (f64, f64),
    pub quad: QuadConfig,
    pub richardson: bool,
    /// Optional per-parameter scales; derived from the orbit when absent.
    pub scales: Option<Vec<f64>>,
}

impl FdConfig {
    pub fn new(window: (f64, f64)) -> Self {
        FdConfig { window, quad: QuadConfig::default(), richardson: true, scales: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionJet {
    pub theta: f64,
    pub grad: Vec<f64>,
    #[serde(serialize_with = "crate::ser::matrix")]
    pub hess: DMatrix<f64>,
    pub params: WaveParams,
    pub fd_step: Vec<f64>,
    pub symmetry_residual: f64,
    /// Largest Richardson correction relative to the Hessian norm.
    pub fd_error: f64,
    pub quad_error: f64,
    pub det: f64,
    pub negative_signature: usize,
    pub bracket: OrbitBracket,
    pub state: WaveState,
    pub warnings: Vec<String>,
}

/// `Theta = 2 int_{v2}^{v3} sqrt(2 kappa (mu - W)) dv`.
pub fn action_value(model: &ModelSpec, params: &WaveParams, br: &OrbitBracket, quad_order: usize) -> Result<f64> {
    let cfg = QuadConfig { order: quad_order, ..QuadConfig::default() };
    Ok(profiles::period_integrals(model, params, br, &cfg)?.theta)
}

fn grad_of(pi: &PeriodIntegrals) -> Vec<f64> {
    let mut g = vec![pi.xi, pi.int_q];
    g.extend_from_slice(&pi.int_u);
    g
}

/// `(d_mu Theta, d_c Theta, grad_lambda Theta) = (Xi, int q, int v, int g)`.
pub fn action_gradient(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    quad_order: usize,
) -> Result<Vec<f64>> {
    let cfg = QuadConfig { order: quad_order, ..QuadConfig::default() };
    Ok(grad_of(&profiles::period_integrals(model, params, br, &cfg)?))
}

/// Sensitivities `(1, q, v, g)` of `mu - W(v*)` at a critical point `v*`.
fn gap_sensitivity(model: &ModelSpec, params: &WaveParams, v: f64) -> Result<Vec<f64>> {
    let q = model::impulse_q(model, v, params.c, params.lambda2())?;
    let mut s = vec![1.0, q, v];
    if model.is_system() {
        s.push(model::velocity_jet(model, v, params.c, params.lambda2())?[0]);
    }
    Ok(s)
}

/// FD steps per parameter direction.
pub fn fd_steps(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    quad_error: f64,
    scales: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let p = params.as_vec();
    let harmonic_gap = params.mu - br.well_min.1;
    let soliton_gap = br.saddle.map(|(_, ws)| ws - params.mu);
    let default_scales: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if i == 0 {
                match soliton_gap {
                    Some(sg) => (sg + harmonic_gap).abs().max(1e-300),
                    None => x.abs().max(1.0),
                }
            } else {
                x.abs().max(1.0)
            }
        })
        .collect();
    let scales = scales.map(|s| s.to_vec()).unwrap_or(default_scales);
    let rel = 1e-5f64.max(quad_error.max(0.0).cbrt());
    let mut h: Vec<f64> = scales.iter().map(|s| rel * s).collect();
    let sens_min = gap_sensitivity(model, params, br.well_min.0)?;
    let sens_sad = match br.saddle {
        Some((vs, _)) => Some(gap_sensitivity(model, params, vs)?),
        None => None,
    };
    for i in 0..h.len() {
        let d = sens_min[i].abs();
        if d > 0.0 {
            h[i] = h[i].min(0.05 * harmonic_gap / d);
        }
        if let (Some(sg), Some(s)) = (soliton_gap, &sens_sad) {
            let d = s[i].abs();
            if d > 0.0 {
                h[i] = h[i].min(0.05 * sg / d);
            }
        }
        // Also bound the difference of the two sensitivities, which moves
        // the saddle level relative to mu through c and lambda.
        if let (Some(sg), Some(s)) = (soliton_gap, &sens_sad) {
            let d = (s[i] - sens_min[i]).abs();
            if d > 0.0 && i > 0 {
                h[i] = h[i].min(0.05 * (sg + harmonic_gap) / d);
            }
        }
    }
    Ok(h)
}

fn stencil_grad(
    model: &ModelSpec,
    base: &WaveParams,
    br: &OrbitBracket,
    pi: &PeriodIntegrals,
    cfg: &FdConfig,
    j: usize,
    step: f64,
) -> Result<Vec<f64>> {
    let mut p = base.as_vec();
    p[j] += step;
    let params = WaveParams::from_slice(&p);
    let sbr = match profiles::find_turning_points(model, &params, cfg.window) {
        Ok(b) => b,
        Err(Error::DegenerateOrbit { .. }) | Err(Error::NoPeriodicOrbit(_)) | Err(Error::MultipleWells) => {
            return Err(Error::StencilLeftBranch(j))
        }
        Err(e) => return Err(e),
    };
    let l = br.v3 - br.v2;
    if (sbr.v2 - br.v2).abs() > 0.25 * l || (sbr.v3 - br.v3).abs() > 0.25 * l {
        return Err(Error::StencilLeftBranch(j));
    }
    Ok(grad_of(&profiles::period_integrals_on(model, &params, &sbr, &pi.plan)?))
}

fn central_column(
    model: &ModelSpec,
    base: &WaveParams,
    br: &OrbitBracket,
    pi: &PeriodIntegrals,
    cfg: &FdConfig,
    j: usize,
    h: f64,
) -> Result<Vec<f64>> {
    // Use the representable step so the divided difference is exact in h.
    let x = base.as_vec()[j];
    let hp = (x + h) - x;
    let hm = x - (x - h);
    let gp = stencil_grad(model, base, br, pi, cfg, j, hp)?;
    let gm = stencil_grad(model, base, br, pi, cfg, j, -hm)?;
    Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (hp + hm)).collect())
}

/// Hessian of `Theta` by central differences of the quadrature gradient on
/// a frozen panel plan. Returns `(hess, steps, symmetry_residual, fd_error)`.
pub fn action_hessian(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    cfg: &FdConfig,
) -> Result<(DMatrix<f64>, Vec<f64>, f64, f64)> {
    let pi = profiles::period_integrals(model, params, br, &cfg.quad)?;
    hessian_with(model, params, br, &pi, cfg)
}

fn hessian_with(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    pi: &PeriodIntegrals,
    cfg: &FdConfig,
) -> Result<(DMatrix<f64>, Vec<f64>, f64, f64)> {
    let d = params.as_vec().len();
    let steps = fd_steps(model, params, br, pi.rel_error, cfg.scales.as_deref())?;
    let mut h = DMatrix::zeros(d, d);
    let mut corr = DMatrix::zeros(d, d);
    for j in 0..d {
        let col = central_column(model, params, br, pi, cfg, j, steps[j])?;
        let col = if cfg.richardson {
            let half = central_column(model, params, br, pi, cfg, j, 0.5 * steps[j])?;
            let rich: Vec<f64> = half.iter().zip(&col).map(|(a, b)| (4.0 * a - b) / 3.0).collect();
            for i in 0..d {
                corr[(i, j)] = (rich[i] - half[i]).abs();
            }
            rich
        } else {
            col
        };
        for i in 0..d {
            h[(i, j)] = col[i];
        }
    }
    let norm = h.amax().max(1e-300);
    let asym = (&h - h.transpose()).amax() / norm;
    let sym = (&h + h.transpose()) * 0.5;
    let fd_err = corr.amax() / norm;
    Ok((sym, steps, asym, fd_err))
}

/// Value, gradient and Hessian with diagnostics.
pub fn action_jet(model: &ModelSpec, params: &WaveParams, cfg: &FdConfig) -> Result<ActionJet> {
    let br = profiles::find_turning_points(model, params, cfg.window)?;
    action_jet_on(model, params, &br, cfg)
}

pub fn action_jet_on(model: &ModelSpec, params: &WaveParams, br: &OrbitBracket, cfg: &FdConfig) -> Result<ActionJet> {
    let pi = profiles::period_integrals(model, params, br, &cfg.quad)?;
    let (hess, fd_step, symmetry_residual, fd_error) = hessian_with(model, params, br, &pi, cfg)?;
    let det = hess.determinant();
    let eig = SymmetricEigen::new(hess.clone());
    let scale = eig.eigenvalues.amax();
    let negative_signature = eig.eigenvalues.iter().filter(|&&x| x < -1e-12 * scale).count();
    let mut warnings = Vec::new();
    if let Some(rho) = br.rho() {
        if rho < 1e-3 {
            warnings.push(format!("near soliton limit (rho = {rho:.3e}): Hessian entries scale like rho^-2"));
        }
    }
    Ok(ActionJet {
        theta: pi.theta,
        grad: grad_of(&pi),
        hess,
        params: params.clone(),
        fd_step,
        symmetry_residual,
        fd_error,
        quad_error: pi.rel_error,
        det,
        negative_signature,
        bracket: br.clone(),
        state: profiles::state_from_integrals(model, &pi),
        warnings,
    })
}

/// `Theta - (Xi H + c d_c Theta + lambda . grad_lambda Theta + mu Xi)`,
/// relative to `|Theta|`.
pub fn conjugacy_residual(jet: &ActionJet) -> f64 {
    let p = &jet.params;
    let g = &jet.grad;
    let mut rhs = jet.state.xi * jet.state.mean_h + p.c * g[1] + p.mu * g[0];
    for (i, l) in p.lambda.iter().enumerate() {
        rhs += l * g[2 + i];
    }
    (jet.theta - rhs).abs() / jet.theta.abs().max(1e-300)
}
