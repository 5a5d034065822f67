//! Asymptotic sweeps toward the harmonic and soliton limits, and the fits
//! that turn them into limit constants and eigenvalue-splitting laws.

use crate::action::{self, FdConfig};
use crate::error::{Error, Result};
use crate::fit::{self, LinearFit};
use crate::limits::{self, HarmonicPoint, SolitonPoint};
use crate::linalg::EigTol;
use crate::model::{self, ModelSpec, WaveParams};
use crate::modulation::{self, ModVars};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Anchor {
    Harmonic(Box<HarmonicPoint>),
    Soliton(Box<SolitonPoint>),
}

impl Anchor {
    /// Parameters at distance `eps` in `mu` from the limit, inside the
    /// family of periodic waves.
    pub fn params_at(&self, eps: f64) -> WaveParams {
        match self {
            Anchor::Harmonic(h) => WaveParams::new(h.mu0 + eps, h.c, &h.lambda),
            Anchor::Soliton(s) => WaveParams::new(s.mus - eps, s.cs, &s.lambdas),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub fd: FdConfig,
    pub eig: EigTol,
    /// R^2 gate for slope fits.
    pub min_r2: f64,
    /// Residual gate for extrapolation fits, relative to the data scale.
    pub max_rel_residual: f64,
}

impl SweepConfig {
    pub fn new(window: (f64, f64)) -> Self {
        SweepConfig { fd: FdConfig::new(window), eig: EigTol::default(), min_r2: 0.999, max_rel_residual: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub eps: f64,
    pub mu: f64,
    pub delta: f64,
    pub rho: Option<f64>,
    pub k: f64,
    pub alpha: f64,
    pub m: Vec<f64>,
    pub xi: f64,
    pub d2mu_theta: f64,
    /// `d^2_mu Theta / Xi0` at the harmonic end, `(pi/Xi_s) d^2_mu Theta
    /// rho^2/(1+rho)` at the soliton end.
    pub hess_projection: f64,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    /// Distance of the Whitham matrix to its assembled limit (max norm).
    pub limit_distance: f64,
    pub jacobian_condition: f64,
    /// Determinant of the `(k, alpha)` block of `Hess H`.
    pub k_alpha_det: f64,
    pub fd_error: f64,
    #[serde(skip)]
    pub params: WaveParams,
    #[serde(skip)]
    pub whitham: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub kind: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicFit {
    pub k_rate: LinearFit,
    pub k_rate_exponent: f64,
    /// `(k - k0)/delta^2` at `delta = 0`, against `-k0 a0 /(4 c)`.
    pub k_coefficient: f64,
    pub xi_coefficient: f64,
    pub m_coefficient: f64,
    pub alpha_coefficient: f64,
    /// `w0/(4 k0)`, the amplitude law for `alpha` at leading order.
    pub alpha_coefficient_expected: f64,
    pub c_from_xi: f64,
    pub c_from_mean: f64,
    pub c_identified: f64,
    /// The coefficient implied by reading the amplitude law as
    /// `w0 delta^2/(4 c k0)`.
    pub c_from_alpha_printed: f64,
    pub whitham_rate: Option<LinearFit>,
    pub whitham_rate_exponent: Option<f64>,
    pub k_alpha_det_negative: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonFit {
    pub xi_slope: LinearFit,
    /// Fitted `Xi_s / pi`.
    pub xi_slope_value: f64,
    pub xi_slope_expected: f64,
    /// Intercept of `Xi` against `-ln rho`.
    pub xi_intercept: f64,
    pub alpha_limit: f64,
    pub alpha_fit: LinearFit,
    pub dc_m: f64,
    pub h_s: f64,
    pub h_s_derived: f64,
    pub h_fit: LinearFit,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub last_eigenvalues: Vec<Complex64>,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub limit_eigenvalues: Vec<Complex64>,
    pub condition_monotone: bool,
    pub k_alpha_det_negative: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FitReport {
    Harmonic(Box<HarmonicFit>),
    Soliton(Box<SolitonFit>),
}

fn tail<T: Clone>(v: &[T]) -> Vec<T> {
    fit::tail_half(v)
}

/// The limiting Whitham matrix at the anchor.
pub fn anchor_limit(model: &ModelSpec, anchor: &Anchor, tol: &EigTol) -> Result<DMatrix<f64>> {
    Ok(match anchor {
        Anchor::Harmonic(h) => limits::limiting_whitham_harmonic(model, h, tol)?.whitham,
        Anchor::Soliton(s) => limits::limiting_whitham_soliton(model, s, tol)?.whitham,
    })
}

fn row_at(
    model: &ModelSpec,
    anchor: &Anchor,
    limit: &DMatrix<f64>,
    index: usize,
    eps: f64,
    cfg: &SweepConfig,
) -> Result<SweepRow> {
    let p = anchor.params_at(eps);
    let jet = action::action_jet(model, &p, &cfg.fd)?;
    let (mv, rep) = modulation::whitham_report(model, &jet, &cfg.eig)?;
    let br = &jet.bracket;
    let rho = br.rho();
    let d2 = jet.hess[(0, 0)];
    let proj = match anchor {
        Anchor::Harmonic(h) => d2 / h.xi0,
        Anchor::Soliton(s) => {
            let r = rho.ok_or_else(|| Error::GridDegenerate("soliton sweep point without a third root".into()))?;
            PI / s.xis * d2 * r * r / (1.0 + r)
        }
    };
    let kab = rep.hess_h[(0, 0)] * rep.hess_h[(1, 1)] - rep.hess_h[(0, 1)] * rep.hess_h[(1, 0)];
    Ok(SweepRow {
        index,
        eps,
        mu: p.mu,
        delta: br.delta(),
        rho,
        k: mv.k,
        alpha: mv.alpha,
        m: mv.m.clone(),
        xi: jet.state.xi,
        d2mu_theta: d2,
        hess_projection: proj,
        eigenvalues: rep.eigenvalues.clone(),
        limit_distance: (&rep.whitham - limit).amax(),
        jacobian_condition: rep.jacobian_condition,
        k_alpha_det: kab,
        fd_error: jet.fd_error,
        params: p,
        whitham: rep.whitham,
    })
}

/// Waves at `mu = mu0 + eps` or `mu = mu_s - eps` for each grid entry,
/// ordered as given (largest `eps` first is expected by the fits).
pub fn sweep_table(model: &ModelSpec, anchor: &Anchor, grid: &[f64], cfg: &SweepConfig) -> Result<SweepTable> {
    check_grid(grid)?;
    let limit = anchor_limit(model, anchor, &cfg.eig)?;
    let rows: Vec<Result<SweepRow>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &e)| row_at(model, anchor, &limit, i, e, cfg))
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let kind = match anchor {
        Anchor::Harmonic(_) => "harmonic",
        Anchor::Soliton(_) => "soliton",
    };
    Ok(SweepTable { kind: kind.into(), rows })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 6 {
        return Err(Error::GridDegenerate(format!("need at least 6 grid points, got {}", grid.len())));
    }
    if grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::GridDegenerate("offsets must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::GridDegenerate("offsets must decrease strictly toward the limit".into()));
    }
    Ok(())
}

/// Fit `y = a + b x` on the tail half and return `a`.
fn extrapolate(xs: &[f64], ys: &[f64], cfg: &SweepConfig, what: &str) -> Result<(f64, LinearFit)> {
    let (x, y) = (tail(xs), tail(ys));
    let f = fit::gated_extrapolation(fit::line(&x, &y)?, &y, cfg.max_rel_residual, what)?;
    Ok((f.coef[0], f))
}

pub fn fit_harmonic(model: &ModelSpec, hp: &HarmonicPoint, table: &SweepTable, cfg: &SweepConfig) -> Result<HarmonicFit> {
    let rows = &table.rows;
    let d: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let d2: Vec<f64> = d.iter().map(|x| x * x).collect();
    let per = |f: &dyn Fn(&SweepRow) -> f64| -> Vec<f64> { rows.iter().zip(&d2).map(|(r, q)| f(r) / q).collect() };
    let dk: Vec<f64> = rows.iter().map(|r| r.k - hp.k0).collect();
    let k_rate = fit::gated(fit::loglog_slope(&tail(&d), &tail(&dk))?, cfg.min_r2, "k rate")?;
    let (k_coefficient, _) = extrapolate(&d2, &per(&|r| r.k - hp.k0), cfg, "k law")?;
    let (xi_coefficient, _) = extrapolate(&d2, &per(&|r| r.xi / hp.xi0 - 1.0), cfg, "period law")?;
    let (m_coefficient, _) = extrapolate(&d2, &per(&|r| r.m[0] - hp.v0), cfg, "mean law")?;
    let (alpha_coefficient, _) = extrapolate(&d2, &per(&|r| r.alpha), cfg, "alpha law")?;
    let alpha_expected = hp.w0 / (4.0 * hp.k0);
    // Whitham convergence is only fitted where finite differences resolve it.
    let usable: Vec<&SweepRow> = rows.iter().filter(|r| r.limit_distance > 1e3 * r.fd_error * r.whitham.amax()).collect();
    let whitham_rate = if usable.len() >= 3 {
        let x: Vec<f64> = usable.iter().map(|r| r.delta).collect();
        let y: Vec<f64> = usable.iter().map(|r| r.limit_distance).collect();
        fit::loglog_slope(&x, &y).ok()
    } else {
        None
    };
    let _ = model;
    Ok(HarmonicFit {
        k_rate_exponent: k_rate.coef[1],
        k_rate,
        k_coefficient,
        xi_coefficient,
        m_coefficient,
        alpha_coefficient,
        alpha_coefficient_expected: alpha_expected,
        c_from_xi: hp.a0 / (4.0 * xi_coefficient),
        c_from_mean: hp.b0 / (4.0 * m_coefficient),
        c_identified: hp.c_coef,
        c_from_alpha_printed: hp.w0 / (4.0 * hp.k0 * alpha_coefficient),
        whitham_rate_exponent: whitham_rate.as_ref().map(|f| f.coef[1]),
        whitham_rate,
        k_alpha_det_negative: rows.iter().all(|r| r.k_alpha_det < 0.0),
    })
}

/// `4 / (|W''(vs)| (v^s - vs)^2)`, the leading `rho^-2` coefficient of
/// `(pi/Xi_s) d^2_mu Theta`.
pub fn h_s_derived(sp: &SolitonPoint) -> f64 {
    let l = sp.v_outer - sp.vs;
    4.0 / (sp.w2.abs() * l * l)
}

pub fn fit_soliton(model: &ModelSpec, sp: &SolitonPoint, table: &SweepTable, cfg: &SweepConfig) -> Result<SolitonFit> {
    let rows = &table.rows;
    let rho: Vec<f64> = rows
        .iter()
        .map(|r| r.rho.ok_or_else(|| Error::GridDegenerate("missing rho".into())))
        .collect::<Result<_>>()?;
    let lnr: Vec<f64> = rho.iter().map(|r| -r.ln()).collect();
    let xi: Vec<f64> = rows.iter().map(|r| r.xi).collect();
    let xi_slope = fit::gated(fit::line(&tail(&lnr), &tail(&xi))?, cfg.min_r2, "period slope")?;
    let ks: Vec<f64> = rows.iter().map(|r| r.k).collect();
    let al: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    let (alpha_limit, alpha_fit) = extrapolate(&ks, &al, cfg, "alpha limit")?;
    let hp: Vec<f64> = rows.iter().map(|r| r.hess_projection).collect();
    let (x, y) = (tail(&rho), tail(&hp));
    let h_fit = fit::lstsq(&x, &y, &[&|_| 1.0, &|r: f64| r * r * r.ln(), &|r: f64| r * r])?;
    let h_fit = fit::gated_extrapolation(h_fit, &y, cfg.max_rel_residual, "h_s law")?;
    let cond: Vec<f64> = rows.iter().map(|r| r.jacobian_condition).collect();
    let last = rows.last().ok_or_else(|| Error::GridDegenerate("empty".into()))?;
    let limit = limits::limiting_whitham_soliton(model, sp, &cfg.eig)?;
    Ok(SolitonFit {
        xi_slope_value: xi_slope.coef[1],
        xi_intercept: xi_slope.coef[0],
        xi_slope,
        xi_slope_expected: sp.xis / PI,
        alpha_limit,
        alpha_fit,
        dc_m: sp.dc_m,
        h_s: h_fit.coef[0],
        h_s_derived: h_s_derived(sp),
        h_fit,
        last_eigenvalues: last.eigenvalues.clone(),
        limit_eigenvalues: limit.eigenvalues,
        condition_monotone: cond.windows(2).all(|w| w[1] >= w[0]),
        k_alpha_det_negative: rows.iter().all(|r| r.k_alpha_det < 0.0),
    })
}

/// Sweep plus the fits appropriate to the anchor.
pub fn asymptotic_sweep(
    model: &ModelSpec,
    anchor: &Anchor,
    grid: &[f64],
    cfg: &SweepConfig,
) -> Result<(SweepTable, FitReport)> {
    let table = sweep_table(model, anchor, grid, cfg)?;
    let fit = match anchor {
        Anchor::Harmonic(h) => FitReport::Harmonic(Box::new(fit_harmonic(model, h, &table, cfg)?)),
        Anchor::Soliton(s) => FitReport::Soliton(Box::new(fit_soliton(model, s, &table, cfg)?)),
    };
    Ok((table, fit))
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitRow {
    pub index: usize,
    /// `alpha` on the harmonic side, `rho` on the soliton side.
    pub small: f64,
    pub k: f64,
    pub c: f64,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub pair: Vec<Complex64>,
    /// Square of the half distance between the pair (negative when the
    /// pair is complex).
    pub half_split_sq: f64,
    /// Second eigenvector component over the first, for the upper member
    /// of the pair.
    #[serde(serialize_with = "crate::ser::complex")]
    pub eigvec_ratio: Complex64,
    /// Largest angle of the pair's eigenvectors to their common limit.
    pub eigvec_angle: f64,
    /// Largest angle of the remaining eigenvectors to their limits.
    pub others_angle: f64,
    /// Largest drift of the remaining eigenvalues from the dispersionless ones.
    pub others_drift: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicSplit {
    pub rows: Vec<SplitRow>,
    pub delta_mi: f64,
    /// `lim half_split^2 / alpha`.
    pub delta_mi_fit: f64,
    pub fit: LinearFit,
    /// `-d^3_{kk alpha} H / sqrt(Delta_MI)`, the leading eigenvector
    /// coefficient for the upper member of the pair.
    pub eigvec_coefficient: f64,
    pub eigvec_coefficient_fit: f64,
    /// `max others_drift / alpha` over the grid.
    pub others_drift_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonSplit {
    pub rows: Vec<SplitRow>,
    pub h_s: f64,
    /// `sqrt(Xi_s / (pi h_s d^2_c M))`: half splitting is this times
    /// `pi rho / (k Xi_s)`.
    pub coefficient: f64,
    pub coefficient_fit: f64,
    pub fit: LinearFit,
    /// The coefficient of `rho` as displayed in the splitting theorem,
    /// `sqrt(pi / (h_s Xi_s d^2_c M))`.
    pub printed_coefficient: f64,
    /// Half splitting over `rho` at the grid end closest to the limit.
    pub printed_ratio_last: f64,
    pub distance_exponent: LinearFit,
    /// Log-log slope of the pair's eigenvector angle against `rho`.
    pub pair_angle_exponent: LinearFit,
    /// Largest eigenvector angle over the whole eigenbasis against
    /// `1/|ln rho|`.
    pub drift_fit: LinearFit,
}

fn pair_indices(ev: &[Complex64], z: f64) -> (usize, usize, Vec<usize>) {
    let mut idx: Vec<usize> = (0..ev.len()).collect();
    idx.sort_by(|&a, &b| (ev[a] - z).norm().partial_cmp(&(ev[b] - z).norm()).unwrap());
    let (mut i, mut j) = (idx[0], idx[1]);
    if ev[i].re > ev[j].re || (ev[i].re == ev[j].re && ev[i].im > ev[j].im) {
        std::mem::swap(&mut i, &mut j);
    }
    (i, j, idx[2..].to_vec())
}

/// Unit null vector of `W - z` for a real `z`, sign arbitrary.
fn real_null_vector(w: &DMatrix<f64>, z: f64) -> DVector<f64> {
    let d = w.nrows();
    let svd = (w - DMatrix::identity(d, d) * z).svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (imin, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    vt.row(imin).transpose()
}

fn complex_null_vector(w: &DMatrix<f64>, z: Complex64) -> Vec<Complex64> {
    let d = w.nrows();
    let m = w.map(|x| Complex64::new(x, 0.0)) - DMatrix::identity(d, d).map(|x: f64| Complex64::new(x, 0.0)) * z;
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (imin, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    vt.row(imin).iter().map(|c| c.conj()).collect()
}

/// Angle between two lines.
fn angle_between(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // atan2 stays accurate for both tiny and near-orthogonal angles
    let perp = (a - b * (a.dot(b) / b.norm_squared())).norm();
    perp.atan2(a.dot(b).abs())
}

/// Splitting of the double characteristic along `(k0, alpha, U0)` with
/// `alpha` taken from the harmonic sweep.
pub fn harmonic_splitting(
    model: &ModelSpec,
    hp: &HarmonicPoint,
    grid: &[f64],
    cfg: &SweepConfig,
) -> Result<HarmonicSplit> {
    check_grid(grid)?;
    let lim = limits::limiting_whitham_harmonic(model, hp, &cfg.eig)?;
    let delta_mi = -lim.a_tilde0 * lim.d_kka_h;
    if delta_mi == 0.0 {
        return Err(Error::FitRejected("vanishing modulational-instability index".into()));
    }
    let sm = model::structural_matrices(model);
    let tail_block = -(&sm.b * &hp.hess_h_u);
    let z_disp = crate::linalg::poly_roots(&crate::linalg::char_poly(&tail_block));
    let anchor = Anchor::Harmonic(Box::new(hp.clone()));
    let rows: Vec<Result<SplitRow>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let p = anchor.params_at(eps);
            let jet = action::action_jet(model, &p, &cfg.fd)?;
            let mv = modulation::params_to_modvars(model, &jet);
            let target = ModVars { k: hp.k0, alpha: mv.alpha, m: hp.u0.clone() };
            let nr = modulation::modvars_to_params(model, &target, &p, &cfg.fd)?;
            let jet = action::action_jet(model, &nr.params, &cfg.fd)?;
            let (mv, rep) = modulation::whitham_report(model, &jet, &cfg.eig)?;
            let ev = &rep.eigenvalues;
            let (lo, hi, rest) = pair_indices(ev, hp.vg);
            let half = (ev[hi] - ev[lo]) * 0.5;
            let hs = (half * half).re;
            let x = complex_null_vector(&rep.whitham, ev[hi]);
            let ratio = x[1] / x[0];
            let drift = rest
                .iter()
                .map(|&j| z_disp.iter().map(|z| (ev[j] - z).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            Ok(SplitRow {
                index: i,
                small: mv.alpha,
                k: mv.k,
                c: nr.params.c,
                pair: vec![ev[lo], ev[hi]],
                half_split_sq: hs,
                eigvec_ratio: ratio,
                eigvec_angle: f64::NAN,
                others_angle: f64::NAN,
                others_drift: drift,
                newton_iterations: nr.iterations,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let a: Vec<f64> = rows.iter().map(|r| r.small).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r.half_split_sq / r.small).collect();
    let (delta_mi_fit, f) = extrapolate(&a, &ratio, cfg, "splitting law")?;
    let sa: Vec<f64> = a.iter().map(|x| x.abs().sqrt()).collect();
    let ev2: Vec<f64> = rows.iter().zip(&sa).map(|(r, s)| r.eigvec_ratio.re / s).collect();
    let (eig_fit, _) = extrapolate(&sa, &ev2, &SweepConfig { max_rel_residual: 5e-2, ..cfg.clone() }, "eigenvector law")?;
    let others_drift_ratio = rows.iter().map(|r| r.others_drift / r.small.abs()).fold(0.0, f64::max);
    Ok(HarmonicSplit {
        rows,
        delta_mi,
        delta_mi_fit,
        fit: f,
        eigvec_coefficient: -lim.d_kka_h / delta_mi.abs().sqrt(),
        eigvec_coefficient_fit: eig_fit,
        others_drift_ratio,
    })
}

/// Splitting of the double characteristic at the speed `c_s` along the
/// soliton sweep, with the fitted `h_s`.
pub fn soliton_splitting(
    model: &ModelSpec,
    sp: &SolitonPoint,
    table: &SweepTable,
    h_s: f64,
    cfg: &SweepConfig,
) -> Result<SolitonSplit> {
    if sp.dc2_m == 0.0 {
        return Err(Error::FitRejected("vanishing second speed derivative of the Boussinesq moment".into()));
    }
    let lim = limits::limiting_whitham_soliton(model, sp, &cfg.eig)?;
    let x_lim = DVector::from_column_slice(&lim.pair_eigenvector);
    let sm = model::structural_matrices(model);
    let tail_block = -(&sm.b * &sp.hess_h_u);
    let z_disp = crate::linalg::poly_roots(&crate::linalg::char_poly(&tail_block));
    if z_disp.iter().any(|z| z.im.abs() > 1e-12 * z.norm().max(1.0)) {
        return Err(Error::FitRejected("complex dispersionless speeds at the soliton endstate".into()));
    }
    let others_lim: Vec<DVector<f64>> = z_disp.iter().map(|z| real_null_vector(&lim.whitham, z.re)).collect();
    let mut rows = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        let rho = r.rho.ok_or_else(|| Error::GridDegenerate("missing rho".into()))?;
        let c = r.params.c;
        let ev = &r.eigenvalues;
        let (lo, hi, rest) = pair_indices(ev, c);
        let half = (ev[hi] - ev[lo]) * 0.5;
        let angle = [ev[lo], ev[hi]]
            .iter()
            .map(|z| angle_between(&x_lim, &real_null_vector(&r.whitham, z.re)))
            .fold(0.0, f64::max);
        let others_angle = rest
            .iter()
            .map(|&j| {
                let x = real_null_vector(&r.whitham, ev[j].re);
                others_lim.iter().map(|l| angle_between(l, &x)).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        let x = real_null_vector(&r.whitham, ev[hi].re);
        let drift = rest
            .iter()
            .map(|&j| z_disp.iter().map(|z| (ev[j] - z).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        rows.push(SplitRow {
            index: r.index,
            small: rho,
            k: r.k,
            c,
            pair: vec![ev[lo], ev[hi]],
            half_split_sq: (half * half).re,
            eigvec_ratio: Complex64::new(x[1] / x[0], 0.0),
            eigvec_angle: angle,
            others_angle,
            others_drift: drift,
            newton_iterations: 0,
        });
    }
    let coefficient = (sp.xis / (PI * h_s * sp.dc2_m)).sqrt();
    let printed = (PI / (h_s * sp.xis * sp.dc2_m)).sqrt();
    let rho: Vec<f64> = rows.iter().map(|r| r.small).collect();
    let half: Vec<f64> = rows.iter().map(|r| r.half_split_sq.max(0.0).sqrt()).collect();
    let scaled: Vec<f64> = rows.iter().zip(&half).map(|(r, h)| h * r.k * sp.xis / (PI * r.small)).collect();
    let rl: Vec<f64> = rho.iter().map(|r| r * r.ln().abs()).collect();
    let (coefficient_fit, f) = extrapolate(&rl, &scaled, cfg, "soliton splitting law")?;
    let distance_exponent = fit::loglog_slope(&tail(&rho), &tail(&half))?;
    let inv_log: Vec<f64> = rho.iter().map(|r| 1.0 / r.ln().abs()).collect();
    let pair_ang: Vec<f64> = rows.iter().map(|r| r.eigvec_angle).collect();
    let pair_angle_exponent = fit::loglog_slope(&tail(&rho), &tail(&pair_ang))?;
    let drift: Vec<f64> = rows.iter().map(|r| r.eigvec_angle.max(r.others_angle)).collect();
    let drift_fit = fit::line(&tail(&inv_log), &tail(&drift))?;
    let last = rows.len() - 1;
    Ok(SolitonSplit {
        printed_ratio_last: half[last] / rho[last],
        rows,
        h_s,
        coefficient,
        coefficient_fit,
        fit: f,
        printed_coefficient: printed,
        distance_exponent,
        pair_angle_exponent,
        drift_fit,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitReport {
    Harmonic(Box<HarmonicSplit>),
    Soliton(Box<SolitonSplit>),
}

/// Eigenvalue splitting near the limit selected by the anchor. The soliton
/// branch reuses the sweep and its fitted `h_s`.
pub fn eigen_splitting_fit(model: &ModelSpec, anchor: &Anchor, grid: &[f64], cfg: &SweepConfig) -> Result<SplitReport> {
    match anchor {
        Anchor::Harmonic(h) => Ok(SplitReport::Harmonic(Box::new(harmonic_splitting(model, h, grid, cfg)?))),
        Anchor::Soliton(s) => {
            let (table, fit) = asymptotic_sweep(model, anchor, grid, cfg)?;
            let h_s = match fit {
                FitReport::Soliton(f) => f.h_s,
                FitReport::Harmonic(_) => unreachable!("soliton anchor"),
            };
            Ok(SplitReport::Soliton(Box::new(soliton_splitting(model, s, &table, h_s, cfg)?)))
        }
    }
}
