//! Closed-form modulational-instability quantities at the harmonic edge.
//!
//! Scalar models use the quadratic in `k0^2`, two-field models the general
//! bracket in `(W, g, kappa, tau)` with the cubic for affine `tau` as a
//! second path. The misleading index obtained by extrapolating the linear
//! dispersion relation is kept for comparison only: it is not a stability
//! criterion.

use crate::action::{self, FdConfig};
use crate::error::{Error, Result};
use crate::func::Func;
use crate::limits::{self, Branch};
use crate::model::{self, ModelKind, ModelSpec, WaveParams};
use crate::modulation;
use serde::Serialize;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;
const TP2: f64 = TWO_PI * TWO_PI;

/// Relative width of the marginal band around `sign(w0) Delta_MI = 0`.
pub const TOL_MI: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ModulationallyStable,
    ModulationallyUnstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }
}

/// Which closed form produced the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MiPath {
    Gkdv,
    Scalar,
    SystemAffine,
    SystemGeneral,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputsEcho {
    pub k0: f64,
    pub u0: Vec<f64>,
    pub model: String,
    pub branch: Branch,
}

/// Values of the displayed scalar expansions, which differ from the
/// unexpanded identities they come from. Two-field values coincide with the
/// main report.
#[derive(Debug, Clone, Serialize)]
pub struct Printed {
    pub delta_mi: f64,
    pub a_tilde0: f64,
    pub naive_index: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MIReport {
    pub delta_mi: f64,
    pub a_tilde0: f64,
    pub a0: f64,
    pub b0: f64,
    pub k_c: Option<f64>,
    /// Absent for two fields, where no such index is displayed.
    pub naive_index: Option<f64>,
    pub printed: Printed,
    pub predicted_sign_alpha: Sign,
    pub w0: f64,
    pub c0: f64,
    pub vg: f64,
    /// `(W'', W''', W'''')` at the well bottom.
    pub w_derivs: [f64; 3],
    /// The polynomial whose sign decides stability: `(W'')^2` times the
    /// scalar bracket, or the two-field bracket.
    pub polynomial: f64,
    pub dispersionless_hyperbolic: bool,
    pub stability_verdict: Verdict,
    pub path: MiPath,
    pub inputs_echo: InputsEcho,
}

/// Scalar index data from the unexpanded identities
/// `a~0 = b^2 k0^2 W'' (-4 W'' a0 + 2/3 (W'''/W'' - kappa'/kappa)^2)` and
/// `Delta_MI = -6 b W'' a~0 / k0`. Returns `(a~0, Delta_MI, naive)`.
pub fn scalar_unexpanded(b: f64, k0: f64, kap: &[f64], w: [f64; 3]) -> (f64, f64, f64) {
    let [w2, w3, w4] = w;
    let kr = kap[1] / kap[0];
    let a0 = limits::a0_closed_form(kap, w2, w3, w4);
    let d = w3 / w2 - kr;
    let bracket = -4.0 * w2 * a0 + 2.0 / 3.0 * d * d;
    let a_tilde0 = b * b * k0 * k0 * w2 * bracket;
    let delta = -6.0 * b * w2 * a_tilde0 / k0;
    let naive = 6.0 * b.powi(4) * k0 * w2 * w2 * (-bracket - d * d / 3.0);
    (a_tilde0, delta, naive)
}

/// Coefficients `(A, B, C)` with `(W'')^2 [bracket] = A W''^2 + B W'' + C`
/// in the scalar index. The expansion of the unexpanded identities; the
/// displayed one flips the `f''''` term and weights `(kappa'/kappa)^2` by 5/6.
pub fn scalar_coefficients(kap: &[f64], f3: f64, f4: f64) -> [f64; 3] {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    [krr - 7.0 / 6.0 * kr * kr, -kr * f3 / 3.0 + 0.5 * f4, f3 * f3 / 6.0]
}

/// The scalar bracket, `Delta_MI = 6 b^3 k0 W''^2 [bracket]` with
/// `W'' = (2 pi k0)^2 kappa`.
pub fn scalar_bracket(kap: &[f64], f3: f64, f4: f64, w2: f64) -> f64 {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    let r = f3 / w2;
    krr - 7.0 / 6.0 * kr * kr - kr * r / 3.0 + r * r / 6.0 + 0.5 * f4 / w2
}

/// The scalar bracket exactly as displayed in the source, for comparison.
pub fn scalar_bracket_printed(kap: &[f64], f3: f64, f4: f64, w2: f64) -> f64 {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    let r = f3 / w2;
    krr - 5.0 / 6.0 * kr * kr - kr * r / 3.0 + r * r / 6.0 - 0.5 * f4 / w2
}

/// The naive bracket, `b d_alpha omega d_kk omega = 6 b^4 k0 W''^2 [bracket]`.
pub fn naive_bracket(kap: &[f64], f3: f64, f4: f64, w2: f64) -> f64 {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    let r = f3 / w2;
    krr - 1.5 * kr * kr - kr * r - r * r / 6.0 + 0.5 * f4 / w2
}

/// The naive bracket as displayed in the source.
pub fn naive_bracket_printed(kap: &[f64], f3: f64, f4: f64, w2: f64) -> f64 {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    let r = f3 / w2;
    krr - 7.0 / 6.0 * kr * kr - kr * r - r * r / 6.0 - 0.5 * f4 / w2
}

/// Two-field bracket for general `tau`; `tg2 = tau (g')^2`.
#[allow(clippy::too_many_arguments)]
pub fn system_bracket(kap: &[f64], tau: f64, g1: f64, g2: f64, w2: f64, w3: f64, w4: f64) -> f64 {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    let tg2 = tau * g1 * g1;
    -0.5 * w4 * w2 * (w2 + 3.0 * tg2) - w3 * w3 * (w2 - 3.0 * tg2) / 6.0
        + w3 * w2 * (kr * (w2 + tg2) + 2.0 * tau * g1 * g2)
        + (krr - 1.5 * kr * kr) * w2.powi(3)
        + w2 * w2 * (tg2 * (3.0 * krr - 3.5 * kr * kr) - 2.0 * kr * tau * g1 * g2 + tau * g2 * g2)
}

/// The affine-`tau` cubic in `X = W''` with its expanded coefficients.
/// `tr = tau'/tau`; `f = (f'', f''', f'''')`.
pub fn affine_cubic(kap: &[f64], tr: f64, f: [f64; 3], x: f64) -> f64 {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    let [f2, f3, f4] = f;
    let c3 = -5.0 * tr * tr - 2.0 * kr * tr - 5.0 * kr * kr + 4.0 * krr;
    let c2 = f2 * (-3.5 * tr * tr - 5.0 * kr * tr - 3.5 * kr * kr + 3.0 * krr) + f3 * (6.0 * tr - 2.0 * kr) + 2.0 * f4;
    let c1 = f2 * f2 * (6.0 * tr * tr - 3.0 * kr * tr) + f2 * f3 * (9.0 * tr - kr) + f3 * f3 / 3.0 + 1.5 * f2 * f4;
    let c0 = 0.5 * f2 * (f3 + 3.0 * tr * f2).powi(2);
    ((c3 * x + c2) * x + c1) * x + c0
}

/// The same cubic in the grouped form preceding its expansion.
pub fn affine_cubic_grouped(kap: &[f64], tr: f64, f: [f64; 3], x: f64) -> f64 {
    let kr = kap[1] / kap[0];
    let krr = kap[2] / kap[0];
    let [f2, f3, f4] = f;
    let s = x + f2;
    let p = f3 + 3.0 * tr * s;
    (0.5 * f4 - 6.0 * tr * tr * s) * x * (4.0 * x + 3.0 * f2) + p * p * (2.0 * x + 3.0 * f2) / 6.0
        - p * x * (kr * (2.0 * x + f2) - 4.0 * tr * s)
        + (krr - 1.5 * kr * kr) * x.powi(3)
        + x * x * s * (3.0 * krr - 3.5 * kr * kr + 4.0 * kr * tr + 4.0 * tr * tr)
}

/// Hydrodynamic NLS reduction (`kappa = 1/(4v)`, `tau = Id`): the cubic
/// collapses to this quadratic in `X = W''`.
pub fn nls_quadratic(v0: f64, f: [f64; 3], x: f64) -> f64 {
    let [f2, f3, f4] = f;
    let iv = 1.0 / v0;
    x * x * (4.0 * iv * iv * f2 + 8.0 * iv * f3 + 2.0 * f4)
        + x * (9.0 * iv * iv * f2 * f2 + 10.0 * iv * f2 * f3 + f3 * f3 / 3.0 + 1.5 * f2 * f4)
        + 0.5 * f2 * (f3 + 3.0 * iv * f2).powi(2)
}

/// `W'', W''', W''''` at the harmonic edge of a two-field model from the
/// recursions in `g`, with `g = u0`, `g' = -(c0 + b tau' g)/(b tau)`.
pub fn system_w_derivs(model: &ModelSpec, u0: &[f64], c0: f64) -> ([f64; 3], f64, f64) {
    let v = u0[0];
    let g = u0[1];
    let b = model.b;
    let t = model.tau_jet(v, 4);
    let f = model.f.jet(v, 4);
    let bt = b * t[0];
    let g1 = -(c0 + b * t[1] * g) / bt;
    let g2 = (-b * t[2] * g - 2.0 * b * t[1] * g1) / bt;
    let h = |l: usize| f[l] + 0.5 * t[l] * g * g;
    let w2 = -h(2) + t[0] * g1 * g1;
    let w3 = -h(3) - 3.0 * t[2] * g * g1 - 3.0 * t[1] * g1 * g1;
    let w4 = -h(4) - 4.0 * t[3] * g * g1 - 6.0 * t[2] * g1 * g1 - 3.0 * t[2] * g * g2 - 6.0 * t[1] * g1 * g2;
    ([w2, w3, w4], g1, g2)
}

/// Wave parameters `(mu0, c0, lambda)` whose well bottom is `U0` with
/// harmonic wavenumber `k0` along `branch`.
pub fn harmonic_params(model: &ModelSpec, u0: &[f64], k0: f64, branch: Branch) -> Result<WaveParams> {
    let v = u0[0];
    model.check_domain(v)?;
    let (c0, ..) = limits::harmonic_phase_velocity(model, u0, k0, branch)?;
    let b = model.b;
    let f1 = model.f.jet(v, 1)[1];
    let lambda = match model.kind {
        ModelKind::Scalar => vec![-f1 - c0 / b * v],
        ModelKind::EulerKorteweg => {
            let t = model.tau_jet(v, 1);
            let g = u0[1];
            vec![-f1 - 0.5 * t[1] * g * g - c0 / b * g, -t[0] * g - c0 / b * v]
        }
    };
    let p = WaveParams::new(0.0, c0, &lambda);
    let mu0 = model::potential_jet(model, v, &p, 0)?[0];
    Ok(WaveParams { mu: mu0, ..p })
}

/// `k_c = |f'''| / (2 pi sqrt(3 kappa |f''''|))`, where `Delta_MI` changes
/// sign for one field with constant `kappa`. Defined when `f''' != 0` and
/// `f'''' < 0`; waves with `k0 > k_c` are then unstable.
pub fn critical_wavenumber(model: &ModelSpec, v0: f64) -> Option<f64> {
    if model.kind != ModelKind::Scalar || !model.kappa.is_constant() {
        return None;
    }
    let f = model.f.jet(v0, 4);
    let kap = model.kappa.eval(v0);
    if f[3] == 0.0 || !(f[4] < 0.0) {
        return None;
    }
    Some(f[3].abs() / (TWO_PI * (3.0 * kap * f[4].abs()).sqrt()))
}

fn scalar_only(model: &ModelSpec) -> Result<()> {
    if model.kind == ModelKind::Scalar {
        Ok(())
    } else {
        Err(Error::InvalidModel("defined for one field only".into()))
    }
}

/// The index `b d^2_alpha H d^3_{kk alpha} H` that a naive extrapolation of
/// the dispersion relation suggests. It disagrees with `Delta_MI`, already
/// for KdV, and must not be used as a stability criterion.
pub fn naive_index(model: &ModelSpec, v0: f64, k0: f64) -> Result<f64> {
    scalar_only(model)?;
    model.check_domain(v0)?;
    let f = model.f.jet(v0, 4);
    let kap = model.kappa_jet(v0, 2);
    let w2 = TP2 * k0 * k0 * kap[0];
    Ok(scalar_unexpanded(model.b, k0, &kap, [w2, -f[3], -f[4]]).2)
}

/// Sign of `alpha` on nonconstant waves, by model class.
pub fn predicted_alpha_sign(model: &ModelSpec, params: &WaveParams) -> Result<Sign> {
    match (&model.kind, &model.tau) {
        (ModelKind::Scalar, _) => Ok(Sign::of(model.b)),
        (ModelKind::EulerKorteweg, Some(t)) if t.is_identity() => Ok(Sign::of(params.lambda2() * model.b)),
        // u + c v / (b tau) is constant, so alpha carries the sign of -c/tau
        (ModelKind::EulerKorteweg, Some(t)) if t.is_constant() => Ok(Sign::of(-params.c * t.eval(0.0))),
        _ => Err(Error::UncoveredClass),
    }
}

fn verdict(w0: f64, delta: f64, scale: f64, hyperbolic: bool) -> Verdict {
    if !hyperbolic {
        return Verdict::ModulationallyUnstable;
    }
    let s = w0.signum() * delta;
    if s < -TOL_MI * scale {
        Verdict::ModulationallyUnstable
    } else if s > TOL_MI * scale {
        Verdict::ModulationallyStable
    } else {
        Verdict::Marginal
    }
}

/// All closed-form index quantities at the harmonic edge `(k0, U0)` along
/// the chosen branch of the phase velocity (ignored for one field).
pub fn delta_mi(model: &ModelSpec, u0: &[f64], k0: f64, branch: Branch) -> Result<MIReport> {
    if u0.len() != model.n() {
        return Err(Error::InvalidModel(format!("state has {} components, model {}", u0.len(), model.n())));
    }
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::InadmissibleWavenumber { k0, kmin: 0.0 });
    }
    let v0 = u0[0];
    model.check_domain(v0)?;
    let b = model.b;
    let f = model.f.jet(v0, 4);
    let kap = model.kappa_jet(v0, 2);
    let scale = k0.abs() * 1f64.max(f[3] * f[3]).max(f[4].abs());
    let echo = InputsEcho { k0, u0: u0.to_vec(), model: model.id(), branch };
    match model.kind {
        ModelKind::Scalar => {
            let w2 = TP2 * k0 * k0 * kap[0];
            let w3 = -f[3];
            let w4 = -f[4];
            let c0 = -b * (f[2] + w2);
            let vg = c0 - 2.0 * b * w2;
            let gkdv = model.kappa.is_constant() && kap[0] == 1.0 && b == 1.0;
            let [ca, cb, cc] = scalar_coefficients(&kap, f[3], f[4]);
            let poly = (ca * w2 + cb) * w2 + cc;
            let (a_tilde0, delta, naive, path) = if gkdv {
                let (f3, f4) = (f[3], f[4]);
                (
                    -f3 * f3 / (6.0 * TP2) - 0.5 * f4 * k0 * k0,
                    k0 * (f3 * f3 + 3.0 * TP2 * f4 * k0 * k0),
                    k0 * (-f3 * f3 + 3.0 * TP2 * f4 * k0 * k0),
                    MiPath::Gkdv,
                )
            } else {
                let (a, d, n) = scalar_unexpanded(b, k0, &kap, [w2, w3, w4]);
                (a, d, n, MiPath::Scalar)
            };
            let pb = scalar_bracket_printed(&kap, f[3], f[4], w2);
            let printed = Printed {
                delta_mi: 6.0 * b.powi(3) * k0 * w2 * w2 * pb,
                a_tilde0: -b * b * k0 * k0 * w2 * pb,
                naive_index: Some(6.0 * b.powi(4) * k0 * w2 * w2 * naive_bracket_printed(&kap, f[3], f[4], w2)),
            };
            let w0 = 1.0 / b;
            Ok(MIReport {
                delta_mi: delta,
                a_tilde0,
                a0: limits::a0_closed_form(&kap, w2, w3, w4),
                b0: limits::b0_closed_form(&kap, w2, w3),
                k_c: critical_wavenumber(model, v0),
                naive_index: Some(naive),
                printed,
                predicted_sign_alpha: Sign::of(b),
                w0,
                c0,
                vg,
                w_derivs: [w2, w3, w4],
                polynomial: poly,
                dispersionless_hyperbolic: true,
                stability_verdict: verdict(w0, delta, scale, true),
                path,
                inputs_echo: echo,
            })
        }
        ModelKind::EulerKorteweg => {
            let (c0, dk, _, _) = limits::harmonic_phase_velocity(model, u0, k0, branch)?;
            let ([w2, w3, w4], g1, g2) = system_w_derivs(model, u0, c0);
            let t = model.tau_jet(v0, 2);
            let tg2 = t[0] * g1 * g1;
            let poly_general = system_bracket(&kap, t[0], g1, g2, w2, w3, w4);
            let tau = model.tau.as_ref().expect("two-field model carries tau");
            let (poly, path) = if tau.is_affine() {
                (affine_cubic(&kap, t[1] / t[0], [f[2], f[3], f[4]], w2), MiPath::SystemAffine)
            } else {
                (poly_general, MiPath::SystemGeneral)
            };
            let delta = b.powi(3) * k0 * (3.0 * tg2 - w2) / (4.0 * t[0] * g1.powi(5) * (w2 + 3.0 * tg2)) * poly;
            let a_tilde0 = -0.25 * b * b * k0 * k0 * poly / (g1 * g1 * w2 * (w2 + 3.0 * tg2));
            let w0 = 2.0 * g1 / b;
            let hyperbolic = f[2] + 0.5 * t[2] * u0[1] * u0[1] > 0.0;
            let lambda2 = -t[0] * u0[1] - c0 * v0 / b;
            let sign = match predicted_alpha_sign(model, &WaveParams::new(0.0, c0, &[0.0, lambda2])) {
                Ok(s) => s,
                Err(_) => Sign::of(w0),
            };
            Ok(MIReport {
                delta_mi: delta,
                a_tilde0,
                a0: limits::a0_closed_form(&kap, w2, w3, w4),
                b0: limits::b0_closed_form(&kap, w2, w3),
                k_c: None,
                naive_index: None,
                printed: Printed { delta_mi: delta, a_tilde0, naive_index: None },
                predicted_sign_alpha: sign,
                w0,
                c0,
                vg: c0 + k0 * dk,
                w_derivs: [w2, w3, w4],
                polynomial: poly,
                dispersionless_hyperbolic: hyperbolic,
                stability_verdict: verdict(w0, delta, scale, hyperbolic),
                path,
                inputs_echo: echo,
            })
        }
    }
}

/// The mass-Lagrangian model conjugate to an Eulerian Euler-Korteweg model
/// (`tau = Id`, `b = -1`): `f_L(v) = v f_E(1/v)`, `kappa_L(v) = v^-5
/// kappa_E(1/v)`, `tau_L = 1`, `b_L = 1`.
pub fn conjugate_lagrangian(model_e: &ModelSpec) -> Result<ModelSpec> {
    let eulerian = model_e.kind == ModelKind::EulerKorteweg
        && model_e.b == -1.0
        && model_e.tau.as_ref().map(|t| t.is_identity()).unwrap_or(false);
    if !eulerian {
        return Err(Error::UnsupportedConjugateFamily("expected tau = Id and b = -1".into()));
    }
    let (lo, hi) = model_e.domain;
    if lo < 0.0 {
        return Err(Error::UnsupportedConjugateFamily("the Eulerian domain must lie in v > 0".into()));
    }
    let domain = (if hi.is_finite() { 1.0 / hi } else { 0.0 }, if lo > 0.0 { 1.0 / lo } else { f64::INFINITY });
    let f = model_e.f.reflect(1);
    let kappa = model_e.kappa.reflect(-5);
    ModelSpec::euler_korteweg(1.0, f, kappa, Func::constant(1.0), Some(domain))
        .map_err(|e| Error::UnsupportedConjugateFamily(e.to_string()))
}

/// Parameters of the Lagrangian wave matching an Eulerian one. The profile
/// equations agree after `v_L = 1/v_E`, `dy = v_E dx` when
/// `mu_L = lambda1_E`, `lambda1_L = mu_E`, `c_L = lambda2_E`; the remaining
/// gauge is fixed by `lambda2_L = -c_E`, which leaves `alpha` unchanged.
pub fn conjugate_params(p: &WaveParams) -> WaveParams {
    WaveParams::new(p.lambda[0], p.lambda2(), &[p.mu, -p.c])
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugationReport {
    pub model_l: ModelSpec,
    pub params_e: WaveParams,
    pub params_l: WaveParams,
    pub k_e: f64,
    pub alpha_e: f64,
    pub k_l: f64,
    pub alpha_l: f64,
    /// `|alpha_E/k_E - alpha_L/k_L|` relative to `|alpha_E/k_E|`.
    pub ratio_residual: f64,
    pub v0_e: f64,
    pub v0_l: f64,
    pub k0_e: f64,
    pub k0_l: f64,
    pub v_product_residual: f64,
    pub k_relation_residual: f64,
    pub polynomial_e: f64,
    pub polynomial_l: f64,
    /// `P_E / P_L`, against `(v_L)_0^13`.
    pub polynomial_ratio: f64,
    pub polynomial_ratio_expected: f64,
    pub polynomial_residual: f64,
    /// The displayed law `(v_L)_0^-11` and the residual against it.
    pub polynomial_ratio_printed: f64,
    pub polynomial_residual_printed: f64,
    /// `ln(P_E/P_L) / ln (v_L)_0`.
    pub polynomial_exponent: f64,
    pub verdict_e: Verdict,
    pub verdict_l: Verdict,
}

fn reciprocal_window((a, b): (f64, f64)) -> (f64, f64) {
    (1.0 / b, 1.0 / a)
}

/// Builds the conjugate Lagrangian model, matches the given Eulerian wave
/// and the harmonic point at the same `(c, lambda)`, and reports the
/// residuals of the conjugation identities.
pub fn conjugation_check(model_e: &ModelSpec, params_e: &WaveParams, window_e: (f64, f64)) -> Result<ConjugationReport> {
    let model_l = conjugate_lagrangian(model_e)?;
    if !(window_e.0 > 0.0) {
        return Err(Error::UnsupportedConjugateFamily("the Eulerian window must lie in v > 0".into()));
    }
    let window_l = reciprocal_window(window_e);
    let params_l = conjugate_params(params_e);
    let mv = |m: &ModelSpec, p: &WaveParams, w| -> Result<(f64, f64)> {
        let jet = action::action_jet(m, p, &FdConfig::new(w))?;
        let mv = modulation::params_to_modvars(m, &jet);
        Ok((mv.k, mv.alpha))
    };
    let (k_e, alpha_e) = mv(model_e, params_e, window_e)?;
    let (k_l, alpha_l) = mv(&model_l, &params_l, window_l)?;
    let re = alpha_e / k_e;
    let ratio_residual = (re - alpha_l / k_l).abs() / re.abs().max(f64::MIN_POSITIVE);

    let hp_e = limits::harmonic_point(model_e, params_e.c, &params_e.lambda, window_e, None)?;
    let pl0 = conjugate_params(&hp_e.params());
    let hp_l = limits::harmonic_point(&model_l, pl0.c, &pl0.lambda, window_l, None)?;
    let mi_e = delta_mi(model_e, &hp_e.u0, hp_e.k0, hp_e.branch)?;
    let mi_l = delta_mi(&model_l, &hp_l.u0, hp_l.k0, hp_l.branch)?;
    let ratio = mi_e.polynomial / mi_l.polynomial;
    let expected = hp_l.v0.powi(13);
    let printed = hp_l.v0.powi(-11);
    Ok(ConjugationReport {
        model_l,
        params_e: params_e.clone(),
        params_l,
        k_e,
        alpha_e,
        k_l,
        alpha_l,
        ratio_residual,
        v0_e: hp_e.v0,
        v0_l: hp_l.v0,
        k0_e: hp_e.k0,
        k0_l: hp_l.k0,
        v_product_residual: (hp_e.v0 * hp_l.v0 - 1.0).abs(),
        k_relation_residual: (hp_l.k0 * hp_e.v0 - hp_e.k0).abs() / hp_e.k0,
        polynomial_e: mi_e.polynomial,
        polynomial_l: mi_l.polynomial,
        polynomial_ratio: ratio,
        polynomial_ratio_expected: expected,
        polynomial_residual: (ratio - expected).abs() / expected.abs(),
        polynomial_ratio_printed: printed,
        polynomial_residual_printed: (ratio - printed).abs() / printed.abs(),
        polynomial_exponent: ratio.abs().ln() / hp_l.v0.ln(),
        verdict_e: mi_e.stability_verdict,
        verdict_l: mi_l.stability_verdict,
    })
}
