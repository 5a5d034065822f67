//! The system class: `H = kappa(v) v_x^2 / 2 + f(v)` (plus `tau(v) u^2 / 2`
//! for two fields), the profile potential `W`, the reduced velocity `g`, the
//! reduced impulse `q`, and the constant structural matrices.

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::func::{Family, Func};
use crate::jet::Jet;
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Scalar,
    EulerKorteweg,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub b: f64,
    pub f: Func,
    pub kappa: Func,
    pub tau: Option<Func>,
    pub domain: (f64, f64),
}

/// The `(mu, c, lambda)` chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveParams {
    pub mu: f64,
    pub c: f64,
    pub lambda: Vec<f64>,
}

impl WaveParams {
    pub fn new(mu: f64, c: f64, lambda: &[f64]) -> Self {
        WaveParams { mu, c, lambda: lambda.to_vec() }
    }

    /// Flattened `(mu, c, lambda...)`.
    pub fn as_vec(&self) -> Vec<f64> {
        let mut p = vec![self.mu, self.c];
        p.extend_from_slice(&self.lambda);
        p
    }

    pub fn from_slice(p: &[f64]) -> Self {
        WaveParams { mu: p[0], c: p[1], lambda: p[2..].to_vec() }
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda.get(1).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralMatrices {
    pub b: DMatrix<f64>,
    pub binv: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub bb: DMatrix<f64>,
}

impl ModelSpec {
    /// Scalar model `v_t = d_x(b dH)`. Without an explicit domain the whole
    /// line is used unless `kappa` needs `v > 0`.
    pub fn scalar(b: f64, f: Func, kappa: Func, domain: Option<(f64, f64)>) -> Result<Self> {
        let domain = domain.unwrap_or_else(|| default_domain(&kappa, None));
        let m = ModelSpec { kind: ModelKind::Scalar, b, f, kappa, tau: None, domain };
        m.check()?;
        Ok(m)
    }

    pub fn euler_korteweg(
        b: f64,
        f: Func,
        kappa: Func,
        tau: Func,
        domain: Option<(f64, f64)>,
    ) -> Result<Self> {
        let domain = domain.unwrap_or_else(|| default_domain(&kappa, Some(&tau)));
        let m = ModelSpec { kind: ModelKind::EulerKorteweg, b, f, kappa, tau: Some(tau), domain };
        m.check()?;
        Ok(m)
    }

    /// gKdV with `f = -v^3/6`, `b = 1`, `kappa = 1`.
    pub fn kdv() -> Self {
        ModelSpec::scalar(1.0, Func::poly(&[0.0, 0.0, 0.0, -1.0 / 6.0]), Func::constant(1.0), None)
            .expect("kdv model is valid")
    }

    fn check(&self) -> Result<()> {
        if !(self.b != 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidModel("b must be a nonzero finite number".into()));
        }
        let (lo, hi) = self.domain;
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidModel("domain must be a nonempty open interval".into()));
        }
        let all = [Some(&self.f), Some(&self.kappa), self.tau.as_ref()];
        for g in all.iter().flatten() {
            if g.coef.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidModel("coefficients must be finite".into()));
            }
            if g.lo < 0 && lo < 0.0 && hi > 0.0 {
                return Err(Error::InvalidModel("negative powers need a domain avoiding 0".into()));
            }
        }
        for v in sample_domain(self.domain) {
            if self.kappa.eval(v) <= 0.0 {
                return Err(Error::InvalidModel(format!("kappa({v}) is not positive")));
            }
            if let Some(t) = &self.tau {
                if t.eval(v) <= 0.0 {
                    return Err(Error::InvalidModel(format!("tau({v}) is not positive")));
                }
            }
        }
        Ok(())
    }

    /// Restrict to the families with closed-form support: `f` polynomial of
    /// degree at most 8, `kappa` a polynomial of degree at most 4 or `1/(4v)`,
    /// `tau` constant or affine.
    pub fn check_families(&self) -> Result<()> {
        if !self.f.is_polynomial() || self.f.hi() > 8 {
            return Err(Error::InvalidModel("f must be a polynomial of degree <= 8".into()));
        }
        let kappa_ok = match self.kappa.family {
            Family::InverseFourV => true,
            _ => self.kappa.is_polynomial() && self.kappa.hi() <= 4,
        };
        if !kappa_ok {
            return Err(Error::InvalidModel("kappa must be a polynomial of degree <= 4 or 1/(4v)".into()));
        }
        if let Some(t) = &self.tau {
            if !t.is_affine() {
                return Err(Error::InvalidModel("tau must be constant or affine".into()));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        match self.kind {
            ModelKind::Scalar => 1,
            ModelKind::EulerKorteweg => 2,
        }
    }

    pub fn is_system(&self) -> bool {
        self.kind == ModelKind::EulerKorteweg
    }

    pub fn in_domain(&self, v: f64) -> bool {
        v > self.domain.0 && v < self.domain.1
    }

    pub fn check_domain(&self, v: f64) -> Result<()> {
        if self.in_domain(v) && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain { v, lo: self.domain.0, hi: self.domain.1 })
        }
    }

    pub fn kappa_jet(&self, v: f64, order: usize) -> Vec<f64> {
        self.kappa.jet(v, order)
    }

    /// `tau` and derivatives; the scalar case reports `tau = 1`.
    pub fn tau_jet(&self, v: f64, order: usize) -> Vec<f64> {
        match &self.tau {
            Some(t) => t.jet(v, order),
            None => {
                let mut j = vec![0.0; order + 1];
                j[0] = 1.0;
                j
            }
        }
    }

    /// Short human-readable identifier used in report echoes.
    pub fn id(&self) -> String {
        let kind = match self.kind {
            ModelKind::Scalar => "scalar",
            ModelKind::EulerKorteweg => "euler_korteweg",
        };
        format!("{kind}(b={}, deg f={}, kappa={:?}, tau={})", self.b, self.f.hi(), self.kappa.family,
            match &self.tau {
                Some(t) if t.is_constant() => "const",
                Some(t) if t.is_affine() => "affine",
                Some(_) => "laurent",
                None => "none",
            })
    }
}

fn default_domain(kappa: &Func, tau: Option<&Func>) -> (f64, f64) {
    let needs_positive = !kappa.is_constant() || tau.map(|t| !t.is_constant()).unwrap_or(false);
    if needs_positive {
        (0.0, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

fn sample_domain((lo, hi): (f64, f64)) -> Vec<f64> {
    let a = if lo.is_finite() { lo } else { -1e3 };
    let b = if hi.is_finite() { hi } else { 1e3 };
    let n = 400;
    let mut out = Vec::with_capacity(n + 40);
    for i in 1..n {
        out.push(a + (b - a) * i as f64 / n as f64);
    }
    // Log-spaced points hug an open endpoint at zero.
    if lo == 0.0 {
        for e in -8..4 {
            out.push(10f64.powi(e));
        }
    }
    out.retain(|v| *v > lo && *v < hi);
    out
}

/// `W` and its `v`-derivatives up to `order <= 4`.
pub fn potential_jet(model: &ModelSpec, v: f64, params: &WaveParams, order: usize) -> Result<Vec<f64>> {
    if order > 4 {
        return Err(Error::OrderTooHigh(order));
    }
    model.check_domain(v)?;
    let f = Jet::from_derivs(&model.f.jet(v, 4));
    let x = Jet::var(v);
    let lam1 = params.lambda[0];
    let w = match model.kind {
        ModelKind::Scalar => -f - (x * x).scale(0.5 * params.c / model.b) - x.scale(lam1),
        ModelKind::EulerKorteweg => {
            let tau = Jet::from_derivs(&model.tau_jet(v, 4));
            if tau.0[0] <= 0.0 {
                return Err(Error::Domain { v, lo: model.domain.0, hi: model.domain.1 });
            }
            let phi = x.scale(params.c / model.b) + Jet::constant(params.lambda2());
            -f - x.scale(lam1) + (phi * phi * tau.recip()).scale(0.5)
        }
    };
    Ok(w.derivs()[..=order].to_vec())
}

/// `W` in double-double precision.
pub fn potential_dd(model: &ModelSpec, v: f64, params: &WaveParams) -> Result<Dd> {
    potential_dd_at(model, Dd::new(v), params)
}

/// `W` at a double-double abscissa.
pub fn potential_dd_at(model: &ModelSpec, x: Dd, params: &WaveParams) -> Result<Dd> {
    model.check_domain(x.to_f64())?;
    let c_over_b = Dd::new(params.c) / Dd::new(model.b);
    let lam1 = Dd::new(params.lambda[0]);
    let f = model.f.eval_dd(x);
    Ok(match model.kind {
        ModelKind::Scalar => -f - c_over_b * x * x * Dd::new(0.5) - lam1 * x,
        ModelKind::EulerKorteweg => {
            let tau = model.tau.as_ref().unwrap().eval_dd(x);
            let phi = c_over_b * x + Dd::new(params.lambda2());
            -f - lam1 * x + phi * phi / (tau * Dd::new(2.0))
        }
    })
}

/// `mu - W(v)` evaluated without cancellation loss.
pub fn level_gap(model: &ModelSpec, v: f64, params: &WaveParams) -> Result<f64> {
    level_gap_at(model, Dd::new(v), params)
}

pub fn level_gap_at(model: &ModelSpec, x: Dd, params: &WaveParams) -> Result<f64> {
    Ok((Dd::new(params.mu) - potential_dd_at(model, x, params)?).to_f64())
}

/// `(g, g_v, g_vv, g_vvv)` from the recursions obtained by differentiating
/// `b tau g = -c v - b lambda2`.
pub fn velocity_jet(model: &ModelSpec, v: f64, c: f64, lambda2: f64) -> Result<[f64; 4]> {
    if !model.is_system() {
        return Err(Error::NotSystem);
    }
    model.check_domain(v)?;
    let t = model.tau_jet(v, 3);
    let b = model.b;
    let bt = b * t[0];
    let g = -(c / b * v + lambda2) / t[0];
    let g1 = (-c - b * t[1] * g) / bt;
    let g2 = (-b * t[2] * g - 2.0 * b * t[1] * g1) / bt;
    let g3 = (-b * t[3] * g - 3.0 * b * t[2] * g1 - 3.0 * b * t[1] * g2) / bt;
    Ok([g, g1, g2, g3])
}

/// `q(v) = Q(v, g(v))`, or `v^2/(2b)` for one field.
pub fn impulse_q(model: &ModelSpec, v: f64, c: f64, lambda2: f64) -> Result<f64> {
    Ok(impulse_jet(model, v, c, lambda2)?[0])
}

/// `(q, q_v, q_vv)`.
pub fn impulse_jet(model: &ModelSpec, v: f64, c: f64, lambda2: f64) -> Result<[f64; 3]> {
    let b = model.b;
    match model.kind {
        ModelKind::Scalar => {
            model.check_domain(v)?;
            Ok([v * v / (2.0 * b), v / b, 1.0 / b])
        }
        ModelKind::EulerKorteweg => {
            let g = velocity_jet(model, v, c, lambda2)?;
            Ok([v * g[0] / b, (g[0] + v * g[1]) / b, (2.0 * g[1] + v * g[2]) / b])
        }
    }
}

/// Constant state `U` carried by the level `v`.
pub fn state_at(model: &ModelSpec, v: f64, c: f64, lambda2: f64) -> Result<Vec<f64>> {
    match model.kind {
        ModelKind::Scalar => Ok(vec![v]),
        ModelKind::EulerKorteweg => Ok(vec![v, velocity_jet(model, v, c, lambda2)?[0]]),
    }
}

/// `Q(U)`.
pub fn big_q(model: &ModelSpec, u: &[f64]) -> f64 {
    match model.kind {
        ModelKind::Scalar => u[0] * u[0] / (2.0 * model.b),
        ModelKind::EulerKorteweg => u[0] * u[1] / model.b,
    }
}

/// `grad Q(U) = B^-1 U`.
pub fn grad_q(model: &ModelSpec, u: &[f64]) -> Vec<f64> {
    match model.kind {
        ModelKind::Scalar => vec![u[0] / model.b],
        ModelKind::EulerKorteweg => vec![u[1] / model.b, u[0] / model.b],
    }
}

pub fn structural_matrices(model: &ModelSpec) -> StructuralMatrices {
    let n = model.n();
    let b = model.b;
    let bm = match model.kind {
        ModelKind::Scalar => DMatrix::from_row_slice(1, 1, &[b]),
        ModelKind::EulerKorteweg => DMatrix::from_row_slice(2, 2, &[0.0, b, b, 0.0]),
    };
    let binv = match model.kind {
        ModelKind::Scalar => DMatrix::from_row_slice(1, 1, &[1.0 / b]),
        ModelKind::EulerKorteweg => DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / b, 1.0 / b, 0.0]),
    };
    let mut s = DMatrix::zeros(n + 2, n + 2);
    let mut bb = DMatrix::zeros(n + 2, n + 2);
    s[(0, 1)] = -1.0;
    s[(1, 0)] = -1.0;
    bb[(0, 1)] = 1.0;
    bb[(1, 0)] = 1.0;
    for i in 0..n {
        for j in 0..n {
            s[(2 + i, 2 + j)] = bm[(i, j)];
            bb[(2 + i, 2 + j)] = bm[(i, j)];
        }
    }
    StructuralMatrices { b: bm, binv, s, bb }
}

/// Inverse of `S` in closed form.
pub fn s_inverse(model: &ModelSpec) -> DMatrix<f64> {
    let sm = structural_matrices(model);
    let n = model.n();
    let mut si = DMatrix::zeros(n + 2, n + 2);
    si[(0, 1)] = -1.0;
    si[(1, 0)] = -1.0;
    for i in 0..n {
        for j in 0..n {
            si[(2 + i, 2 + j)] = sm.binv[(i, j)];
        }
    }
    si
}

/// Inverse of the double-struck B operator in closed form.
pub fn bb_inverse(model: &ModelSpec) -> DMatrix<f64> {
    let mut m = s_inverse(model);
    m[(0, 1)] = 1.0;
    m[(1, 0)] = 1.0;
    m
}

/// `grad_U H(U, 0)`.
pub fn grad_h_u(model: &ModelSpec, u: &[f64]) -> Result<Vec<f64>> {
    let v = u[0];
    model.check_domain(v)?;
    let f = model.f.jet(v, 1);
    match model.kind {
        ModelKind::Scalar => Ok(vec![f[1]]),
        ModelKind::EulerKorteweg => {
            let t = model.tau_jet(v, 1);
            Ok(vec![f[1] + 0.5 * t[1] * u[1] * u[1], t[0] * u[1]])
        }
    }
}

/// `Hess_U H(U, 0)`.
pub fn hess_h_u(model: &ModelSpec, u: &[f64]) -> Result<DMatrix<f64>> {
    let v = u[0];
    model.check_domain(v)?;
    let f = model.f.jet(v, 2);
    match model.kind {
        ModelKind::Scalar => Ok(DMatrix::from_row_slice(1, 1, &[f[2]])),
        ModelKind::EulerKorteweg => {
            let t = model.tau_jet(v, 2);
            let u1 = u[1];
            Ok(DMatrix::from_row_slice(
                2,
                2,
                &[f[2] + 0.5 * t[2] * u1 * u1, t[1] * u1, t[1] * u1, t[0]],
            ))
        }
    }
}

/// `H(U, 0)`.
pub fn h_u(model: &ModelSpec, u: &[f64]) -> Result<f64> {
    let v = u[0];
    model.check_domain(v)?;
    let f = model.f.eval(v);
    Ok(match model.kind {
        ModelKind::Scalar => f,
        ModelKind::EulerKorteweg => f + 0.5 * model.tau_jet(v, 0)[0] * u[1] * u[1],
    })
}
