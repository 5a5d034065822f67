//! Turning points, period averages and profiles of periodic waves.
//!
//! Averages use `v = v2 + L sin^2(theta)` with `L = v3 - v2`. Writing
//! `mu - W = r(theta) L^2 sin^2 cos^2` the measure becomes
//! `d xi = sqrt(2 kappa / r) d theta`, smooth whenever both turning points
//! are simple.

use crate::dd::Dd;
use crate::error::{Error, LimitSide, Result};
use crate::model::{self, ModelSpec, WaveParams};
use crate::quad::{self, QuadConfig, QuadPlan};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeHint {
    Generic,
    NearHarmonic,
    NearSoliton,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitBracket {
    pub v2: f64,
    pub v3: f64,
    /// Third root across the nearer saddle. It sits below `v2` unless
    /// `mirrored`, in which case it sits above `v3`.
    pub v1: Option<f64>,
    pub mirrored: bool,
    pub regime_hint: RegimeHint,
    pub root_residuals: Vec<f64>,
    /// Bottom of the well `(v0, W(v0))`.
    pub well_min: (f64, f64),
    /// The adjacent local maximum of `W` on the `v1` side, if any.
    pub saddle: Option<(f64, f64)>,
}

impl OrbitBracket {
    pub fn amplitude(&self) -> f64 {
        self.v3 - self.v2
    }

    /// `delta = (v3 - v2)/2`.
    pub fn delta(&self) -> f64 {
        0.5 * (self.v3 - self.v2)
    }

    /// `rho = |v2 - v1| / (v3 - v2)` on the soliton side.
    pub fn rho(&self) -> Option<f64> {
        self.v1.map(|v1| {
            let gap = if self.mirrored { v1 - self.v3 } else { self.v2 - v1 };
            gap / (self.v3 - self.v2)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveState {
    pub xi: f64,
    pub k: f64,
    pub mean_u: Vec<f64>,
    pub mean_q: f64,
    pub alpha: f64,
    pub mean_h: f64,
    pub mean_lh: f64,
    pub quad_error: f64,
}

/// Raw period integrals, all taken over one full period in `xi`.
#[derive(Debug, Clone)]
pub struct PeriodIntegrals {
    pub xi: f64,
    pub int_q: f64,
    /// `int v`, and for two fields `int g`.
    pub int_u: Vec<f64>,
    /// `int (f + tau g^2/2)`.
    pub int_e: f64,
    /// `int kappa v_x^2`.
    pub int_kvx2: f64,
    pub theta: f64,
    /// Largest error estimate relative to component mass.
    pub rel_error: f64,
    /// Per-component absolute error estimates in the order
    /// `(xi, q, u..., e, kvx2, theta)`.
    pub abs_error: Vec<f64>,
    pub plan: QuadPlan,
}

pub(crate) const GRID: usize = 4000;

pub(crate) fn clip_window(model: &ModelSpec, window: (f64, f64)) -> Result<(f64, f64)> {
    let (mut a, mut b) = window;
    let (lo, hi) = model.domain;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::NoPeriodicOrbit("search window must be finite and increasing".into()));
    }
    let w = b - a;
    if a <= lo {
        a = lo + 1e-9 * w.max(1.0);
    }
    if b >= hi {
        b = hi - 1e-9 * w.max(1.0);
    }
    if a >= b {
        return Err(Error::NoPeriodicOrbit("search window lies outside the model domain".into()));
    }
    Ok((a, b))
}

fn wprime(model: &ModelSpec, v: f64, p: &WaveParams) -> Result<(f64, f64)> {
    let j = model::potential_jet(model, v, p, 2)?;
    Ok((j[1], j[2]))
}

/// Critical points of `W` in `(a, b)`: sign changes of `W'` on the grid,
/// refined by bisection.
pub fn critical_points(model: &ModelSpec, p: &WaveParams, a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let mut prev = wprime(model, xs[0], p)?.0;
    for i in 1..xs.len() {
        let cur = wprime(model, xs[i], p)?.0;
        if cur == 0.0 {
            out.push(xs[i]);
        } else if prev != 0.0 && prev.signum() != cur.signum() {
            let (mut lo, mut hi) = (xs[i - 1], xs[i]);
            let flo = prev;
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                let fm = wprime(model, m, p)?.0;
                if fm == 0.0 {
                    lo = m;
                    hi = m;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    out.dedup();
    Ok(out)
}

/// Root of `mu - W` in `[lo, hi]` given opposite (or zero) signs at the ends.
fn bisect_root(model: &ModelSpec, p: &WaveParams, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut dlo = model::level_gap(model, lo, p)?;
    if dlo == 0.0 {
        return Ok(lo);
    }
    let dhi = model::level_gap(model, hi, p)?;
    if dhi == 0.0 {
        return Ok(hi);
    }
    loop {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let dm = model::level_gap(model, m, p)?;
        if dm == 0.0 {
            return Ok(m);
        }
        if dm.signum() == dlo.signum() {
            lo = m;
            dlo = dm;
        } else {
            hi = m;
        }
    }
    // The closer endpoint in residual.
    let rl = model::level_gap(model, lo, p)?.abs();
    let rh = model::level_gap(model, hi, p)?.abs();
    Ok(if rl <= rh { lo } else { hi })
}

/// Locate consecutive simple roots `v2 < v3` of `mu - W` bracketing a well.
pub fn find_turning_points(model: &ModelSpec, params: &WaveParams, window: (f64, f64)) -> Result<OrbitBracket> {
    if params.lambda.len() != model.n() {
        return Err(Error::InvalidModel(format!(
            "lambda has length {} but the model has N = {}",
            params.lambda.len(),
            model.n()
        )));
    }
    let (a, b) = clip_window(model, window)?;
    let width = b - a;
    let crit = critical_points(model, params, a, b, GRID)?;
    let mut pts: Vec<f64> = (0..=GRID).map(|i| a + width * i as f64 / GRID as f64).collect();
    pts.extend_from_slice(&crit);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let d: Vec<f64> = pts.iter().map(|&v| model::level_gap(model, v, params)).collect::<Result<_>>()?;
    let scale = params.mu.abs().max(1.0);
    let tol_root = 1e-12 * scale;

    // Maximal runs of strictly positive gap.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        if d[i] > 0.0 {
            let start = i;
            while i + 1 < pts.len() && d[i + 1] > 0.0 {
                i += 1;
            }
            runs.push((start, i));
        }
        i += 1;
    }
    let bounded: Vec<(usize, usize)> =
        runs.iter().copied().filter(|&(s, e)| s > 0 && e + 1 < pts.len()).collect();

    let classify_tangent = |crit: &[f64]| -> Result<Option<LimitSide>> {
        for &v in crit {
            let gap = model::level_gap(model, v, params)?;
            if gap.abs() <= tol_root {
                let (_, w2) = wprime(model, v, params)?;
                return Ok(Some(if w2 > 0.0 { LimitSide::Harmonic } else { LimitSide::Soliton }));
            }
        }
        Ok(None)
    };

    if bounded.is_empty() {
        if let Some(side) = classify_tangent(&crit)? {
            return Err(Error::DegenerateOrbit { side, gap: 0.0 });
        }
        return Err(Error::NoPeriodicOrbit(format!("mu - W has no bounded positive interval in ({a}, {b})")));
    }
    if bounded.len() > 1 {
        return Err(Error::MultipleWells);
    }
    let (s, e) = bounded[0];
    let v2 = bisect_root(model, params, pts[s - 1], pts[s])?;
    let v3 = bisect_root(model, params, pts[e], pts[e + 1])?;
    let degenerate_tol = 1e-6 * width;
    if v3 - v2 < degenerate_tol {
        return Err(Error::DegenerateOrbit { side: LimitSide::Harmonic, gap: v3 - v2 });
    }
    // A root that is also critical means the level touches a saddle.
    for &v in &[v2, v3] {
        let (w1, w2) = wprime(model, v, params)?;
        let curv = w2.abs().max(1e-300);
        if w1.abs() <= 1e-9 * curv * width {
            let side = if w2 < 0.0 { LimitSide::Soliton } else { LimitSide::Harmonic };
            return Err(Error::DegenerateOrbit { side, gap: 0.0 });
        }
    }

    // Neighbouring roots beyond the bracket, one on each side.
    let left_root = (0..s).rev().find(|&j| d[j] <= 0.0).and_then(|j0| {
        (0..j0).rev().find(|&j| d[j] > 0.0).map(|j| (j, j + 1))
    });
    let right_root = ((e + 1)..pts.len()).find(|&j| d[j] <= 0.0).and_then(|j0| {
        ((j0 + 1)..pts.len()).find(|&j| d[j] > 0.0).map(|j| (j - 1, j))
    });
    let left = match left_root {
        Some((j, j1)) => Some(bisect_root(model, params, pts[j], pts[j1])?),
        None => None,
    };
    let right = match right_root {
        Some((j, j1)) => Some(bisect_root(model, params, pts[j], pts[j1])?),
        None => None,
    };
    let (v1, mirrored) = match (left, right) {
        (Some(l), Some(r)) => {
            if v2 - l <= r - v3 {
                (Some(l), false)
            } else {
                (Some(r), true)
            }
        }
        (Some(l), None) => (Some(l), false),
        (None, Some(r)) => (Some(r), true),
        (None, None) => (None, false),
    };
    if let Some(v1) = v1 {
        let gap = if mirrored { v1 - v3 } else { v2 - v1 };
        if gap < degenerate_tol {
            return Err(Error::DegenerateOrbit { side: LimitSide::Soliton, gap });
        }
    }

    // Well bottom and adjacent saddle from the critical points.
    let mut well_min = None;
    for &c in crit.iter().filter(|&&c| c > v2 && c < v3) {
        let w = model::potential_dd(model, c, params)?.to_f64();
        match well_min {
            Some((_, wm)) if wm <= w => {}
            _ => well_min = Some((c, w)),
        }
    }
    let well_min = match well_min {
        Some(x) => x,
        None => return Err(Error::NoPeriodicOrbit("bracket without an interior minimum".into())),
    };
    let saddle = match v1 {
        Some(v1) => {
            let (lo, hi) = if mirrored { (v3, v1) } else { (v1, v2) };
            let mut best: Option<(f64, f64)> = None;
            for &c in crit.iter().filter(|&&c| c > lo && c < hi) {
                let w = model::potential_dd(model, c, params)?.to_f64();
                if best.map(|(_, bw)| w > bw).unwrap_or(true) {
                    best = Some((c, w));
                }
            }
            best
        }
        None => None,
    };

    let residuals = vec![
        model::level_gap(model, v2, params)?.abs(),
        model::level_gap(model, v3, params)?.abs(),
    ];
    let l = v3 - v2;
    let rho = v1.map(|v1| if mirrored { (v1 - v3) / l } else { (v2 - v1) / l });
    let depth = params.mu - well_min.1;
    let barrier = saddle.map(|(_, ws)| ws - well_min.1);
    let regime_hint = match (rho, barrier) {
        (Some(r), _) if r < 1e-2 => RegimeHint::NearSoliton,
        (_, Some(bar)) if depth < 1e-4 * bar => RegimeHint::NearHarmonic,
        (None, None) if l < 1e-3 * width => RegimeHint::NearHarmonic,
        _ => RegimeHint::Generic,
    };
    Ok(OrbitBracket { v2, v3, v1, mirrored, regime_hint, root_residuals: residuals, well_min, saddle })
}

/// Per-orbit constants reused by every integrand evaluation.
struct OrbitCtx<'a> {
    model: &'a ModelSpec,
    params: &'a WaveParams,
    v2: f64,
    v3: f64,
    l: f64,
    w2: [f64; 4],
    w3: [f64; 4],
}

impl<'a> OrbitCtx<'a> {
    fn new(model: &'a ModelSpec, params: &'a WaveParams, br: &OrbitBracket) -> Result<Self> {
        let j2 = model::potential_jet(model, br.v2, params, 3)?;
        let j3 = model::potential_jet(model, br.v3, params, 3)?;
        Ok(OrbitCtx {
            model,
            params,
            v2: br.v2,
            v3: br.v3,
            l: br.v3 - br.v2,
            w2: [j2[0], j2[1], j2[2], j2[3]],
            w3: [j3[0], j3[1], j3[2], j3[3]],
        })
    }

    /// `(v, r)` at angle `theta`, with `mu - W = r L^2 sin^2 cos^2`.
    fn point(&self, theta: f64) -> Result<(f64, f64, f64)> {
        let (sn, cs) = theta.sin_cos();
        let s2 = sn * sn;
        let c2 = cs * cs;
        let s = self.l * s2;
        let t = self.l * c2;
        let (x, v) = if s <= t {
            let x = Dd::new(self.v2) + Dd::new(s);
            (x, x.to_f64())
        } else {
            let x = Dd::new(self.v3) - Dd::new(t);
            (x, x.to_f64())
        };
        let r = if s2 < 1e-6 {
            (-self.w2[1] - 0.5 * self.w2[2] * s - self.w2[3] * s * s / 6.0) / t
        } else if c2 < 1e-6 {
            (self.w3[1] - 0.5 * self.w3[2] * t + self.w3[3] * t * t / 6.0) / s
        } else {
            model::level_gap_at(self.model, x, self.params)? / (s * t)
        };
        let gap = r * s * t;
        if !(r > 0.0) {
            return Err(Error::QuadratureNotConverged { estimate: f64::INFINITY });
        }
        Ok((v, r, gap))
    }
}

fn initial_breaks(br: &OrbitBracket) -> Vec<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut b = vec![0.0, 0.5 * half_pi, half_pi];
    if let Some(rho) = br.rho() {
        if rho < 0.25 {
            // Grade toward the end facing the saddle.
            let mut th = rho.sqrt();
            while th < 0.4 * half_pi {
                b.push(if br.mirrored { half_pi - th } else { th });
                th *= 4.0;
            }
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        }
    }
    b
}

/// Dimension of the integrand vector for a model with `n` fields.
fn dim(n: usize) -> usize {
    n + 5
}

fn integrand(ctx: &OrbitCtx, theta: f64, out: &mut [f64]) -> Result<()> {
    let m = ctx.model;
    let (v, r, gap) = ctx.point(theta)?;
    let kappa = m.kappa.eval(v);
    if !(kappa > 0.0) {
        return Err(Error::Domain { v, lo: m.domain.0, hi: m.domain.1 });
    }
    let dxi = (2.0 * kappa / r).sqrt();
    let n = m.n();
    let (q, e, u2) = if m.is_system() {
        let g = model::velocity_jet(m, v, ctx.params.c, ctx.params.lambda2())?[0];
        let tau = m.tau_jet(v, 0)[0];
        (v * g / m.b, m.f.eval(v) + 0.5 * tau * g * g, g)
    } else {
        (v * v / (2.0 * m.b), m.f.eval(v), 0.0)
    };
    out[0] = 2.0 * dxi;
    out[1] = 2.0 * q * dxi;
    out[2] = 2.0 * v * dxi;
    if n == 2 {
        out[3] = 2.0 * u2 * dxi;
    }
    out[n + 2] = 2.0 * e * dxi;
    out[n + 3] = 2.0 * 2.0 * gap * dxi;
    // theta-integrand: 2 * 2 sqrt(2 kappa gap) * (dv/dtheta), dv = 2 L sin cos.
    let (sn, cs) = theta.sin_cos();
    out[n + 4] = 2.0 * (2.0 * kappa * r).sqrt() * 2.0 * ctx.l * ctx.l * sn * sn * cs * cs;
    Ok(())
}

fn pack(n: usize, v: &[f64], rel_error: f64, abs_error: Vec<f64>, plan: QuadPlan) -> PeriodIntegrals {
    PeriodIntegrals {
        xi: v[0],
        int_q: v[1],
        int_u: v[2..2 + n].to_vec(),
        int_e: v[n + 2],
        int_kvx2: v[n + 3],
        theta: v[n + 4],
        rel_error,
        abs_error,
        plan,
    }
}

/// All period integrals by adaptive quadrature.
pub fn period_integrals(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    cfg: &QuadConfig,
) -> Result<PeriodIntegrals> {
    let ctx = OrbitCtx::new(model, params, br)?;
    let n = model.n();
    let res = quad::integrate_adaptive(|t, out| integrand(&ctx, t, out), &initial_breaks(br), dim(n), cfg)?;
    Ok(pack(n, &res.value, res.rel_error(), res.error.clone(), res.plan))
}

/// Period integrals on a frozen panel plan (for finite differences).
pub fn period_integrals_on(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    plan: &QuadPlan,
) -> Result<PeriodIntegrals> {
    let ctx = OrbitCtx::new(model, params, br)?;
    let n = model.n();
    let v = quad::integrate_plan(|t, out| integrand(&ctx, t, out), plan, dim(n))?;
    Ok(pack(n, &v, 0.0, vec![0.0; dim(n)], plan.clone()))
}

pub fn state_from_integrals(model: &ModelSpec, pi: &PeriodIntegrals) -> WaveState {
    let xi = pi.xi;
    let k = 1.0 / xi;
    let mean_u: Vec<f64> = pi.int_u.iter().map(|x| x / xi).collect();
    let mean_q = pi.int_q / xi;
    let alpha = (mean_q - model::big_q(model, &mean_u)) / k;
    let kvx2 = pi.int_kvx2 / xi;
    let mean_h = pi.int_e / xi + 0.5 * kvx2;
    WaveState {
        xi,
        k,
        mean_u,
        mean_q,
        alpha,
        mean_h,
        mean_lh: kvx2 - mean_h,
        quad_error: pi.rel_error,
    }
}

/// Period, means, `alpha`, averaged Hamiltonian and averaged `LH`.
pub fn averaged_state(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    quad_order: usize,
) -> Result<WaveState> {
    let cfg = QuadConfig { order: quad_order, ..QuadConfig::default() };
    let pi = period_integrals(model, params, br, &cfg)?;
    Ok(state_from_integrals(model, &pi))
}

/// Period means `<F>` of a pointwise quantity `F(v, mu - W(v))` written
/// into a buffer of length `dim`.
pub fn period_means<F>(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    cfg: &QuadConfig,
    dim: usize,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(f64, f64, &mut [f64]) -> Result<()>,
{
    let ctx = OrbitCtx::new(model, params, br)?;
    let mut buf = vec![0.0; dim];
    let res = quad::integrate_adaptive(
        |t, out| {
            let (v, r, gap) = ctx.point(t)?;
            let dxi = (2.0 * model.kappa.eval(v) / r).sqrt();
            f(v, gap, &mut buf)?;
            out[0] = dxi;
            for i in 0..dim {
                out[1 + i] = buf[i] * dxi;
            }
            Ok(())
        },
        &initial_breaks(br),
        dim + 1,
        cfg,
    )?;
    Ok(res.value[1..].iter().map(|x| x / res.value[0]).collect())
}

/// Samples `(xi, U(xi))` on a uniform grid of `n` points over `[0, Xi]`.
pub fn profile_sample(
    model: &ModelSpec,
    params: &WaveParams,
    br: &OrbitBracket,
    n: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    if n < 2 {
        return Err(Error::InvalidModel("profile_sample needs n >= 2".into()));
    }
    let ctx = OrbitCtx::new(model, params, br)?;
    let rate = |t: f64| -> Result<f64> {
        let (v, r, _) = ctx.point(t)?;
        Ok((2.0 * model.kappa.eval(v) / r).sqrt())
    };
    // Half-period map xi(theta) on an adaptive plan.
    let res = quad::integrate_adaptive(
        |t, out| {
            out[0] = rate(t)?;
            Ok(())
        },
        &initial_breaks(br),
        1,
        &QuadConfig::default(),
    )?;
    let plan = res.plan;
    let mut cum = vec![0.0];
    for &(a, b) in &plan.panels {
        let sub = QuadPlan { panels: vec![(a, b)], order: plan.order };
        let v = quad::integrate_plan(|t, out| {
            out[0] = rate(t)?;
            Ok(())
        }, &sub, 1)?;
        cum.push(cum.last().unwrap() + v[0]);
    }
    let half = *cum.last().unwrap();
    let xi_of = |theta: f64| -> Result<f64> {
        let j = plan.panels.iter().position(|&(_, b)| theta <= b).unwrap_or(plan.panels.len() - 1);
        let (a, _) = plan.panels[j];
        if theta <= a {
            return Ok(cum[j]);
        }
        let sub = QuadPlan { panels: vec![(a, theta)], order: plan.order };
        let v = quad::integrate_plan(|t, out| {
            out[0] = rate(t)?;
            Ok(())
        }, &sub, 1)?;
        Ok(cum[j] + v[0])
    };
    let period = 2.0 * half;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let xi = period * i as f64 / (n - 1) as f64;
        let target = if xi <= half { xi } else { period - xi };
        let theta = if target <= 0.0 {
            0.0
        } else if target >= half {
            half_pi
        } else {
            let (mut lo, mut hi) = (0.0, half_pi);
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                if xi_of(m)? < target {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            0.5 * (lo + hi)
        };
        let v = if theta == 0.0 {
            br.v2
        } else if theta == half_pi {
            br.v3
        } else {
            br.v2 + (br.v3 - br.v2) * theta.sin().powi(2)
        };
        let u = model::state_at(model, v, params.c, params.lambda2())?;
        out.push((xi, u));
    }
    Ok(out)
}

/// Result of the shooting oracle, with the first-integral drift.
#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub state: WaveState,
    pub theta: f64,
    pub energy_drift: f64,
    pub steps: usize,
}

/// Integrate the second-order profile equation from `v2` through one full
/// period with an adaptive Dormand-Prince 5(4) scheme, stopping when
/// `v_xi` turns from negative to positive. Independent of the quadrature path.
pub fn shooting_oracle(model: &ModelSpec, params: &WaveParams, br: &OrbitBracket) -> Result<ShootingResult> {
    let n = model.n();
    let dimq = n + 4; // q, u..., e, kvx2, theta-density
    let rhs = |y: &[f64], out: &mut [f64]| -> Result<()> {
        let v = y[0];
        let p = y[1];
        let kj = model.kappa_jet(v, 1);
        let w = model::potential_jet(model, v, params, 1)?;
        out[0] = p;
        out[1] = -(0.5 * kj[1] * p * p + w[1]) / kj[0];
        let (q, e, g) = if model.is_system() {
            let g = model::velocity_jet(model, v, params.c, params.lambda2())?[0];
            let tau = model.tau_jet(v, 0)[0];
            (v * g / model.b, model.f.eval(v) + 0.5 * tau * g * g, g)
        } else {
            (v * v / (2.0 * model.b), model.f.eval(v), 0.0)
        };
        out[2] = q;
        out[3] = v;
        if n == 2 {
            out[4] = g;
        }
        out[2 + n + 1] = e;
        out[2 + n + 2] = kj[0] * p * p;
        let _ = dimq;
        Ok(())
    };
    let dimy = 2 + n + 3;
    let mut y = vec![0.0; dimy];
    y[0] = br.v2;
    let energy = |y: &[f64]| -> Result<f64> {
        let w = model::potential_dd(model, y[0], params)?.to_f64();
        Ok(0.5 * model.kappa.eval(y[0]) * y[1] * y[1] + w - params.mu)
    };
    let scale = params.mu.abs().max(1.0);
    let l = br.v3 - br.v2;
    let mut t = 0.0;
    let mut h = 1e-3 * l.max(1e-3);
    let rtol = 1e-13;
    let mut crossings = 0;
    let mut drift: f64 = 0.0;
    let mut steps = 0;
    loop {
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::IntegratorFailure("step budget exhausted".into()));
        }
        let (ynew, err) = dp45_step(&rhs, &y, h)?;
        let sc: f64 = (0..2).map(|i| err[i].abs() / (rtol * (1.0 + y[i].abs().max(ynew[i].abs())))).fold(0.0, f64::max);
        if !sc.is_finite() {
            h *= 0.25;
            continue;
        }
        if sc > 1.0 {
            h *= (0.9 * sc.powf(-0.2)).max(0.1);
            if h < 1e-14 * l {
                return Err(Error::IntegratorFailure("step size underflow".into()));
            }
            continue;
        }
        // Sign change of v_xi: + to - at v3, - to + back at v2.
        let turned = if crossings == 0 { y[1] > 0.0 && ynew[1] <= 0.0 } else { y[1] < 0.0 && ynew[1] >= 0.0 };
        if turned && t > 0.0 {
            let (mut lo, mut hi) = (0.0, h);
            let mut yev = ynew.clone();
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                let (ym, _) = dp45_step(&rhs, &y, m)?;
                let before = if crossings == 0 { ym[1] > 0.0 } else { ym[1] < 0.0 };
                if before {
                    lo = m;
                } else {
                    hi = m;
                    yev = ym;
                }
            }
            // Linear interpolation on v_xi for the final sliver.
            let (ylo, _) = dp45_step(&rhs, &y, lo)?;
            let frac = if yev[1] != ylo[1] { ylo[1] / (ylo[1] - yev[1]) } else { 0.0 };
            let hev = lo + frac * (hi - lo);
            let (yfin, _) = dp45_step(&rhs, &y, hev)?;
            drift = drift.max(energy(&yfin)?.abs() / scale);
            crossings += 1;
            if crossings == 2 {
                t += hev;
                y = yfin;
                break;
            }
            t += hev;
            y = yfin;
            h = h.min(1e-2 * l.max(1e-3));
            continue;
        }
        t += h;
        y = ynew;
        drift = drift.max(energy(&y)?.abs() / scale);
        h *= (0.9 * sc.max(1e-10).powf(-0.2)).min(5.0);
    }
    let xi = t;
    let int_u = y[3..3 + n].to_vec();
    let pi = PeriodIntegrals {
        xi,
        int_q: y[2],
        int_u,
        int_e: y[2 + n + 1],
        int_kvx2: y[2 + n + 2],
        theta: y[2 + n + 2],
        rel_error: 0.0,
        abs_error: vec![],
        plan: QuadPlan { panels: vec![], order: 0 },
    };
    let state = state_from_integrals(model, &pi);
    Ok(ShootingResult { state, theta: pi.theta, energy_drift: drift, steps })
}

fn dp45_step<F>(rhs: &F, y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let d = y.len();
    let mut k = vec![vec![0.0; d]; 7];
    rhs(y, &mut k[0])?;
    let mut tmp = vec![0.0; d];
    for s in 1..7 {
        for i in 0..d {
            let mut acc = y[i];
            for j in 0..s {
                acc += h * A[s - 1][j] * k[j][i];
            }
            tmp[i] = acc;
        }
        let (head, tail) = k.split_at_mut(s);
        let _ = head;
        rhs(&tmp, &mut tail[0])?;
    }
    let mut y5 = vec![0.0; d];
    let mut err = vec![0.0; d];
    for i in 0..d {
        let mut s5 = 0.0;
        let mut s4 = 0.0;
        for j in 0..7 {
            s5 += B5[j] * k[j][i];
            s4 += B4[j] * k[j][i];
        }
        y5[i] = y[i] + h * s5;
        err[i] = h * (s5 - s4);
    }
    Ok((y5, err))
}
