//! Gauss-Legendre rules and a panel-adaptive driver for vector integrands.
//!
//! Each panel is integrated with the `n`-point and `2n`-point rules; the
//! difference is the panel's error estimate and the `2n` value is kept.
//! The final panel list is returned as a [`QuadPlan`] so that nearby
//! parameter values can be integrated on the identical rule, which keeps
//! finite differences of quadrature results smooth.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights on [-1, 1], computed by Newton on `P_n` and cached.
pub fn gauss_legendre(n: usize) -> Arc<GlRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GlRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(compute_rule(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_rule(n: usize) -> GlRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GlRule { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Base Gauss-Legendre order; panels are checked against twice this.
    pub order: usize,
    /// Relative tolerance per component, measured against its L1 mass.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { order: 20, tol: 1e-13, max_panels: 4000 }
    }
}

/// The panel subdivision chosen by an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadPlan {
    pub panels: Vec<(f64, f64)>,
    pub order: usize,
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<f64>,
    /// Per-component error estimate (difference between orders n and 2n).
    pub error: Vec<f64>,
    /// Per-component integral of the absolute integrand.
    pub mass: Vec<f64>,
    pub plan: QuadPlan,
}

impl QuadResult {
    /// Largest error estimate relative to component mass.
    pub fn rel_error(&self) -> f64 {
        self.error
            .iter()
            .zip(&self.mass)
            .map(|(e, m)| if *m > 0.0 { e / m } else { *e })
            .fold(0.0, f64::max)
    }
}

struct Panel {
    a: f64,
    b: f64,
    hi: Vec<f64>,
    err: Vec<f64>,
    mass: Vec<f64>,
}

fn panel_rule<F>(f: &mut F, a: f64, b: f64, n: usize, dim: usize) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = vec![0.0; dim];
    let mut mass = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        f(mid + half * x, &mut buf)?;
        for i in 0..dim {
            acc[i] += w * buf[i];
            mass[i] += w * buf[i].abs();
        }
    }
    for i in 0..dim {
        acc[i] *= half;
        mass[i] *= half.abs();
    }
    Ok((acc, mass))
}

fn eval_panel<F>(f: &mut F, a: f64, b: f64, n: usize, dim: usize) -> Result<Panel>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let (lo, _) = panel_rule(f, a, b, n, dim)?;
    let (hi, mass) = panel_rule(f, a, b, 2 * n, dim)?;
    let err = lo.iter().zip(&hi).map(|(x, y)| (x - y).abs()).collect();
    Ok(Panel { a, b, hi, err, mass })
}

/// Adaptive integration of a `dim`-vector integrand over the breakpoints
/// `init` (sorted, at least two entries).
pub fn integrate_adaptive<F>(mut f: F, init: &[f64], dim: usize, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let mut panels = Vec::new();
    for w in init.windows(2) {
        panels.push(eval_panel(&mut f, w[0], w[1], cfg.order, dim)?);
    }
    loop {
        let mut total = vec![0.0; dim];
        let mut err = vec![0.0; dim];
        let mut mass = vec![0.0; dim];
        for p in &panels {
            for i in 0..dim {
                total[i] += p.hi[i];
                err[i] += p.err[i];
                mass[i] += p.mass[i];
            }
        }
        let bad: Vec<usize> = (0..dim).filter(|&i| err[i] > cfg.tol * mass[i].max(1e-300)).collect();
        if bad.is_empty() {
            let plan = QuadPlan { panels: panels.iter().map(|p| (p.a, p.b)).collect(), order: cfg.order };
            return Ok(QuadResult { value: total, error: err, mass, plan });
        }
        if panels.len() >= cfg.max_panels {
            let est = bad.iter().map(|&i| err[i] / mass[i].max(1e-300)).fold(0.0, f64::max);
            return Err(Error::QuadratureNotConverged { estimate: est });
        }
        // Split the panel contributing most to the worst components.
        let mut worst = 0;
        let mut worst_score = -1.0;
        for (j, p) in panels.iter().enumerate() {
            let score = bad.iter().map(|&i| p.err[i] / mass[i].max(1e-300)).fold(0.0, f64::max);
            if score > worst_score {
                worst_score = score;
                worst = j;
            }
        }
        let p = panels.remove(worst);
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            return Err(Error::QuadratureNotConverged { estimate: worst_score });
        }
        let left = eval_panel(&mut f, p.a, m, cfg.order, dim)?;
        let right = eval_panel(&mut f, m, p.b, cfg.order, dim)?;
        panels.insert(worst, right);
        panels.insert(worst, left);
    }
}

/// Integrate on a frozen plan with the `2n` rule of each panel.
pub fn integrate_plan<F>(mut f: F, plan: &QuadPlan, dim: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let mut total = vec![0.0; dim];
    for &(a, b) in &plan.panels {
        let (v, _) = panel_rule(&mut f, a, b, 2 * plan.order, dim)?;
        for i in 0..dim {
            total[i] += v[i];
        }
    }
    Ok(total)
}
