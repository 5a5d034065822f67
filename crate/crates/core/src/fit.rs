//! Linear least squares on small bases, coefficient of determination and
//! the fit protocol used by the asymptotic sweeps.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    pub r2: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
    pub points: usize,
    /// Standard errors of the coefficients from the residual variance;
    /// empty when the fit is exactly determined.
    pub stderr: Vec<f64>,
    /// Three standard errors per coefficient.
    pub confidence: Vec<f64>,
}

/// Least squares for `y ~ sum_j coef_j basis_j(x)`.
pub fn lstsq(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<LinearFit> {
    let n = xs.len();
    let m = basis.len();
    if n != ys.len() || n < m || m == 0 {
        return Err(Error::GridDegenerate(format!("{n} points for {m} coefficients")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::GridDegenerate("non-finite sample".into()));
    }
    let a = DMatrix::from_fn(n, m, |i, j| basis[j](xs[i]));
    // Column scaling keeps the normal problem well posed.
    let scale: Vec<f64> = (0..m).map(|j| a.column(j).amax().max(1e-300)).collect();
    let a_s = DMatrix::from_fn(n, m, |i, j| a[(i, j)] / scale[j]);
    let y = DVector::from_column_slice(ys);
    let svd = a_s.clone().svd(true, true);
    let smax = svd.singular_values.amax();
    if svd.singular_values.min() <= 1e-13 * smax {
        return Err(Error::GridDegenerate("rank-deficient fit basis".into()));
    }
    let c_s = svd.solve(&y, 1e-300).map_err(|e| Error::GridDegenerate(e.to_string()))?;
    let coef: Vec<f64> = (0..m).map(|j| c_s[j] / scale[j]).collect();
    let fitted = &a_s * &c_s;
    let res = &y - &fitted;
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = res.iter().map(|v| v * v).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    let stderr = if n > m {
        let var = ss_res / (n - m) as f64;
        let vt = svd.v_t.as_ref().expect("requested");
        (0..m)
            .map(|j| {
                let d: f64 = (0..m).map(|k| (vt[(k, j)] / svd.singular_values[k]).powi(2)).sum();
                (var * d).sqrt() / scale[j]
            })
            .collect()
    } else {
        Vec::new()
    };
    let confidence = stderr.iter().map(|s| 3.0 * s).collect();
    Ok(LinearFit { coef, r2, max_residual: res.amax(), points: n, stderr, confidence })
}

/// Straight line `y = coef[0] + coef[1] x`.
pub fn line(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    lstsq(xs, ys, &[&|_| 1.0, &|x| x])
}

/// Slope of `ln|y|` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    line(&lx, &ly)
}

/// The half of a grid closest to the limit, given grid points ordered by
/// decreasing small parameter.
pub fn tail_half<T: Clone>(v: &[T]) -> Vec<T> {
    v[v.len() / 2..].to_vec()
}

/// Slope fit with an R^2 gate.
pub fn gated(fit: LinearFit, min_r2: f64, what: &str) -> Result<LinearFit> {
    if fit.r2 < min_r2 {
        return Err(Error::FitRejected(format!("{what}: R^2 = {:.6} below {min_r2}", fit.r2)));
    }
    Ok(fit)
}

/// Extrapolation fit gated on residuals relative to the data spread, since
/// a nearly flat signal has no meaningful R^2.
pub fn gated_extrapolation(fit: LinearFit, ys: &[f64], rel: f64, what: &str) -> Result<LinearFit> {
    let scale = ys.iter().map(|y| y.abs()).fold(0.0, f64::max).max(1e-300);
    if fit.max_residual > rel * scale {
        return Err(Error::FitRejected(format!(
            "{what}: residual {:.3e} above {:.1e} of the data scale",
            fit.max_residual, rel
        )));
    }
    Ok(fit)
}

/// One Richardson step for a quantity with error `C h^p`, from values at
/// `h` and `h / 2`.
pub fn richardson(f_h: f64, f_half: f64, p: f64) -> f64 {
    let r = 2f64.powf(p);
    (r * f_half - f_h) / (r - 1.0)
}

/// Geometric grid from `hi` down to `lo` with `n` points.
pub fn geometric_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let r = (lo / hi).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| hi * r.powi(i as i32)).collect()
}
