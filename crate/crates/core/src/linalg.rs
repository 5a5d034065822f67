//! Eigen-analysis for the small (size <= 4) nonsymmetric matrices of the
//! modulation system: characteristic polynomial by principal minors, roots
//! by closed forms or Aberth iteration, eigenvectors by full-pivot
//! null-space extraction, and the hyperbolicity classification.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hyperbolicity {
    Hyperbolic,
    WeaklyHyperbolic,
    Elliptic,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigTol {
    /// Imaginary parts below `tol_im * scale` count as real.
    pub tol_im: f64,
    /// Eigenvector-matrix condition numbers above this are "defective".
    pub cond_cap: f64,
    /// Width of the marginal band around each threshold, in decades.
    pub band_decades: f64,
    /// Residual tolerance for eigenpairs, relative to the matrix norm.
    pub residual: f64,
}

impl Default for EigTol {
    fn default() -> Self {
        EigTol { tol_im: 1e-8, cond_cap: 1e8, band_decades: 1.0, residual: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub eigenvalues: Vec<C>,
    #[serde(serialize_with = "crate::ser::complex_vecs")]
    pub eigenvectors: Vec<Vec<C>>,
    pub residuals: Vec<f64>,
    pub eigvec_condition: f64,
    /// Multiplicity groups found by the cluster test (indices into the list).
    pub clusters: Vec<Vec<usize>>,
    pub classification: Hyperbolicity,
}

/// Determinant by cofactor expansion along the first row.
pub fn det_cofactor(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => {
            let mut s = 0.0;
            for j in 0..n {
                if a[0][j] == 0.0 {
                    continue;
                }
                let minor: Vec<Vec<f64>> =
                    a[1..].iter().map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| *x).collect()).collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * a[0][j] * det_cofactor(&minor);
            }
            s
        }
    }
}

/// Coefficients `c[0..=n]` of `det(z I - A) = sum c[j] z^j`, with `c[n] = 1`.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    for k in 1..=n {
        // e_k: sum of principal k x k minors.
        let mut ek = 0.0;
        for subset in combinations(n, k) {
            let m: Vec<Vec<f64>> = subset.iter().map(|&i| subset.iter().map(|&j| a[(i, j)]).collect()).collect();
            ek += det_cofactor(&m);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c[n - k] = sign * ek;
    }
    c
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn horner(c: &[f64], z: C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for &x in c.iter().rev() {
        acc = acc * z + x;
    }
    acc
}

fn deriv(c: &[f64]) -> Vec<f64> {
    (1..c.len()).map(|j| c[j] * j as f64).collect()
}

/// Rounding-error bound for evaluating `p` at `z`.
fn eval_bound(c: &[f64], z: C) -> f64 {
    let r = z.norm();
    let mut acc = 0.0;
    for &x in c.iter().rev() {
        acc = acc * r + x.abs();
    }
    8.0 * f64::EPSILON * acc * c.len() as f64
}

fn quadratic_roots(b: f64, c: f64) -> [C; 2] {
    // z^2 + b z + c
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let sgn = if b >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (b + sgn * s);
        if q == 0.0 {
            return [C::new(0.0, 0.0), C::new(0.0, 0.0)];
        }
        [C::new(q, 0.0), C::new(c / q, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [C::new(re, im), C::new(re, -im)]
    }
}

fn cubic_roots(c: &[f64]) -> Vec<C> {
    // z^3 + a z^2 + b z + d, Cardano on the depressed cubic.
    let (a, b, d) = (c[2], c[1], c[0]);
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + d;
    let shift = -a / 3.0;
    let disc = C::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let mut u = (C::new(-q / 2.0, 0.0) + disc).powf(1.0 / 3.0);
    if u.norm() < 1e-300 {
        u = (C::new(-q / 2.0, 0.0) - disc).powf(1.0 / 3.0);
    }
    let omega = C::new(-0.5, 3f64.sqrt() / 2.0);
    let mut out = Vec::new();
    let mut uk = u;
    for _ in 0..3 {
        let z = if uk.norm() < 1e-300 { C::new(0.0, 0.0) } else { uk - p / (3.0 * uk) };
        out.push(z + shift);
        uk *= omega;
    }
    out
}

fn aberth(c: &[f64]) -> Vec<C> {
    let n = c.len() - 1;
    let dc = deriv(c);
    let radius = 1.0 + c[..n].iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut z: Vec<C> = (0..n)
        .map(|k| C::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let p = horner(c, z[i]);
            let dp = horner(&dc, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = C::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += 1.0 / (z[i] - z[j]);
                }
            }
            let w = ratio / (1.0 - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-16 {
            break;
        }
    }
    z
}

fn newton_polish(c: &[f64], z: C) -> C {
    let dc = deriv(c);
    let mut z = z;
    for _ in 0..3 {
        let p = horner(c, z);
        let dp = horner(&dc, z);
        if dp.norm() == 0.0 || p.norm() <= eval_bound(c, z) {
            break;
        }
        let step = p / dp;
        z -= step;
    }
    z
}

/// Roots of the monic polynomial `c` (ascending coefficients), with
/// near-double pairs re-resolved from the critical point of `p`.
pub fn poly_roots(c: &[f64]) -> Vec<C> {
    let n = c.len() - 1;
    let mut roots = match n {
        0 => vec![],
        1 => vec![C::new(-c[0], 0.0)],
        2 => quadratic_roots(c[1], c[0]).to_vec(),
        3 => cubic_roots(c),
        _ => aberth(c),
    };
    roots = roots.into_iter().map(|z| newton_polish(c, z)).collect();
    // Real-coefficient symmetry: snap conjugate pairs.
    let scale = 1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..roots.len() {
        for j in (i + 1)..roots.len() {
            let (a, b) = (roots[i], roots[j]);
            if (a - b).norm() < 1e-4 * scale {
                if let Some((m, h)) = resolve_pair(c, 0.5 * (a + b)) {
                    roots[i] = m + h;
                    roots[j] = m - h;
                }
            }
        }
    }
    roots
}

/// Near a double root: `m` solving `p'(m) = 0`, and the half-split `h`
/// from `p(m) + p''(m) h^2 / 2 = 0`. Returns `h = 0` when `p(m)` is below
/// its rounding bound.
fn resolve_pair(c: &[f64], guess: C) -> Option<(C, C)> {
    let d1 = deriv(c);
    let d2 = deriv(&d1);
    let mut m = C::new(guess.re, 0.0);
    for _ in 0..50 {
        let f = horner(&d1, m);
        let fp = horner(&d2, m);
        if fp.norm() == 0.0 {
            return None;
        }
        let step = f / fp;
        m -= step;
        if step.norm() <= 1e-17 * (1.0 + m.norm()) {
            break;
        }
    }
    let pm = horner(c, m);
    let ppm = horner(&d2, m);
    if ppm.norm() == 0.0 {
        return None;
    }
    if pm.norm() <= eval_bound(c, m) {
        return Some((m, C::new(0.0, 0.0)));
    }
    let h = (-2.0 * pm / ppm).sqrt();
    Some((m, h))
}

/// Full-pivot elimination on `A - z I`; returns a basis of the numerical
/// null space (at least one vector).
fn null_space(a: &DMatrix<f64>, z: C, rank_tol: f64, min_dim: usize) -> Vec<Vec<C>> {
    let n = a.nrows();
    let mut m: Vec<Vec<C>> = (0..n)
        .map(|i| (0..n).map(|j| C::new(a[(i, j)], 0.0) - if i == j { z } else { C::new(0.0, 0.0) }).collect())
        .collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for k in 0..n {
        let mut best = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                let v = m[i][j].norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= rank_tol || k >= n - min_dim.max(1) {
            break;
        }
        m.swap(k, best.0);
        for row in m.iter_mut() {
            row.swap(k, best.1);
        }
        col_perm.swap(k, best.1);
        for i in (k + 1)..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
        }
        rank += 1;
    }
    let rank = rank.min(n - min_dim.max(1));
    let mut basis = Vec::new();
    for free in rank..n {
        // Solve the upper-triangular block with x_free = 1.
        let mut x = vec![C::new(0.0, 0.0); n];
        x[free] = C::new(1.0, 0.0);
        for i in (0..rank).rev() {
            let mut s = C::new(0.0, 0.0);
            for j in (i + 1)..n {
                s += m[i][j] * x[j];
            }
            x[i] = -s / m[i][i];
        }
        let mut y = vec![C::new(0.0, 0.0); n];
        for (k, &p) in col_perm.iter().enumerate() {
            y[p] = x[k];
        }
        basis.push(y);
    }
    basis
}

fn normalize(v: &mut [C]) {
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return;
    }
    for z in v.iter_mut() {
        *z /= nrm;
    }
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(p) = v.iter().find(|z| z.norm() > 1e-12 * big) {
        let phase = p.conj() / p.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
    for z in v.iter_mut() {
        if z.im.abs() <= 1e-15 * big {
            z.im = 0.0;
        }
    }
}

fn gram_schmidt(vs: &mut [Vec<C>]) {
    for i in 0..vs.len() {
        for j in 0..i {
            let (left, right) = vs.split_at_mut(i);
            let proj: C = left[j].iter().zip(right[0].iter()).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in right[0].iter_mut().zip(left[j].iter()) {
                *x -= proj * y;
            }
        }
        normalize(&mut vs[i]);
    }
}

fn residual(a: &DMatrix<f64>, z: C, v: &[C]) -> f64 {
    let n = a.nrows();
    let mut r = 0.0f64;
    for i in 0..n {
        let mut s = -z * v[i];
        for j in 0..n {
            s += a[(i, j)] * v[j];
        }
        r += s.norm_sqr();
    }
    r.sqrt()
}

fn inverse_step(a: &DMatrix<f64>, z: C, v: &[C]) -> Option<Vec<C>> {
    let n = a.nrows();
    let m = DMatrix::<C>::from_fn(n, n, |i, j| C::new(a[(i, j)], 0.0) - if i == j { z } else { C::new(0.0, 0.0) });
    let rhs = nalgebra::DVector::<C>::from_vec(v.to_vec());
    let x = m.lu().solve(&rhs)?;
    let out: Vec<C> = x.iter().copied().collect();
    if out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(out)
    } else {
        None
    }
}

fn cmp_eig(a: &C, b: &C, tie: f64) -> std::cmp::Ordering {
    if (a.re - b.re).abs() <= tie {
        a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal)
    } else {
        a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Eigenpairs and hyperbolicity class of a real matrix of size at most 4.
pub fn spectrum_and_classification(a: &DMatrix<f64>, tol: &EigTol) -> Result<Spectrum> {
    let n = a.nrows();
    if n == 0 || n > 4 || a.ncols() != n {
        return Err(Error::EigenFailure(format!("unsupported size {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure("non-finite matrix entry".into()));
    }
    let scale = a.amax().max(1.0);
    let cp = char_poly(a);
    let mut eig = poly_roots(&cp);
    let tie = 1e-12 * scale;
    eig.sort_by(|x, y| cmp_eig(x, y, tie));

    // Group exactly coincident roots (as resolved by the pair test).
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut g = vec![i];
        seen[i] = true;
        for j in (i + 1)..n {
            if !seen[j] && (eig[i] - eig[j]).norm() <= 4.0 * f64::EPSILON * scale {
                g.push(j);
                seen[j] = true;
            }
        }
        clusters.push(g);
    }
    let rank_tol = 1e-9 * scale;
    let mut vecs: Vec<Vec<C>> = vec![Vec::new(); n];
    for g in &clusters {
        let z = eig[g[0]];
        let mut basis = null_space(a, z, rank_tol, 1);
        basis.truncate(g.len());
        if g.len() == 1 {
            let mut v = basis.remove(0);
            normalize(&mut v);
            if let Some(mut w) = inverse_step(a, z, &v) {
                normalize(&mut w);
                if residual(a, z, &w) <= residual(a, z, &v) {
                    v = w;
                }
            }
            vecs[g[0]] = v;
        } else {
            gram_schmidt(&mut basis);
            for (k, &idx) in g.iter().enumerate() {
                vecs[idx] = if k < basis.len() { basis[k].clone() } else { basis[0].clone() };
            }
        }
    }
    let residuals: Vec<f64> = (0..n).map(|i| residual(a, eig[i], &vecs[i])).collect();
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if !(worst <= tol.residual.max(1e-6) * scale) {
        return Err(Error::EigenFailure(format!("eigenpair residual {worst:e}")));
    }
    let vm = DMatrix::<C>::from_fn(n, n, |i, j| vecs[j][i]);
    let sv = vm.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let classification = classify(&eig, cond, scale, tol);
    Ok(Spectrum { eigenvalues: eig, eigenvectors: vecs, residuals, eigvec_condition: cond, clusters, classification })
}

fn classify(eig: &[C], cond: f64, scale: f64, tol: &EigTol) -> Hyperbolicity {
    let band = 10f64.powf(tol.band_decades);
    let im_max = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    if im_max > tol.tol_im * band {
        return Hyperbolicity::Elliptic;
    }
    if im_max > tol.tol_im / band {
        return Hyperbolicity::Marginal;
    }
    if cond > tol.cond_cap * band {
        return Hyperbolicity::WeaklyHyperbolic;
    }
    if cond > tol.cond_cap / band {
        return Hyperbolicity::Marginal;
    }
    Hyperbolicity::Hyperbolic
}

/// Greedy multiset matching; returns the largest paired distance.
pub fn match_spectra(a: &[C], b: &[C]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for z in a {
        let mut best = (usize::MAX, f64::INFINITY);
        for (j, w) in b.iter().enumerate() {
            if !used[j] && (z - w).norm() < best.1 {
                best = (j, (z - w).norm());
            }
        }
        if best.0 == usize::MAX {
            return f64::INFINITY;
        }
        used[best.0] = true;
        worst = worst.max(best.1);
    }
    worst
}

/// Numerical rank with a relative threshold.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * smax.max(1e-300)).count()
}
