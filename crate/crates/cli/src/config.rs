//! The JSON run configuration and the small string grammars used on the
//! command line (`a:b:n` grids, comma-separated vectors).

use crate::error::CliError;
use modlab_core::limits::Branch;
use modlab_core::linalg::EigTol;
use modlab_core::quad::QuadConfig;
use modlab_core::{Func, ModelSpec};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "modlab/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Command {
    Validate,
    Wave,
    Whitham,
    LimitHarmonic,
    LimitSoliton,
    Sweep,
    Mi,
    Toy,
    Conjugation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Wave => "wave",
            Command::Whitham => "whitham",
            Command::LimitHarmonic => "limit_harmonic",
            Command::LimitSoliton => "limit_soliton",
            Command::Sweep => "sweep",
            Command::Mi => "mi",
            Command::Toy => "toy",
            Command::Conjugation => "conjugation",
        }
    }
}

/// A coefficient function in one of the supported closed-form families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuncSource {
    /// `coef[j]` multiplies `v^j`.
    Poly(Vec<f64>),
    Constant(f64),
    /// `[tau0, tau1]` for `tau0 + tau1 v`.
    Affine([f64; 2]),
    /// `1/(4v)`.
    InverseFourV,
}

impl FuncSource {
    pub fn build(&self) -> Func {
        match self {
            FuncSource::Poly(c) => Func::poly(c),
            FuncSource::Constant(x) => Func::constant(*x),
            FuncSource::Affine([a, b]) => Func::poly(&[*a, *b]),
            FuncSource::InverseFourV => Func::inverse_four_v(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSource {
    Scalar,
    EulerKorteweg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSource {
    pub kind: KindSource,
    pub b: f64,
    pub f: FuncSource,
    pub kappa: FuncSource,
    #[serde(default)]
    pub tau: Option<FuncSource>,
    /// Open interval; `null` ends are infinite.
    #[serde(default)]
    pub domain: Option<[Option<f64>; 2]>,
}

impl ModelSource {
    pub fn build(&self) -> Result<ModelSpec, CliError> {
        let domain = self
            .domain
            .map(|[lo, hi]| (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)));
        let m = match (self.kind, &self.tau) {
            (KindSource::Scalar, None) => ModelSpec::scalar(self.b, self.f.build(), self.kappa.build(), domain)?,
            (KindSource::Scalar, Some(_)) => return Err(CliError::Config("tau is only meaningful for euler_korteweg".into())),
            (KindSource::EulerKorteweg, Some(t)) => {
                ModelSpec::euler_korteweg(self.b, self.f.build(), self.kappa.build(), t.build(), domain)?
            }
            (KindSource::EulerKorteweg, None) => return Err(CliError::Config("euler_korteweg needs tau".into())),
        };
        m.check_families()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSource {
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
}

/// Soliton anchor by its endpoint state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSource {
    pub c: f64,
    pub us: Vec<f64>,
}

/// Harmonic edge `(U0, k0)` for the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSource {
    pub u0: Vec<f64>,
    pub k0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    Harmonic,
    Soliton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSource {
    pub anchor: AnchorKind,
    #[serde(default)]
    pub splitting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySource {
    pub eps: f64,
    pub v: f64,
    pub a: f64,
    pub delta: f64,
    pub delta_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BranchArg {
    Plus,
    Minus,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Branch {
        match b {
            BranchArg::Plus => Branch::Plus,
            BranchArg::Minus => Branch::Minus,
        }
    }
}

fn d_quad_order() -> usize {
    QuadConfig::default().order
}
fn d_quad_tol() -> f64 {
    QuadConfig::default().tol
}
fn d_max_panels() -> usize {
    QuadConfig::default().max_panels
}
fn d_true() -> bool {
    true
}
fn d_tol_im() -> f64 {
    EigTol::default().tol_im
}
fn d_cond_cap() -> f64 {
    EigTol::default().cond_cap
}
fn d_band() -> f64 {
    EigTol::default().band_decades
}
fn d_eig_residual() -> f64 {
    EigTol::default().residual
}
fn d_min_r2() -> f64 {
    0.999
}
fn d_max_rel_residual() -> f64 {
    1e-3
}

/// Numeric knobs; every default is the library default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    #[serde(default = "d_quad_order")]
    pub quad_order: usize,
    #[serde(default = "d_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "d_max_panels")]
    pub max_panels: usize,
    /// Richardson-corrected second differences for the action Hessian.
    #[serde(default = "d_true")]
    pub fd_richardson: bool,
    /// Per-parameter FD step scales; derived from the orbit when absent.
    #[serde(default)]
    pub fd_steps: Option<Vec<f64>>,
    #[serde(default = "d_tol_im")]
    pub tol_im: f64,
    #[serde(default = "d_cond_cap")]
    pub cond_cap: f64,
    #[serde(default = "d_band")]
    pub band_decades: f64,
    #[serde(default = "d_eig_residual")]
    pub eig_residual: f64,
    #[serde(default = "d_min_r2")]
    pub min_r2: f64,
    #[serde(default = "d_max_rel_residual")]
    pub max_rel_residual: f64,
    /// `a:b:n`, geometric from `a` to `b`.
    #[serde(default)]
    pub grid: Option<String>,
}

impl Default for NumericConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl NumericConfig {
    pub fn quad(&self) -> QuadConfig {
        QuadConfig { order: self.quad_order, tol: self.quad_tol, max_panels: self.max_panels }
    }

    pub fn eig(&self) -> EigTol {
        EigTol { tol_im: self.tol_im, cond_cap: self.cond_cap, band_decades: self.band_decades, residual: self.eig_residual }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(2..=200).contains(&self.quad_order) {
            return Err(CliError::Config(format!("quad_order {} outside [2, 200]", self.quad_order)));
        }
        let positive = [
            ("quad_tol", self.quad_tol),
            ("tol_im", self.tol_im),
            ("cond_cap", self.cond_cap),
            ("band_decades", self.band_decades),
            ("eig_residual", self.eig_residual),
            ("max_rel_residual", self.max_rel_residual),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive and finite")));
            }
        }
        if !(0.0..=1.0).contains(&self.min_r2) {
            return Err(CliError::Config("min_r2 must lie in [0, 1]".into()));
        }
        if let Some(s) = &self.fd_steps {
            if s.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(CliError::Config("fd_steps must be positive".into()));
            }
        }
        if let Some(g) = &self.grid {
            parse_grid(g)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

fn d_precision() -> usize {
    17
}
fn d_format() -> Format {
    Format::Json
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "d_format")]
    pub format: Format,
    #[serde(default)]
    pub path: Option<String>,
    /// Significant digits, 17 meaning shortest round-trip.
    #[serde(default = "d_precision")]
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { format: Format::Json, path: None, precision: 17 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema: Option<String>,
    #[serde(default)]
    pub command: Option<Command>,
    pub model: ModelSource,
    #[serde(default)]
    pub wave: Option<WaveSource>,
    /// Search window for turning points and critical points of `W`.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub branch: Option<BranchArg>,
    #[serde(default)]
    pub soliton: Option<SolitonSource>,
    #[serde(default)]
    pub edge: Option<EdgeSource>,
    #[serde(default)]
    pub sweep: Option<SweepSource>,
    #[serde(default)]
    pub toy: Option<ToySource>,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(s) = &self.schema {
            if s != SCHEMA {
                return Err(CliError::Config(format!("unsupported schema {s:?}, expected {SCHEMA:?}")));
            }
        }
        if !(6..=17).contains(&self.output.precision) {
            return Err(CliError::Config(format!("precision {} outside [6, 17]", self.output.precision)));
        }
        if let Some([a, b]) = self.window {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(CliError::Config("window must be a finite increasing pair".into()));
            }
        }
        self.numeric.validate()
    }
}

/// Parses and validates a configuration document, including the model.
pub fn parse_config(text: &str) -> Result<(RunConfig, ModelSpec), CliError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    let model = cfg.model.build()?;
    Ok((cfg, model))
}

pub const MAX_GRID: usize = 10_000;

/// `a:b:n` into `n` geometrically spaced positive values from `a` to `b`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("grid {spec:?}: {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad("expected a:b:n"));
    };
    let a: f64 = a.trim().parse().map_err(|_| bad("start is not a number"))?;
    let b: f64 = b.trim().parse().map_err(|_| bad("end is not a number"))?;
    let n: usize = n.trim().parse().map_err(|_| bad("count is not an integer"))?;
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(bad("ends must be positive and finite"));
    }
    if a == b {
        return Err(bad("ends coincide"));
    }
    if !(2..=MAX_GRID).contains(&n) {
        return Err(bad("count must lie in [2, 10000]"));
    }
    let r = (b / a).ln() / (n - 1) as f64;
    let g: Vec<f64> = (0..n).map(|i| if i == n - 1 { b } else { a * (r * i as f64).exp() }).collect();
    if g.windows(2).any(|w| w[0] == w[1]) {
        return Err(bad("not strictly monotone in floating point"));
    }
    Ok(g)
}

/// `x[,y...]` into finite numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    let out: Result<Vec<f64>, _> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("not a number: {t:?}"))))
        .collect();
    let out = out?;
    if out.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config("values must be finite".into()));
    }
    Ok(out)
}
