//! Command dispatch. Every command returns a canonical report; sweeps may
//! instead emit a CSV table with the fit report as a sidecar.

use crate::config::{parse_grid, AnchorKind, Command, Format, NumericConfig, RunConfig, SCHEMA};
use crate::emit::{self, Cell};
use crate::error::CliError;
use modlab_core::action::{self, FdConfig};
use modlab_core::limits::{self, Branch};
use modlab_core::miindex;
use modlab_core::modulation;
use modlab_core::sweep::{self, Anchor, SweepConfig, SweepTable};
use modlab_core::{ModelSpec, WaveParams};
use serde::Serialize;
use serde_json::{json, Value};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<crate::config::BranchArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl Overrides {
    /// Folds the overrides into the config and revalidates it.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if self.mu.is_some() || self.c.is_some() || self.lambda.is_some() {
            let w = cfg.wave.get_or_insert(crate::config::WaveSource { mu: None, c: None, lambda: None });
            if self.mu.is_some() {
                w.mu = self.mu;
            }
            if self.c.is_some() {
                w.c = self.c;
            }
            if self.lambda.is_some() {
                w.lambda = self.lambda.clone();
            }
        }
        if let Some(g) = &self.grid {
            cfg.numeric.grid = Some(g.clone());
        }
        if self.branch.is_some() {
            cfg.branch = self.branch;
        }
        if let Some(q) = self.quad_order {
            cfg.numeric.quad_order = q;
        }
        if let Some(p) = self.precision {
            cfg.output.precision = p;
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if self.out.is_some() {
            cfg.output.path = self.out.clone();
        }
        cfg.validate()
    }
}

/// Emitted bytes: the report (JSON or CSV) and, for CSV sweeps, the fit
/// report as JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub primary: String,
    pub sidecar: Option<String>,
}

fn window(cfg: &RunConfig, model: &ModelSpec) -> Result<(f64, f64), CliError> {
    match cfg.window {
        Some([a, b]) => Ok((a, b)),
        None => {
            let (lo, hi) = model.domain;
            if lo.is_finite() && hi.is_finite() {
                Ok((lo, hi))
            } else {
                Err(CliError::Config("a finite search window is required".into()))
            }
        }
    }
}

fn fd_config(cfg: &RunConfig, win: (f64, f64)) -> FdConfig {
    let n = &cfg.numeric;
    FdConfig { window: win, quad: n.quad(), richardson: n.fd_richardson, scales: n.fd_steps.clone() }
}

fn sweep_config(cfg: &RunConfig, win: (f64, f64)) -> SweepConfig {
    SweepConfig {
        fd: fd_config(cfg, win),
        eig: cfg.numeric.eig(),
        min_r2: cfg.numeric.min_r2,
        max_rel_residual: cfg.numeric.max_rel_residual,
    }
}

fn c_and_lambda(cfg: &RunConfig, model: &ModelSpec) -> Result<(f64, Vec<f64>), CliError> {
    let w = cfg.wave.as_ref().ok_or_else(|| CliError::Config("wave parameters (c, lambda) are required".into()))?;
    let c = w.c.ok_or_else(|| CliError::Config("wave speed c is required".into()))?;
    let lambda = w.lambda.clone().unwrap_or_else(|| vec![0.0; model.n()]);
    if lambda.len() != model.n() {
        return Err(CliError::Config(format!("lambda needs {} components", model.n())));
    }
    if !c.is_finite() || lambda.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config("wave parameters must be finite".into()));
    }
    Ok((c, lambda))
}

fn wave_params(cfg: &RunConfig, model: &ModelSpec) -> Result<WaveParams, CliError> {
    let (c, lambda) = c_and_lambda(cfg, model)?;
    let mu = cfg
        .wave
        .as_ref()
        .and_then(|w| w.mu)
        .ok_or_else(|| CliError::Config("energy level mu is required".into()))?;
    if !mu.is_finite() {
        return Err(CliError::Config("mu must be finite".into()));
    }
    Ok(WaveParams::new(mu, c, &lambda))
}

fn harmonic_anchor(cfg: &RunConfig, model: &ModelSpec) -> Result<limits::HarmonicPoint, CliError> {
    let (c, lambda) = c_and_lambda(cfg, model)?;
    let win = window(cfg, model)?;
    Ok(limits::harmonic_point(model, c, &lambda, win, cfg.branch.map(Branch::from))?)
}

fn soliton_anchor(cfg: &RunConfig, model: &ModelSpec) -> Result<limits::SolitonPoint, CliError> {
    let win = window(cfg, model)?;
    let quad = cfg.numeric.quad();
    match &cfg.soliton {
        Some(s) => {
            if s.us.len() != model.n() {
                return Err(CliError::Config(format!("soliton us needs {} components", model.n())));
            }
            Ok(limits::soliton_point(model, s.c, &s.us, win, &quad)?)
        }
        None => {
            let (c, lambda) = c_and_lambda(cfg, model)?;
            Ok(limits::soliton_point_from_lambda(model, c, &lambda, win, &quad)?)
        }
    }
}

fn grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let spec = cfg.numeric.grid.as_ref().ok_or_else(|| CliError::Config("sweeps need a grid a:b:n".into()))?;
    parse_grid(spec)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn header(cmd: Command, cfg: &RunConfig, model: &ModelSpec, ov: &Overrides) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(cmd.name()));
    m.insert("model".into(), to_value(model));
    m.insert("numeric".into(), to_value::<NumericConfig>(&cfg.numeric));
    m.insert("overrides".into(), to_value(ov));
    m
}

fn sweep_csv(table: &SweepTable, n: usize, precision: usize) -> Result<String, CliError> {
    let d = n + 2;
    let mut head: Vec<String> = ["regime", "grid_param", "mu", "k", "alpha"].iter().map(|s| s.to_string()).collect();
    head.extend((1..=n).map(|i| format!("M_{i}")));
    head.push("Xi".into());
    for i in 1..=d {
        head.push(format!("eig_re_{i}"));
        head.push(format!("eig_im_{i}"));
    }
    head.extend(["delta", "rho", "limit_distance", "fd_error", "jacobian_condition"].iter().map(|s| s.to_string()));
    let rows: Vec<Vec<Cell>> = table
        .rows
        .iter()
        .map(|r| {
            let mut c = vec![Cell::Text(table.kind.clone()), Cell::Num(r.eps), Cell::Num(r.mu), Cell::Num(r.k), Cell::Num(r.alpha)];
            c.extend(r.m.iter().map(|x| Cell::Num(*x)));
            c.push(Cell::Num(r.xi));
            for z in &r.eigenvalues {
                c.push(Cell::Num(z.re));
                c.push(Cell::Num(z.im));
            }
            c.push(Cell::Num(r.delta));
            c.push(Cell::Num(r.rho.unwrap_or(f64::NAN)));
            c.push(Cell::Num(r.limit_distance));
            c.push(Cell::Num(r.fd_error));
            c.push(Cell::Num(r.jacobian_condition));
            c
        })
        .collect();
    Ok(emit::csv(&head, &rows, precision)?)
}

/// Runs one command on a validated config and model.
pub fn execute(cmd: Command, cfg: &RunConfig, model: &ModelSpec, ov: &Overrides) -> Result<Output, CliError> {
    let prec = cfg.output.precision;
    if cfg.output.format == Format::Csv && cmd != Command::Sweep {
        return Err(CliError::Config("csv output is only available for sweep".into()));
    }
    let mut report = header(cmd, cfg, model, ov);
    let result: Value = match cmd {
        Command::Validate => json!({
            "valid": true,
            "n": model.n(),
            "id": model.id(),
            "config": to_value(cfg),
        }),
        Command::Wave => {
            let p = wave_params(cfg, model)?;
            let win = window(cfg, model)?;
            let jet = action::action_jet(model, &p, &fd_config(cfg, win))?;
            let mv = modulation::params_to_modvars(model, &jet);
            json!({
                "k": mv.k,
                "alpha": mv.alpha,
                "m": mv.m,
                "theta": jet.theta,
                "xi": jet.state.xi,
                "jet": to_value(&jet),
            })
        }
        Command::Whitham => {
            let p = wave_params(cfg, model)?;
            let win = window(cfg, model)?;
            let jet = action::action_jet(model, &p, &fd_config(cfg, win))?;
            let (mv, rep) = modulation::whitham_report(model, &jet, &cfg.numeric.eig())?;
            json!({ "modvars": to_value(&mv), "whitham": to_value(&rep) })
        }
        Command::LimitHarmonic => {
            let hp = harmonic_anchor(cfg, model)?;
            let hl = limits::limiting_whitham_harmonic(model, &hp, &cfg.numeric.eig())?;
            json!({ "point": to_value(&hp), "limit": to_value(&hl) })
        }
        Command::LimitSoliton => {
            let sp = soliton_anchor(cfg, model)?;
            let sl = limits::limiting_whitham_soliton(model, &sp, &cfg.numeric.eig())?;
            json!({ "point": to_value(&sp), "limit": to_value(&sl) })
        }
        Command::Sweep => {
            let kind = cfg.sweep.as_ref().map(|s| s.anchor).unwrap_or(AnchorKind::Harmonic);
            let anchor = match kind {
                AnchorKind::Harmonic => Anchor::Harmonic(Box::new(harmonic_anchor(cfg, model)?)),
                AnchorKind::Soliton => Anchor::Soliton(Box::new(soliton_anchor(cfg, model)?)),
            };
            let g = grid(cfg)?;
            let scfg = sweep_config(cfg, window(cfg, model)?);
            let (table, fit) = sweep::asymptotic_sweep(model, &anchor, &g, &scfg)?;
            let split = if cfg.sweep.as_ref().map(|s| s.splitting).unwrap_or(false) {
                Some(sweep::eigen_splitting_fit(model, &anchor, &g, &scfg)?)
            } else {
                None
            };
            if cfg.output.format == Format::Csv {
                let csv = sweep_csv(&table, model.n(), prec)?;
                report.insert("result".into(), json!({ "fit": to_value(&fit), "splitting": to_value(&split) }));
                return Ok(Output { primary: csv, sidecar: Some(emit::json(&Value::Object(report), prec)) });
            }
            json!({ "table": to_value(&table), "fit": to_value(&fit), "splitting": to_value(&split) })
        }
        Command::Mi => {
            let (u0, k0, branch) = match &cfg.edge {
                Some(e) => (e.u0.clone(), e.k0, cfg.branch.map(Branch::from).unwrap_or(Branch::Plus)),
                None => {
                    let hp = harmonic_anchor(cfg, model)?;
                    (hp.u0.clone(), hp.k0, hp.branch)
                }
            };
            to_value(&miindex::delta_mi(model, &u0, k0, branch)?)
        }
        Command::Toy => {
            let t = cfg.toy.as_ref().ok_or_else(|| CliError::Config("toy parameters are required".into()))?;
            to_value(&limits::toy_double_root(t.eps, t.v, t.a, t.delta, t.delta_prime)?)
        }
        Command::Conjugation => {
            let p = wave_params(cfg, model)?;
            let win = window(cfg, model)?;
            to_value(&miindex::conjugation_check(model, &p, win)?)
        }
    };
    report.insert("result".into(), result);
    Ok(Output { primary: emit::json(&Value::Object(report), prec), sidecar: None })
}
