//! Run configuration: `key = value` files, command-line overrides and
//! defaults, merged in that order of precedence (flags win).

use std::collections::BTreeMap;
use std::path::PathBuf;

use tmodes_core::ensemble::{uniform_grid, SimParams};
use tmodes_core::matprop::Complex2x2;
use tmodes_core::renewal::max_step;
use tmodes_core::{Complex64, Error as CoreError};

use crate::error::{AppError, AppResult};

/// Keys accepted in configuration files and as `--key value` flags.
pub const KEYS: [&str; 11] = [
    "g0",
    "tau0",
    "na0",
    "nb0",
    "rho12_0",
    "t_max",
    "grid_points",
    "ensemble",
    "seed",
    "order",
    "h",
];

pub const DEFAULT_G0: f64 = 1.0;
pub const DEFAULT_TAU0: f64 = 1.0;
pub const DEFAULT_NA0: f64 = 0.0;
pub const DEFAULT_NB0: f64 = 2.0;
pub const DEFAULT_GRID_POINTS: usize = 400;
/// The default window is `[0, DEFAULT_SPAN / g0]`.
pub const DEFAULT_SPAN: f64 = 20.0;
pub const DEFAULT_ENSEMBLE: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ORDER: usize = 24;
/// The default renewal step is `min(τ0, 1/g0) / DEFAULT_STEP_DIVISOR`.
pub const DEFAULT_STEP_DIVISOR: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Analytic,
    Simulate,
    Renewal,
    Verify,
    Sweep,
    Figure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    #[value(name = "g0tau0")]
    G0Tau0,
    Tau0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepScale {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: SweepScale,
    /// Probe times in units of `1/g0`.
    pub probes: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> AppResult<()> {
        if self.count < 2 {
            return Err(AppError::config("sweep-count", format!("must be >= 2, got {}", self.count)));
        }
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) {
            return Err(AppError::config(
                "sweep-min",
                format!("need 0 < min < max, got [{}, {}]", self.min, self.max),
            ));
        }
        if self.probes.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(AppError::config("probe", "probe times must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                match self.scale {
                    SweepScale::Linear => self.min + f * (self.max - self.min),
                    SweepScale::Log => self.min * (self.max / self.min).powf(f),
                }
            })
            .collect()
    }
}

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: SimParams,
    pub t_max: f64,
    pub grid_points: usize,
    pub order: usize,
    pub h: f64,
    pub rho12_0: Option<Complex64>,
    pub output: Option<PathBuf>,
    pub figure: Option<FigureId>,
    pub sweep: Option<SweepSpec>,
    pub quick: bool,
    pub timestamp: bool,
    pub workers: usize,
    pub dump: Option<PathBuf>,
}

impl RunConfig {
    /// `(key, value)` pairs describing the physical and numerical settings,
    /// for output metadata.
    pub fn echo(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let mut out = vec![
            ("command".to_string(), format!("{:?}", self.command).to_lowercase()),
            ("g0".into(), p.g0.to_string()),
            ("tau0".into(), p.tau0.to_string()),
            ("g0tau0".into(), (p.g0 * p.tau0).to_string()),
            ("na0".into(), p.na0.to_string()),
            ("nb0".into(), p.nb0.to_string()),
        ];
        if let Some(z) = self.rho12_0 {
            out.push(("rho12_0".into(), format!("{},{}", z.re, z.im)));
        }
        out.extend([
            ("t_max".into(), self.t_max.to_string()),
            ("grid_points".into(), self.grid_points.to_string()),
            ("ensemble".into(), p.ensemble_size.to_string()),
            ("seed".into(), p.base_seed.to_string()),
            ("order".into(), self.order.to_string()),
            ("h".into(), self.h.to_string()),
        ]);
        out
    }
}

/// Options that are not configuration keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub command: Command,
    pub output: Option<PathBuf>,
    pub figure: Option<FigureId>,
    pub sweep: Option<SweepSpec>,
    pub quick: bool,
    pub timestamp: bool,
    pub workers: usize,
    pub dump: Option<PathBuf>,
}

impl RunOptions {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            output: None,
            figure: None,
            sweep: None,
            quick: false,
            timestamp: true,
            workers: 1,
            dump: None,
        }
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_file(text: &str) -> AppResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            AppError::config(line, format!("line {}: expected `key = value`", n + 1))
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn number(key: &str, value: &str) -> AppResult<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| AppError::config(key, format!("`{value}` is not a finite number")))
}

fn count(key: &str, value: &str) -> AppResult<u64> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    let x = number(key, value)?;
    if x < 0.0 || x.fract() != 0.0 || x > 2f64.powi(53) {
        return Err(AppError::config(key, format!("`{value}` is not a non-negative integer")));
    }
    Ok(x as u64)
}

fn complex(key: &str, value: &str) -> AppResult<Complex64> {
    match value.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(number(key, re.trim())?, number(key, im.trim())?)),
        None => Ok(Complex64::new(number(key, value)?, 0.0)),
    }
}

/// Maps a core validation error to the configuration key that caused it.
fn blame(e: CoreError) -> AppError {
    match e {
        CoreError::InvalidParameter { name, reason } => {
            let key = match name {
                "t_grid" => "t_max",
                "rho0" => "rho12_0",
                other => other,
            };
            AppError::config(key, reason)
        }
        CoreError::NotHermitian { .. } => AppError::config("rho12_0", e.to_string()),
        other => AppError::Core(other),
    }
}

/// Merges defaults, the file entries and the flag entries (later wins).
pub fn parse_config(
    file: &[(String, String)],
    flags: &[(String, String)],
    options: RunOptions,
) -> AppResult<RunConfig> {
    let mut merged: BTreeMap<&str, &str> = BTreeMap::new();
    for (key, value) in file.iter().chain(flags) {
        let known = KEYS
            .iter()
            .find(|k| **k == key.as_str())
            .ok_or_else(|| AppError::config(key.as_str(), "unknown key"))?;
        merged.insert(known, value.as_str());
    }
    let get = |key: &str| merged.get(key).copied();
    let num = |key: &str, default: f64| get(key).map_or(Ok(default), |v| number(key, v));
    let int = |key: &str, default: u64| get(key).map_or(Ok(default), |v| count(key, v));

    let g0 = num("g0", DEFAULT_G0)?;
    let tau0 = num("tau0", DEFAULT_TAU0)?;
    let na0 = num("na0", DEFAULT_NA0)?;
    let nb0 = num("nb0", DEFAULT_NB0)?;
    let grid_points = int("grid_points", DEFAULT_GRID_POINTS as u64)? as usize;
    let ensemble = int("ensemble", DEFAULT_ENSEMBLE as u64)? as usize;
    let seed = int("seed", DEFAULT_SEED)?;
    let order = int("order", DEFAULT_ORDER as u64)? as usize;
    let rho12_0 = get("rho12_0").map(|v| complex("rho12_0", v)).transpose()?;

    let params_probe = SimParams::new(g0, tau0, na0, nb0, vec![0.0], 1, seed).map_err(blame)?;
    let t_max = num("t_max", DEFAULT_SPAN / params_probe.g0)?;
    if !(t_max > 0.0) {
        return Err(AppError::config("t_max", format!("must be > 0, got {t_max}")));
    }
    if grid_points < 2 {
        return Err(AppError::config("grid_points", "need at least 2 points"));
    }
    if ensemble < 2 {
        return Err(AppError::config("ensemble", "need at least 2 trajectories"));
    }
    if order < 8 || !order.is_multiple_of(2) {
        return Err(AppError::config("order", "must be even and >= 8"));
    }
    let h = num("h", tau0.min(1.0 / g0) / DEFAULT_STEP_DIVISOR)?;
    if !(h > 0.0) {
        return Err(AppError::config("h", format!("must be > 0, got {h}")));
    }
    if h > max_step(g0, tau0) * (1.0 + 1e-12) {
        return Err(AppError::config(
            "h",
            format!("{h} under-resolves the dynamics; need h <= {}", max_step(g0, tau0)),
        ));
    }

    let mut params = SimParams::new(
        g0,
        tau0,
        na0,
        nb0,
        uniform_grid(t_max, grid_points),
        ensemble,
        seed,
    )
    .map_err(blame)?;
    if let Some(z) = rho12_0 {
        let n = na0 + nb0;
        if n <= 0.0 {
            return Err(AppError::config("rho12_0", "needs na0 + nb0 > 0"));
        }
        params = params
            .with_rho0(Complex2x2::hermitian(na0 / n, nb0 / n, z))
            .map_err(blame)?;
    }
    if let Some(spec) = &options.sweep {
        spec.validate()?;
    }
    if options.workers == 0 {
        return Err(AppError::config("workers", "must be >= 1"));
    }
    Ok(RunConfig {
        command: options.command,
        params,
        t_max,
        grid_points,
        order,
        h,
        rho12_0,
        output: options.output,
        figure: options.figure,
        sweep: options.sweep,
        quick: options.quick,
        timestamp: options.timestamp,
        workers: options.workers,
        dump: options.dump,
    })
}
