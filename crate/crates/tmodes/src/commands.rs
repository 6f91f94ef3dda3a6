use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use tmodes_core::analytic::{classify_regime, effective_rate, mean_na, RegimeKind};
use tmodes_core::ensemble::uniform_grid;
use tmodes_core::renewal::{solve_coherence, solve_populations};
use tmodes_core::telegraph::NoiseParams;
use tmodes_core::RelaxationParams;

use crate::config::{FigureId, RunConfig, SweepParam};
use crate::dump::write_trajectory;
use crate::error::{AppError, AppResult};
use crate::parallel;
use crate::table::{Cell, CsvSeries};

/// `g0·τ0` standing in for the infinite-correlation-time curve.
pub const INFINITE_G0TAU0: f64 = 1e12;
/// Initial occupations used by every figure.
pub const FIGURE_NA0: f64 = 0.0;
pub const FIGURE_NB0: f64 = 2.0;

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn regime_meta(cfg: &RunConfig) -> AppResult<Vec<(String, String)>> {
    let r = classify_regime(cfg.params.g0, cfg.params.tau0)?;
    Ok(vec![
        ("regime".into(), r.kind.label().into()),
        ("omega_signed".into(), r.signed_omega().to_string()),
    ])
}

/// Closed-form occupations on the configured grid.
pub fn run_analytic(cfg: &RunConfig) -> AppResult<CsvSeries> {
    let relax = cfg.params.relaxation();
    let n = relax.n_total();
    let rows = cfg
        .params
        .t_grid
        .iter()
        .map(|&t| {
            let na = mean_na(t, &relax)?;
            Ok(vec![t.into(), na.into(), (n - na).into()])
        })
        .collect::<AppResult<_>>()?;
    let mut meta = cfg.echo();
    meta.extend(regime_meta(cfg)?);
    CsvSeries::new(meta, labels(&["t", "n_a", "n_b"]), rows)
}

/// Monte Carlo ensemble averages; the density matrix when `rho12_0` is set.
pub fn run_simulate(cfg: &RunConfig) -> AppResult<CsvSeries> {
    if let Some(path) = &cfg.dump {
        let noise = NoiseParams::new(cfg.params.tau0, cfg.params.base_seed)?;
        let traj = noise.trajectory(0, cfg.t_max)?;
        let file = File::create(path).map_err(|e| AppError::io(path, e))?;
        let mut out = BufWriter::new(file);
        write_trajectory(&mut out, &noise, &traj)
            .and_then(|_| out.flush())
            .map_err(|e| AppError::io(path, e))?;
    }
    let mut meta = cfg.echo();
    meta.push(("workers_independent".into(), "true".into()));
    if cfg.params.rho0.is_some() {
        let d = parallel::density(&cfg.params, cfg.workers)?;
        let rows = (0..d.times.len())
            .map(|i| {
                vec![
                    d.times[i].into(),
                    d.e11.mean[i].re.into(),
                    d.e11.stderr[i].into(),
                    d.e22.mean[i].re.into(),
                    d.e22.stderr[i].into(),
                    d.e12.mean[i].re.into(),
                    d.e12.mean[i].im.into(),
                    d.e12.stderr[i].into(),
                ]
            })
            .collect();
        let cols = labels(&[
            "t",
            "rho11",
            "stderr_rho11",
            "rho22",
            "stderr_rho22",
            "re_rho12",
            "im_rho12",
            "stderr_rho12",
        ]);
        return CsvSeries::new(meta, cols, rows);
    }
    let s = parallel::occupation(&cfg.params, cfg.workers)?;
    let rows = (0..s.times.len())
        .map(|i| vec![s.times[i].into(), s.mean[i].into(), s.stderr[i].into()])
        .collect();
    CsvSeries::new(meta, labels(&["t", "mean_na", "stderr_na"]), rows)
}

/// Renewal-equation occupations on the grid `n·h`, plus the coherence when
/// `rho12_0` is set.
pub fn run_renewal(cfg: &RunConfig) -> AppResult<CsvSeries> {
    let n_steps = (cfg.t_max / cfg.h).ceil() as usize;
    let mut occupations = cfg.params.clone();
    occupations.rho0 = None;
    let grid = solve_populations(&occupations, cfg.h, n_steps)?;
    let coherence = match cfg.params.rho0 {
        Some(_) => Some(solve_coherence(&cfg.params, cfg.h, n_steps)?),
        None => None,
    };
    let mut cols = labels(&["t", "n_a", "n_b"]);
    if coherence.is_some() {
        cols.extend(labels(&["re_rho12", "im_rho12"]));
    }
    let rows = grid
        .times()
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row: Vec<Cell> = vec![t.into(), grid.rho11[i].into(), grid.rho22[i].into()];
            if let Some(c) = &coherence {
                row.push(c.rho12[i].re.into());
                row.push(c.rho12[i].im.into());
            }
            row
        })
        .collect();
    let mut meta = cfg.echo();
    meta.push(("n_steps".into(), n_steps.to_string()));
    CsvSeries::new(meta, cols, rows)
}

/// `(column label, g0·τ0)` of each curve in a figure.
pub fn figure_curves(id: FigureId) -> Vec<(String, f64)> {
    let values: &[f64] = match id {
        FigureId::Fig2 => &[INFINITE_G0TAU0, 100.0, 10.0],
        FigureId::Fig3 => &[1.0, 0.5, 0.25],
        FigureId::Fig4 => &[0.25, 0.01, 0.001, 0.0001],
    };
    values
        .iter()
        .map(|&v| {
            let label = if v == INFINITE_G0TAU0 {
                "g0tau0=inf".to_string()
            } else {
                format!("g0tau0={v}")
            };
            (label, v)
        })
        .collect()
}

/// Closed-form curves of one figure against `T = g0·t`, with `na0 = 0` and
/// `nb0 = 2`.
pub fn run_figure(cfg: &RunConfig, id: FigureId) -> AppResult<CsvSeries> {
    let g0 = cfg.params.g0;
    let span = g0 * cfg.t_max;
    let grid = uniform_grid(span, cfg.grid_points);
    let curves = figure_curves(id);
    let params: Vec<RelaxationParams> = curves
        .iter()
        .map(|&(_, x)| RelaxationParams::new(g0, x / g0, FIGURE_NA0, FIGURE_NB0))
        .collect::<Result<_, _>>()?;
    let rows = grid
        .iter()
        .map(|&big_t| {
            let mut row: Vec<Cell> = vec![big_t.into()];
            for p in &params {
                row.push(mean_na(big_t / g0, p)?.into());
            }
            Ok(row)
        })
        .collect::<AppResult<_>>()?;
    let mut cols = vec!["T".to_string()];
    cols.extend(curves.iter().map(|(l, _)| l.clone()));
    let meta = vec![
        ("command".into(), "figure".into()),
        ("figure".into(), id.name().into()),
        ("g0".into(), g0.to_string()),
        ("na0".into(), FIGURE_NA0.to_string()),
        ("nb0".into(), FIGURE_NB0.to_string()),
        ("abscissa".into(), "T = g0*t".into()),
        ("g0tau0_inf_encoding".into(), format!("tau0 = {INFINITE_G0TAU0:e}/g0")),
        ("grid_points".into(), cfg.grid_points.to_string()),
    ];
    CsvSeries::new(meta, cols, rows)
}

/// Regime, signed Ω, effective rate and probe occupations across a range of
/// `g0·τ0` or `τ0` (at the configured `g0`).
pub fn run_sweep(cfg: &RunConfig) -> AppResult<CsvSeries> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| AppError::config("sweep-param", "sweep needs --sweep-min/--sweep-max/--sweep-count"))?;
    spec.validate()?;
    let g0 = cfg.params.g0;
    let (name, to_tau0): (&str, Box<dyn Fn(f64) -> f64>) = match spec.param {
        SweepParam::G0Tau0 => ("g0tau0", Box::new(move |v| v / g0)),
        SweepParam::Tau0 => ("tau0", Box::new(|v| v)),
    };
    let mut cols = labels(&[name, "regime", "omega_signed", "effective_rate"]);
    cols.extend(spec.probes.iter().map(|p| format!("n_a@T={p}")));
    let rows = spec
        .values()
        .into_iter()
        .map(|v| {
            let tau0 = to_tau0(v);
            let regime = classify_regime(g0, tau0)?;
            let rate = match regime.kind {
                RegimeKind::Wcr => None,
                _ => Some(effective_rate(g0, tau0)?),
            };
            let relax = RelaxationParams::new(g0, tau0, cfg.params.na0, cfg.params.nb0)?;
            let mut row: Vec<Cell> = vec![
                v.into(),
                regime.kind.label().into(),
                regime.signed_omega().into(),
                rate.into(),
            ];
            for &probe in &spec.probes {
                row.push(mean_na(probe / g0, &relax)?.into());
            }
            Ok(row)
        })
        .collect::<AppResult<_>>()?;
    let mut meta = cfg.echo();
    meta.extend([
        ("sweep_param".into(), name.into()),
        ("sweep_scale".into(), format!("{:?}", spec.scale).to_lowercase()),
        ("probe_unit".into(), "T = g0*t".into()),
        (
            "omega_sign".into(),
            "+|Omega| oscillatory (WCR), -|Omega| overdamped (SCR), 0 critical".into(),
        ),
    ]);
    CsvSeries::new(meta, cols, rows)
}

/// Writes `series` to `path`, or to standard output when no path is given.
pub fn emit(series: &CsvSeries, path: Option<&Path>, timestamp: bool) -> AppResult<()> {
    let text = series.render(timestamp)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| AppError::io(p, e)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|e| AppError::io("<stdout>", e))
        }
    }
}
