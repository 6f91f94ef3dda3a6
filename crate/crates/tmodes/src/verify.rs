//! The verification suite behind `tmodes verify`.
//!
//! Every check reports the measured quantity next to its bound, so a failing
//! report says by how much a check missed.

use std::fmt;
use std::time::Instant;

use tmodes_core::analytic::{classify_regime, effective_rate, mean_na, RegimeKind};
use tmodes_core::ensemble::{
    occupation_b_on_trajectory, occupation_on_trajectory, uniform_grid, SimParams, TimeSeries,
};
use tmodes_core::laplace::mean_na_numeric;
use tmodes_core::renewal::{residual_check_fn, solve_populations};
use tmodes_core::telegraph::NoiseParams;
use tmodes_core::RelaxationParams;

use crate::commands::{figure_curves, run_figure, run_simulate, run_sweep};
use crate::config::{
    parse_config, Command, FigureId, RunConfig, RunOptions, SweepParam, SweepScale, SweepSpec,
};
use crate::error::AppResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyScale {
    Full,
    Quick,
}

impl VerifyScale {
    pub fn ensemble(self) -> usize {
        match self {
            VerifyScale::Full => 10_000,
            VerifyScale::Quick => 1_000,
        }
    }

    /// Allowed deviation of an ensemble mean, in standard errors.
    pub fn sigma_gate(self) -> f64 {
        match self {
            VerifyScale::Full => 4.0,
            VerifyScale::Quick => 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    Below(f64),
    AtLeast(f64),
    Above(f64),
    Within(f64, f64),
    Equal(f64),
}

impl Bound {
    pub fn admits(self, x: f64) -> bool {
        match self {
            Bound::AtMost(b) => x <= b,
            Bound::Below(b) => x < b,
            Bound::AtLeast(b) => x >= b,
            Bound::Above(b) => x > b,
            Bound::Within(lo, hi) => (lo..=hi).contains(&x),
            Bound::Equal(b) => x == b,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::Below(b) => write!(f, "< {b:e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:e}"),
            Bound::Above(b) => write!(f, "> {b:e}"),
            Bound::Within(lo, hi) => write!(f, "in [{lo}, {hi}]"),
            Bound::Equal(b) => write!(f, "== {b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    /// Acceptance criterion number, or a short group tag.
    pub group: String,
    pub name: String,
    pub measured: f64,
    pub tolerance: Bound,
    pub passed: bool,
    pub seconds: f64,
}

impl CheckResult {
    pub fn new(group: impl Into<String>, name: impl Into<String>, measured: f64, tolerance: Bound) -> Self {
        Self {
            group: group.into(),
            name: name.into(),
            measured,
            tolerance,
            passed: tolerance.admits(measured),
            seconds: 0.0,
        }
    }

    fn took(mut self, seconds: f64) -> Self {
        self.seconds = seconds;
        self
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: measured {:.6e}, required {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.group,
            self.name,
            self.measured,
            self.tolerance,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub scale: VerifyScale,
    pub seed: u64,
    pub workers: usize,
    pub order: usize,
}

impl VerifyOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            scale: if cfg.quick { VerifyScale::Quick } else { VerifyScale::Full },
            seed: cfg.params.base_seed,
            workers: cfg.workers,
            order: cfg.order,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn render(&self) -> String {
        let mut out: String = self.checks.iter().map(|c| format!("{c}\n")).collect();
        out.push_str(&format!(
            "{} of {} checks passed\n",
            self.checks.len() - self.failures(),
            self.checks.len()
        ));
        out
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn relax(g0: f64, tau0: f64, na0: f64, nb0: f64) -> AppResult<RelaxationParams> {
    Ok(RelaxationParams::new(g0, tau0, na0, nb0)?)
}

/// The closed form with the sign of its sine (or sinh) term flipped.
pub fn mutated_mean_na(t: f64, p: &RelaxationParams) -> AppResult<f64> {
    let a = 0.5 / p.tau0;
    let regime = classify_regime(p.g0, p.tau0)?;
    let w = regime.omega;
    let bracket = match regime.kind {
        RegimeKind::Wcr => (w * t).cos() - a * (w * t).sin() / w,
        RegimeKind::Scr => (w * t).cosh() - a * (w * t).sinh() / w,
        RegimeKind::Critical => 1.0 - a * t,
    };
    Ok(0.5 * p.n_total() + (p.na0 - 0.5 * p.n_total()) * (-a * t).exp() * bracket)
}

/// Largest `|mean − f(t)| / stderr` over a series. A point with zero spread
/// counts as infinitely far unless it matches to 1e-12.
pub fn worst_sigma(series: &TimeSeries, f: impl Fn(f64) -> AppResult<f64>) -> AppResult<f64> {
    let mut worst: f64 = 0.0;
    for ((&t, &m), &e) in series.times.iter().zip(&series.mean).zip(&series.stderr) {
        let gap = (m - f(t)?).abs();
        let sigma = if e > 0.0 {
            gap / e
        } else if gap <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(sigma);
    }
    Ok(worst)
}

/// Criterion 1: closed form against the numerically inverted transform.
pub fn closed_form_vs_laplace(order: usize) -> AppResult<Vec<CheckResult>> {
    let (gap, secs) = timed(|| -> AppResult<f64> {
        let p = relax(1.0, 1.0, 0.0, 2.0)?;
        let mut gap: f64 = 0.0;
        for t in [0.5, 1.0, 2.0] {
            gap = gap.max((mean_na(t, &p)? - mean_na_numeric(t, &p, order)?.value).abs());
        }
        Ok(gap)
    });
    let gap = gap?;
    Ok(vec![
        CheckResult::new("1", "closed form vs inverted transform", gap, Bound::AtMost(1e-6)).took(secs),
        CheckResult::new("1", "runtime", secs, Bound::Below(1.0)),
    ])
}

fn mc_params(g0tau0: f64, ensemble: usize, seed: u64, t_max: f64, points: usize) -> AppResult<SimParams> {
    Ok(SimParams::new(1.0, g0tau0, 0.0, 2.0, uniform_grid(t_max, points), ensemble, seed)?)
}

/// Criterion 2 plus the Monte Carlo half of the mutation test.
pub fn monte_carlo_vs_closed_form(opts: &VerifyOptions) -> AppResult<Vec<CheckResult>> {
    let gate = opts.scale.sigma_gate();
    let mut out = Vec::new();
    let mut total = 0.0;
    for g0tau0 in [10.0, 1.0, 0.25, 0.05] {
        let params = mc_params(g0tau0, opts.scale.ensemble(), opts.seed, 20.0, 200)?;
        let (series, secs) = timed(|| crate::parallel::occupation(&params, opts.workers));
        let series = series?;
        total += secs;
        let p = params.relaxation();
        let sigma = worst_sigma(&series, |t| Ok(mean_na(t, &p)?))?;
        out.push(
            CheckResult::new(
                "2",
                format!("MC vs closed form, g0tau0={g0tau0}, max |dev|/stderr"),
                sigma,
                Bound::AtMost(gate),
            )
            .took(secs),
        );
        if g0tau0 == 1.0 {
            let mutated = worst_sigma(&series, |t| mutated_mean_na(t, &p))?;
            out.push(CheckResult::new(
                "mutation",
                "MC rejects sign-flipped closed form, max |dev|/stderr",
                mutated,
                Bound::Above(gate),
            ));
        }
    }
    out.push(CheckResult::new("2", "runtime", total, Bound::Below(60.0)));
    Ok(out)
}

fn renewal_error(h: f64) -> AppResult<f64> {
    let (g0, tau0) = (1.0, 1.0);
    let sim = SimParams::new(g0, tau0, 0.0, 1.0, vec![0.0, 1.0], 2, 0)?;
    let n = (20.0 / g0 / h).round() as usize;
    let grid = solve_populations(&sim, h, n)?;
    let p = relax(g0, tau0, 0.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for (i, t) in grid.times().into_iter().enumerate() {
        let exact = mean_na(t, &p)?;
        worst = worst.max((grid.rho11[i] - exact).abs()).max((grid.rho22[i] - (1.0 - exact)).abs());
    }
    Ok(worst)
}

/// Criterion 3: renewal solver accuracy and second-order convergence.
pub fn renewal_vs_closed_form() -> AppResult<Vec<CheckResult>> {
    // g0 = τ0 = 1, so min(τ0, 1/g0) = 1.
    let h = 1.0 / 40.0;
    let (errors, secs) = timed(|| -> AppResult<(f64, f64)> { Ok((renewal_error(h)?, renewal_error(h / 2.0)?)) });
    let (coarse, fine) = errors?;
    Ok(vec![
        CheckResult::new("3", "renewal max error at h=1/40 (unit populations)", coarse, Bound::AtMost(1e-3))
            .took(secs),
        CheckResult::new("3", "error ratio on halving h", coarse / fine, Bound::Within(3.5, 4.5)),
        CheckResult::new("3", "runtime", secs, Bound::Below(10.0)),
    ])
}

/// Criterion 4 plus the residual half of the mutation test.
pub fn integral_equation_residual() -> AppResult<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut total = 0.0;
    let times = uniform_grid(20.0, 101);
    for g0tau0 in [10.0, 0.05] {
        let p = relax(1.0, g0tau0, 0.0, 2.0)?;
        let (r, secs) = timed(|| residual_check_fn(|t| mean_na(t, &p).unwrap_or(f64::NAN), &times, &p));
        total += secs;
        let n = p.n_total();
        out.push(
            CheckResult::new("4", format!("residual / N, g0tau0={g0tau0}"), r / n, Bound::AtMost(1e-6))
                .took(secs),
        );
        let m = residual_check_fn(|t| mutated_mean_na(t, &p).unwrap_or(f64::NAN), &times, &p);
        out.push(CheckResult::new(
            "mutation",
            format!("residual rejects sign-flipped closed form / N, g0tau0={g0tau0}"),
            m / n,
            Bound::Above(1e-6),
        ));
    }
    out.push(CheckResult::new("4", "runtime", total, Bound::Below(5.0)));
    Ok(out)
}

/// Criterion 5: the regime flips once, at 0.25, and the occupation is
/// continuous across it.
pub fn transition_point() -> AppResult<Vec<CheckResult>> {
    let g0 = 1.0;
    let kind = |x: f64| classify_regime(g0, x / g0).map(|r| r.kind);
    let exact = kind(0.25)? == RegimeKind::Critical
        && kind(0.25 * (1.0 + 1e-9))? == RegimeKind::Wcr
        && kind(0.25 * (1.0 - 1e-9))? == RegimeKind::Scr;
    let mut flips = 0;
    let mut previous = kind(0.01)?;
    for k in 1..=400 {
        let now = kind(0.01 * 1000f64.powf(k as f64 / 400.0))?;
        if now != previous && now != RegimeKind::Critical {
            flips += 1;
        }
        previous = now;
    }
    let eps = 1e-6;
    let n = 2.0;
    let below = relax(g0, 0.25 * (1.0 - eps) / g0, 0.0, n)?;
    let above = relax(g0, 0.25 * (1.0 + eps) / g0, 0.0, n)?;
    let mut gap: f64 = 0.0;
    for k in 0..=2000 {
        let t = k as f64 * (20.0 * 0.25 / g0) / 2000.0;
        gap = gap.max((mean_na(t, &below)? - mean_na(t, &above)?).abs());
    }
    Ok(vec![
        CheckResult::new("5", "classifier is Critical at 0.25 with WCR above, SCR below", exact as u8 as f64, Bound::Equal(1.0)),
        CheckResult::new("5", "regime changes over g0tau0 in [0.01, 10]", flips as f64, Bound::Equal(1.0)),
        CheckResult::new("5", "branch gap / N at 1e-6 relative offset", gap / n, Bound::AtMost(1e-5)),
    ])
}

/// Criterion 6: `τ0 = 1e9/g0` reproduces `N sin²(g0 t)`.
pub fn pure_oscillation() -> AppResult<Vec<CheckResult>> {
    let g0 = 1.0;
    let p = relax(g0, 1e9 / g0, 0.0, 2.0)?;
    let mut worst: f64 = 0.0;
    for k in 0..=2000 {
        let t = 0.01 * k as f64 / g0;
        worst = worst.max((mean_na(t, &p)? - 2.0 * (g0 * t).sin().powi(2)).abs());
    }
    Ok(vec![CheckResult::new("6", "max |n_a - N sin^2(g0 t)|", worst, Bound::AtMost(1e-6))])
}

/// Criterion 7: at `g0τ0 = 1e-4` the exchange is frozen.
pub fn freezing(opts: &VerifyOptions) -> AppResult<Vec<CheckResult>> {
    let g0 = 1.0;
    let tau0 = 1e-4 / g0;
    let p = relax(g0, tau0, 0.0, 2.0)?;
    let limit = 0.05 * 2.0;
    let mut analytic: f64 = 0.0;
    for k in 0..=5000 {
        analytic = analytic.max(mean_na(0.01 * k as f64 / g0, &p)?);
    }
    let params = SimParams::new(g0, tau0, 0.0, 2.0, uniform_grid(50.0 / g0, 101), opts.scale.ensemble(), opts.seed)?;
    let (series, secs) = timed(|| crate::parallel::occupation(&params, opts.workers));
    let series = series?;
    let mc = series.mean.iter().copied().fold(0.0, f64::max);
    let rate = effective_rate(g0, tau0)?;
    let rel = (rate / (4.0 * g0 * g0 * tau0) - 1.0).abs();
    Ok(vec![
        CheckResult::new("7", "max analytic n_a for g0 t <= 50", analytic, Bound::Below(limit)),
        CheckResult::new("7", "max MC n_a for g0 t <= 50", mc, Bound::Below(limit)).took(secs),
        CheckResult::new("7", "effective_rate vs 4 g0^2 tau0, relative", rel, Bound::AtMost(0.01)),
    ])
}

fn simulate_config(seed: u64, workers: usize) -> AppResult<RunConfig> {
    let mut options = RunOptions::new(Command::Simulate);
    options.timestamp = false;
    options.workers = workers;
    let flags: Vec<(String, String)> = [
        ("g0", "1"),
        ("tau0", "0.5"),
        ("ensemble", "1000"),
        ("grid_points", "120"),
        ("t_max", "10"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .chain([("seed".to_string(), seed.to_string())])
    .collect();
    parse_config(&[], &flags, options)
}

/// Criterion 8: per-trajectory conservation and worker-count independence.
pub fn conservation_and_determinism(opts: &VerifyOptions) -> AppResult<Vec<CheckResult>> {
    let params = SimParams::new(1.3, 0.2, 0.7, 1.6, uniform_grid(15.0, 61), 2, opts.seed)?;
    let noise = NoiseParams::new(params.tau0, params.base_seed)?;
    let n = params.na0 + params.nb0;
    let mut drift: f64 = 0.0;
    for index in 0..500 {
        let traj = noise.trajectory(index, 15.0)?;
        for &t in &params.t_grid {
            let total = occupation_on_trajectory(&traj, &params, t)? + occupation_b_on_trajectory(&traj, &params, t)?;
            drift = drift.max((total - n).abs());
        }
    }
    let alt_workers = if opts.workers == 4 { 2 } else { 4 };
    let one = run_simulate(&simulate_config(opts.seed, 1)?)?.render(false)?;
    let many = run_simulate(&simulate_config(opts.seed, alt_workers)?)?.render(false)?;
    let first_diff = one
        .bytes()
        .zip(many.bytes())
        .position(|(a, b)| a != b)
        .map_or((one.len() != many.len()) as u8 as f64, |_| 1.0);
    Ok(vec![
        CheckResult::new("8", "max per-trajectory |n_a + n_b - N|", drift, Bound::AtMost(1e-12)),
        CheckResult::new(
            "8",
            format!("CSV bytes differ between 1 and {alt_workers} workers"),
            first_diff,
            Bound::Equal(0.0),
        ),
    ])
}

fn figure_config() -> AppResult<RunConfig> {
    parse_config(&[], &[], RunOptions::new(Command::Figure))
}

fn column(series: &crate::table::CsvSeries, name: &str) -> Vec<f64> {
    series
        .column(name)
        .unwrap_or_default()
        .into_iter()
        .map(|x| x.unwrap_or(f64::NAN))
        .collect()
}

/// Qualitative properties of the three figures.
pub fn figure_properties() -> AppResult<Vec<CheckResult>> {
    let cfg = figure_config()?;
    let g0 = cfg.params.g0;

    let fig2 = run_figure(&cfg, FigureId::Fig2)?;
    let (label, x) = figure_curves(FigureId::Fig2)
        .into_iter()
        .find(|(_, x)| *x == 10.0)
        .expect("fig2 has a g0tau0 = 10 curve");
    let p = relax(g0, x / g0, 0.0, 2.0)?;
    let mut peak_gap: f64 = 0.0;
    let mut k = 0;
    loop {
        let big_t = (2 * k + 1) as f64 * std::f64::consts::FRAC_PI_2;
        if big_t > 20.0 {
            break;
        }
        peak_gap = peak_gap.max((mean_na(big_t / g0, &p)? - (1.0 + (-big_t / 20.0).exp())).abs());
        k += 1;
    }
    let fig2_col = column(&fig2, &label);
    let fig2_exact = fig2
        .rows()
        .iter()
        .zip(&fig2_col)
        .map(|(row, &v)| {
            let big_t = row[0].as_f64().unwrap_or(f64::NAN);
            Ok((v - mean_na(big_t / g0, &p)?).abs())
        })
        .collect::<AppResult<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let fig3 = run_figure(&cfg, FigureId::Fig3)?;
    let crit = column(&fig3, "g0tau0=0.25");
    let worst_drop = crit.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);

    let fig4 = run_figure(&cfg, FigureId::Fig4)?;
    let frozen = column(&fig4, "g0tau0=0.0001").into_iter().fold(f64::NEG_INFINITY, f64::max);

    Ok(vec![
        CheckResult::new("figure", "fig2 g0tau0=10 column equals closed form", fig2_exact, Bound::AtMost(0.0)),
        CheckResult::new(
            "figure",
            "fig2 g0tau0=10 peaks vs 1 + exp(-T/20) at T = (2k+1)pi/2",
            peak_gap,
            Bound::AtMost(FIG2_PEAK_TOL),
        ),
        CheckResult::new("figure", "fig3 g0tau0=0.25 largest decrease between points", worst_drop, Bound::AtMost(0.0)),
        CheckResult::new("figure", "fig4 g0tau0=0.0001 max over T in [0, 20]", frozen, Bound::Below(0.01)),
    ])
}

/// Allowed gap between the fig2 peaks and their envelope; the peaks sit off
/// `(2k+1)π/2` because the damped frequency is slightly below `2g0`.
pub const FIG2_PEAK_TOL: f64 = 2e-3;

/// Sweep properties: one regime change, and transfer wins over freezing.
pub fn sweep_properties() -> AppResult<Vec<CheckResult>> {
    let mut options = RunOptions::new(Command::Sweep);
    options.sweep = Some(SweepSpec {
        param: SweepParam::G0Tau0,
        min: 0.01,
        max: 10.0,
        count: 50,
        scale: SweepScale::Log,
        probes: vec![2.0],
    });
    let cfg = parse_config(&[], &[], options)?;
    let sweep = run_sweep(&cfg)?;
    let k = sweep.columns().iter().position(|c| c == "regime").unwrap_or(1);
    let labels: Vec<String> = sweep.rows().iter().map(|r| r[k].to_string()).collect();
    let crossings = labels
        .iter()
        .filter(|l| *l != "Critical")
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count();
    let probe = column(&sweep, "n_a@T=2");
    let lead = probe.last().copied().unwrap_or(f64::NAN) - probe.first().copied().unwrap_or(f64::NAN);
    Ok(vec![
        CheckResult::new("sweep", "regime boundary crossings over [0.01, 10]", crossings as f64, Bound::Equal(1.0)),
        CheckResult::new("sweep", "n_a(T=2) at g0tau0=10 minus at 0.01", lead, Bound::Above(0.0)),
    ])
}

/// Runs every check. `progress` sees each group's results as they finish.
pub fn run_all(opts: &VerifyOptions, mut progress: impl FnMut(&CheckResult)) -> AppResult<Report> {
    let mut report = Report::default();
    let mut add = |checks: Vec<CheckResult>| {
        for c in checks {
            progress(&c);
            report.checks.push(c);
        }
    };
    add(closed_form_vs_laplace(opts.order)?);
    add(monte_carlo_vs_closed_form(opts)?);
    add(renewal_vs_closed_form()?);
    add(integral_equation_residual()?);
    add(transition_point()?);
    add(pure_oscillation()?);
    add(freezing(opts)?);
    add(conservation_and_determinism(opts)?);
    add(figure_properties()?);
    add(sweep_properties()?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_admit_as_written() {
        assert!(Bound::AtMost(1.0).admits(1.0));
        assert!(!Bound::Below(1.0).admits(1.0));
        assert!(Bound::Within(3.5, 4.5).admits(4.0));
        assert!(!Bound::Above(0.0).admits(f64::NAN));
        assert!(!Bound::AtMost(1.0).admits(f64::NAN));
    }

    #[test]
    fn deterministic_checks_pass() {
        for checks in [transition_point().unwrap(), pure_oscillation().unwrap(), sweep_properties().unwrap()] {
            for c in checks {
                assert!(c.passed, "{c}");
            }
        }
    }
}
