//! Plain-text trajectory dumps for debugging.
//!
//! A header `# tau0=<val> seed=<val> horizon=<val>` followed by one
//! `time<TAB>phase` line per segment start, beginning with `0<TAB>φ0`.

use std::io::{BufRead, Write};

use tmodes_core::telegraph::{NoiseParams, Trajectory};

use crate::error::{AppError, AppResult};

pub fn write_trajectory<W: Write>(
    mut out: W,
    noise: &NoiseParams,
    traj: &Trajectory,
) -> std::io::Result<()> {
    writeln!(
        out,
        "# tau0={} seed={} horizon={}",
        noise.tau0(),
        noise.seed(),
        traj.horizon()
    )?;
    let starts = std::iter::once(0.0).chain(traj.jump_times().iter().copied());
    for (t, phase) in starts.zip(traj.phases()) {
        writeln!(out, "{t}\t{phase}")?;
    }
    Ok(())
}

/// Reads a dump back into its noise parameters and trajectory.
pub fn read_trajectory<R: BufRead>(input: R) -> AppResult<(NoiseParams, Trajectory)> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, reason: String| AppError::Dump { line, reason };
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input".into()))?;
    let header = header.map_err(|e| AppError::io("<dump>", e))?;
    let fields = header
        .strip_prefix("# ")
        .ok_or_else(|| bad(1, "missing `# ` header".into()))?;
    let (mut tau0, mut seed, mut horizon) = (None, None, None);
    for field in fields.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(1, format!("header field `{field}`")))?;
        let num = || value.parse::<f64>().map_err(|e| bad(1, format!("{key}: {e}")));
        match key {
            "tau0" => tau0 = Some(num()?),
            "horizon" => horizon = Some(num()?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(1, format!("seed: {e}")))?),
            _ => return Err(bad(1, format!("unknown header key `{key}`"))),
        }
    }
    let missing = |k: &str| bad(1, format!("header lacks `{k}`"));
    let noise = NoiseParams::new(tau0.ok_or_else(|| missing("tau0"))?, seed.ok_or_else(|| missing("seed"))?)?;
    let horizon = horizon.ok_or_else(|| missing("horizon"))?;
    let mut times = Vec::new();
    let mut phases = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| AppError::io("<dump>", e))?;
        let (t, phase) = line
            .split_once('\t')
            .ok_or_else(|| bad(i + 1, "expected `time<TAB>phase`".into()))?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(i + 1, e.to_string()));
        times.push(parse(t)?);
        phases.push(parse(phase)?);
    }
    if times.first() != Some(&0.0) {
        return Err(bad(2, "first segment must start at 0".into()));
    }
    let traj = Trajectory::new(horizon, times[1..].to_vec(), phases)?;
    Ok((noise, traj))
}
