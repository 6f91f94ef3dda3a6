//! Monte Carlo averages over telegraph trajectories.
//!
//! Each trajectory is evolved exactly: the propagators of its constant-phase
//! segments are multiplied in time order (earliest acts first). Because the
//! Hamiltonian is quadratic, the mode operators evolve under the same 2×2
//! matrix, `a(t) = U11 a + U12 b`, so for initial number states
//! `n_a(t) = |U11|² na0 + |U12|² nb0` holds per trajectory.
//!
//! Ensembles are split into fixed chunks of [`CHUNK_SIZE`] consecutive
//! trajectory indices. Each chunk is reduced sequentially and chunks are
//! merged in index order, so a parallel driver that evaluates chunks on any
//! number of workers reproduces [`mc_average_occupation`] bit for bit.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::matprop::{Complex2x2, Su2, HERMITICITY_TOL};
use crate::params::{check_nonnegative, check_positive};
use crate::telegraph::{trajectory_rng, Segment, SegmentSampler, Trajectory};
use crate::{Error, RelaxationParams, Result};

/// Trajectories per reduction chunk.
pub const CHUNK_SIZE: u64 = 64;

/// Everything an ensemble run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub g0: f64,
    pub tau0: f64,
    pub na0: f64,
    pub nb0: f64,
    /// Initial single-excitation density matrix for [`mc_average_density`].
    pub rho0: Option<Complex2x2>,
    pub t_grid: Vec<f64>,
    pub ensemble_size: usize,
    pub base_seed: u64,
    /// Mode frequencies. Kept for reference only; the propagator is the
    /// interaction-picture one and never uses them.
    pub omega_a: f64,
    pub omega_b: f64,
}

impl SimParams {
    pub fn new(
        g0: f64,
        tau0: f64,
        na0: f64,
        nb0: f64,
        t_grid: Vec<f64>,
        ensemble_size: usize,
        base_seed: u64,
    ) -> Result<Self> {
        let params = Self {
            g0,
            tau0,
            na0,
            nb0,
            rho0: None,
            t_grid,
            ensemble_size,
            base_seed,
            omega_a: 0.0,
            omega_b: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_rho0(mut self, rho0: Complex2x2) -> Result<Self> {
        self.rho0 = Some(rho0);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("g0", self.g0)?;
        check_positive("tau0", self.tau0)?;
        check_nonnegative("na0", self.na0)?;
        check_nonnegative("nb0", self.nb0)?;
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble", "must be at least 1"));
        }
        validate_grid(&self.t_grid)?;
        if let Some(rho) = &self.rho0 {
            validate_density(rho)?;
        }
        Ok(())
    }

    pub fn relaxation(&self) -> RelaxationParams {
        RelaxationParams {
            g0: self.g0,
            tau0: self.tau0,
            na0: self.na0,
            nb0: self.nb0,
        }
    }

    /// Initial density: `rho0` when supplied, otherwise `diag(na0, nb0)`
    /// (occupation normalization, trace N).
    pub fn initial_density(&self) -> Complex2x2 {
        self.rho0
            .unwrap_or_else(|| Complex2x2::diag(self.na0, self.nb0))
    }

    fn horizon(&self) -> f64 {
        self.t_grid.last().copied().unwrap_or(0.0)
    }
}

/// `n` equally spaced points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..n)
            .map(|i| t_max * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    let Some(&first) = grid.first() else {
        return Err(Error::invalid("t_grid", "must not be empty"));
    };
    if !(first >= 0.0) {
        return Err(Error::invalid("t_grid", format!("starts at {first} < 0")));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(Error::invalid(
                "t_grid",
                format!("not strictly increasing at {} -> {}", w[0], w[1]),
            ));
        }
    }
    Ok(())
}

fn validate_density(rho: &Complex2x2) -> Result<()> {
    let defect = rho.hermiticity_defect();
    if !(defect <= HERMITICITY_TOL) {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let p1 = rho.e11.re;
    let p2 = rho.e22.re;
    if (p1 + p2 - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("rho0", format!("trace {} != 1", p1 + p2)));
    }
    if p1 < -1e-12 || p2 < -1e-12 || rho.e12.norm_sqr() > p1 * p2 + 1e-12 {
        return Err(Error::invalid("rho0", "not positive semidefinite"));
    }
    Ok(())
}

/// Sample means with standard errors on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub ensemble_size: usize,
}

/// Complex sample means. `stderr` is the standard error of the complex mean,
/// `sqrt((var(re) + var(im)) / M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    pub mean: Vec<Complex64>,
    pub stderr: Vec<f64>,
}

/// Trajectory-averaged density matrix, element by element.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries {
    pub times: Vec<f64>,
    pub e11: ComplexSeries,
    pub e12: ComplexSeries,
    pub e21: ComplexSeries,
    pub e22: ComplexSeries,
    pub ensemble_size: usize,
}

impl DensitySeries {
    pub fn mean_at(&self, i: usize) -> Complex2x2 {
        Complex2x2::new(
            self.e11.mean[i],
            self.e12.mean[i],
            self.e21.mean[i],
            self.e22.mean[i],
        )
    }
}

/// Streaming mean and sum of squared deviations (Welford), mergeable with
/// Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.count as f64 * w;
        self.count = n;
    }

    /// Unbiased sample variance (needs `count >= 2`).
    pub fn variance(&self) -> f64 {
        (self.m2 / (self.count - 1) as f64).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Per-grid-point moments of `width` observables, laid out `[grid][width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAccumulator {
    width: usize,
    moments: Vec<Moments>,
}

impl EnsembleAccumulator {
    pub fn new(grid_len: usize, width: usize) -> Self {
        Self {
            width,
            moments: alloc::vec![Moments::default(); grid_len * width],
        }
    }

    pub fn count(&self) -> u64 {
        self.moments.first().map_or(0, |m| m.count)
    }

    pub fn merge(&mut self, other: &EnsembleAccumulator) {
        debug_assert_eq!(self.moments.len(), other.moments.len());
        for (a, b) in self.moments.iter_mut().zip(&other.moments) {
            a.merge(b);
        }
    }

    pub fn get(&self, grid_index: usize, observable: usize) -> &Moments {
        &self.moments[grid_index * self.width + observable]
    }

    #[inline]
    fn push(&mut self, grid_index: usize, values: &[f64]) {
        let row = &mut self.moments[grid_index * self.width..(grid_index + 1) * self.width];
        for (m, &x) in row.iter_mut().zip(values) {
            m.push(x);
        }
    }
}

/// Consecutive index ranges of at most [`CHUNK_SIZE`] covering `0..size`.
pub fn chunks(size: usize) -> impl Iterator<Item = Range<u64>> + Clone {
    let size = size as u64;
    (0..size.div_ceil(CHUNK_SIZE)).map(move |k| {
        let start = k * CHUNK_SIZE;
        start..(start + CHUNK_SIZE).min(size)
    })
}

/// Incremental product of segment propagators along one trajectory.
struct Evolver<I> {
    segments: I,
    current: Option<Segment>,
    g0: f64,
    time: f64,
    u: Su2,
}

impl<I: Iterator<Item = Segment>> Evolver<I> {
    fn new(mut segments: I, g0: f64) -> Self {
        let current = segments.next();
        Self {
            segments,
            current,
            g0,
            time: 0.0,
            u: Su2::IDENTITY,
        }
    }

    /// Advances the accumulated propagator to `t >= self.time`; `t` must not
    /// pass the end of the last segment.
    #[inline]
    fn advance_to(&mut self, t: f64) {
        while self.time < t {
            let Some(seg) = self.current else {
                debug_assert!(false, "advanced past the horizon");
                return;
            };
            let stop = seg.end.min(t);
            self.u = self.u.then(Su2::segment(self.g0 * (stop - self.time), seg.phase));
            self.time = stop;
            if stop == seg.end {
                self.current = self.segments.next();
            }
        }
    }
}

fn check_time(t: f64, horizon: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    if t > horizon {
        return Err(Error::BeyondHorizon { t, horizon });
    }
    Ok(())
}

/// Total propagator of `traj` from 0 to `t`.
pub fn propagator_on_trajectory(traj: &Trajectory, g0: f64, t: f64) -> Result<Su2> {
    check_time(t, traj.horizon())?;
    let mut ev = Evolver::new(traj.segments(), g0);
    ev.advance_to(t);
    Ok(ev.u)
}

#[inline]
fn occupation_from(u: &Su2, na0: f64, nb0: f64) -> f64 {
    u.alpha.norm_sqr() * na0 + u.beta.norm_sqr() * nb0
}

/// `n_a(t) = |U11|² na0 + |U12|² nb0` along one trajectory.
pub fn occupation_on_trajectory(traj: &Trajectory, params: &SimParams, t: f64) -> Result<f64> {
    let u = propagator_on_trajectory(traj, params.g0, t)?;
    Ok(occupation_from(&u, params.na0, params.nb0))
}

/// `n_b(t) = |U21|² na0 + |U22|² nb0` along one trajectory.
pub fn occupation_b_on_trajectory(traj: &Trajectory, params: &SimParams, t: f64) -> Result<f64> {
    let u = propagator_on_trajectory(traj, params.g0, t)?;
    Ok(u.beta.norm_sqr() * params.na0 + u.alpha.norm_sqr() * params.nb0)
}

/// `U(t) ρ0 U(t)†` along one trajectory.
pub fn density_on_trajectory(traj: &Trajectory, params: &SimParams, t: f64) -> Result<Complex2x2> {
    let rho0 = params.rho0.ok_or(Error::MissingDensity)?;
    let u = propagator_on_trajectory(traj, params.g0, t)?;
    Ok(u.conjugate(&rho0))
}

/// Runs trajectories `range`, calling `observe(grid_index, U(t))` at every
/// grid time of each one.
fn run_trajectories(
    params: &SimParams,
    range: Range<u64>,
    mut observe: impl FnMut(usize, &Su2),
) {
    let horizon = params.horizon();
    for index in range {
        if horizon > 0.0 {
            let rng = trajectory_rng(params.base_seed, index);
            let mut ev = Evolver::new(SegmentSampler::new(rng, params.tau0, horizon), params.g0);
            for (i, &t) in params.t_grid.iter().enumerate() {
                ev.advance_to(t);
                observe(i, &ev.u);
            }
        } else {
            observe(0, &Su2::IDENTITY);
        }
    }
}

/// Moments of `n_a` over the trajectories in `range`.
pub fn occupation_chunk(params: &SimParams, range: Range<u64>) -> EnsembleAccumulator {
    let mut acc = EnsembleAccumulator::new(params.t_grid.len(), 1);
    run_trajectories(params, range, |i, u| {
        acc.push(i, &[occupation_from(u, params.na0, params.nb0)]);
    });
    acc
}

/// Moments of `(ρ11, ρ22, Re ρ12, Im ρ12)` over the trajectories in `range`.
pub fn density_chunk(params: &SimParams, range: Range<u64>) -> Result<EnsembleAccumulator> {
    let rho0 = params.rho0.ok_or(Error::MissingDensity)?;
    let mut acc = EnsembleAccumulator::new(params.t_grid.len(), 4);
    run_trajectories(params, range, |i, u| {
        let rho = u.conjugate(&rho0);
        acc.push(i, &[rho.e11.re, rho.e22.re, rho.e12.re, rho.e12.im]);
    });
    Ok(acc)
}

fn check_ensemble(params: &SimParams) -> Result<()> {
    params.validate()?;
    if params.ensemble_size < 2 {
        return Err(Error::EnsembleTooSmall {
            size: params.ensemble_size,
        });
    }
    Ok(())
}

/// Merges chunk results in the order given.
pub fn merge_in_order(
    grid_len: usize,
    width: usize,
    parts: impl IntoIterator<Item = EnsembleAccumulator>,
) -> EnsembleAccumulator {
    parts
        .into_iter()
        .fold(EnsembleAccumulator::new(grid_len, width), |mut acc, part| {
            acc.merge(&part);
            acc
        })
}

/// Mean occupation of mode `a` with standard errors, sequentially.
pub fn mc_average_occupation(params: &SimParams) -> Result<TimeSeries> {
    check_ensemble(params)?;
    let acc = merge_in_order(
        params.t_grid.len(),
        1,
        chunks(params.ensemble_size).map(|r| occupation_chunk(params, r)),
    );
    occupation_series(params, &acc)
}

/// Element-wise mean density matrix with standard errors, sequentially.
pub fn mc_average_density(params: &SimParams) -> Result<DensitySeries> {
    check_ensemble(params)?;
    let mut parts = Vec::new();
    for r in chunks(params.ensemble_size) {
        parts.push(density_chunk(params, r)?);
    }
    let acc = merge_in_order(params.t_grid.len(), 4, parts);
    density_series(params, &acc)
}

/// Converts merged occupation moments into a [`TimeSeries`].
pub fn occupation_series(params: &SimParams, acc: &EnsembleAccumulator) -> Result<TimeSeries> {
    check_ensemble(params)?;
    check_complete(params, acc)?;
    let n = params.t_grid.len();
    Ok(TimeSeries {
        times: params.t_grid.clone(),
        mean: (0..n).map(|i| acc.get(i, 0).mean).collect(),
        stderr: (0..n).map(|i| acc.get(i, 0).stderr()).collect(),
        ensemble_size: params.ensemble_size,
    })
}

/// Converts merged density moments into a [`DensitySeries`].
pub fn density_series(params: &SimParams, acc: &EnsembleAccumulator) -> Result<DensitySeries> {
    check_ensemble(params)?;
    check_complete(params, acc)?;
    let n = params.t_grid.len();
    let real = |k: usize| ComplexSeries {
        mean: (0..n).map(|i| Complex64::new(acc.get(i, k).mean, 0.0)).collect(),
        stderr: (0..n).map(|i| acc.get(i, k).stderr()).collect(),
    };
    let coherence = |conj: bool| ComplexSeries {
        mean: (0..n)
            .map(|i| {
                let z = Complex64::new(acc.get(i, 2).mean, acc.get(i, 3).mean);
                if conj {
                    z.conj()
                } else {
                    z
                }
            })
            .collect(),
        stderr: (0..n)
            .map(|i| {
                let (re, im) = (acc.get(i, 2), acc.get(i, 3));
                ((re.variance() + im.variance()) / re.count as f64).sqrt()
            })
            .collect(),
    };
    Ok(DensitySeries {
        times: params.t_grid.clone(),
        e11: real(0),
        e12: coherence(false),
        e21: coherence(true),
        e22: real(1),
        ensemble_size: params.ensemble_size,
    })
}

fn check_complete(params: &SimParams, acc: &EnsembleAccumulator) -> Result<()> {
    if acc.count() != params.ensemble_size as u64 {
        return Err(Error::invalid(
            "ensemble",
            format!(
                "accumulated {} trajectories, expected {}",
                acc.count(),
                params.ensemble_size
            ),
        ));
    }
    Ok(())
}
