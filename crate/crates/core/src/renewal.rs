//! Renewal equations for the phase-averaged density matrix.
//!
//! Splitting histories at their last jump before τ gives
//!
//! ```text
//! ρ̄(τ)_im = e^{−τ/τ0} Tr[G^{im}(τ) ρ(0)] + (1/τ0) ∫_0^τ e^{−(τ−t)/τ0} Tr[G^{im}(τ−t) ρ̄(t)] dt
//! ```
//!
//! where `G^{im}(Δ)_{lk} = ⟨U_ik(φ, Δ) U†_lm(φ, Δ)⟩_φ`. Only the entries free
//! of `e^{±iφ}` survive the uniform phase average, leaving `cos²(g0 Δ)` and
//! `sin²(g0 Δ)`. The populations obey a coupled pair with kernels cos²/sin²
//! and the coherence a scalar equation with kernel cos².
//!
//! The solvers march on a uniform grid. The memory weight `e^{−u/τ0}/τ0` is
//! integrated exactly against the piecewise-linear interpolant of the rest of
//! the integrand (product trapezoidal rule), which keeps the discrete weights
//! summing to `1 − e^{−τ/τ0}` and hence conserves the trace to rounding.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::ensemble::{SimParams, TimeSeries};
use crate::matprop::Su2;
use crate::quadrature;
use crate::telegraph::sample_phase;
use crate::{Error, RelaxationParams, Result};

/// Resolution guard: `h <= min(τ0, 1/g0) / RESOLUTION_FACTOR`.
pub const RESOLUTION_FACTOR: f64 = 20.0;

/// Phase-averaged bilinear propagator products, indexed `[l][k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GSet<T = f64> {
    pub g11: [[T; 2]; 2],
    pub g12: [[T; 2]; 2],
    pub g21: [[T; 2]; 2],
    pub g22: [[T; 2]; 2],
}

impl<T: Copy> GSet<T> {
    /// Matrix `G^{im}` for `i, m ∈ {0, 1}`.
    pub fn get(&self, i: usize, m: usize) -> &[[T; 2]; 2] {
        match (i, m) {
            (0, 0) => &self.g11,
            (0, 1) => &self.g12,
            (1, 0) => &self.g21,
            _ => &self.g22,
        }
    }

    fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let mut mat = |i, m| [[f(i, m, 0, 0), f(i, m, 0, 1)], [f(i, m, 1, 0), f(i, m, 1, 1)]];
        GSet {
            g11: mat(0, 0),
            g12: mat(0, 1),
            g21: mat(1, 0),
            g22: mat(1, 1),
        }
    }
}

impl GSet<Complex64> {
    /// Largest entrywise modulus of `self − exact`.
    pub fn max_deviation(&self, exact: &GSet<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for m in 0..2 {
                for l in 0..2 {
                    for k in 0..2 {
                        let d = self.get(i, m)[l][k] - exact.get(i, m)[l][k];
                        worst = worst.max(d.norm());
                    }
                }
            }
        }
        worst
    }
}

/// Closed-form G-matrices for elapsed time `dt >= 0`.
pub fn g_matrices(g0: f64, dt: f64) -> Result<GSet> {
    if !(dt >= 0.0) {
        return Err(Error::invalid("dt", format!("must be >= 0, got {dt}")));
    }
    let c2 = (g0 * dt).cos().powi(2);
    let s2 = (g0 * dt).sin().powi(2);
    Ok(GSet {
        g11: [[c2, 0.0], [0.0, s2]],
        g12: [[0.0, 0.0], [c2, 0.0]],
        g21: [[0.0, c2], [0.0, 0.0]],
        g22: [[s2, 0.0], [0.0, c2]],
    })
}

/// Monte Carlo estimate of the G-matrices from `samples` uniform phases.
pub fn g_matrices_mc<R: Rng + ?Sized>(
    g0: f64,
    dt: f64,
    samples: usize,
    rng: &mut R,
) -> Result<GSet<Complex64>> {
    if samples < 1000 {
        return Err(Error::invalid(
            "samples",
            format!("need at least 1000, got {samples}"),
        ));
    }
    if !(dt >= 0.0) {
        return Err(Error::invalid("dt", format!("must be >= 0, got {dt}")));
    }
    let mut acc = GSet::from_fn(|_, _, _, _| Complex64::new(0.0, 0.0));
    for _ in 0..samples {
        let u = Su2::segment(g0 * dt, sample_phase(rng)).to_matrix();
        let e = [[u.e11, u.e12], [u.e21, u.e22]];
        // (U⁻¹)_lm = conj(U_ml)
        let term = GSet::from_fn(|i, m, l, k| e[i][k] * e[m][l].conj());
        for i in 0..2 {
            for m in 0..2 {
                let dst = match (i, m) {
                    (0, 0) => &mut acc.g11,
                    (0, 1) => &mut acc.g12,
                    (1, 0) => &mut acc.g21,
                    _ => &mut acc.g22,
                };
                for (row, src) in dst.iter_mut().zip(term.get(i, m)) {
                    for (d, s) in row.iter_mut().zip(src) {
                        *d += *s;
                    }
                }
            }
        }
    }
    let scale = 1.0 / samples as f64;
    Ok(GSet::from_fn(|i, m, l, k| acc.get(i, m)[l][k] * scale))
}

/// Averaged populations on the grid `τ_n = n h`, `n = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalGrid {
    pub h: f64,
    pub n_steps: usize,
    pub rho11: Vec<f64>,
    pub rho22: Vec<f64>,
}

impl RenewalGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| n as f64 * self.h).collect()
    }
}

/// Averaged coherence ρ̄12 on the grid `τ_n = n h`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceGrid {
    pub h: f64,
    pub n_steps: usize,
    pub rho12: Vec<Complex64>,
}

/// Largest step the resolution guard accepts.
pub fn max_step(g0: f64, tau0: f64) -> f64 {
    tau0.min(1.0 / g0) / RESOLUTION_FACTOR
}

fn check_step(params: &SimParams, h: f64) -> Result<()> {
    params.validate()?;
    let required = max_step(params.g0, params.tau0);
    if !(h > 0.0) || h > required * (1.0 + 1e-12) {
        return Err(Error::Underresolved { h, required });
    }
    Ok(())
}

/// Product-trapezoid weights on one step for `e^{−u/τ0}/τ0`: `(near, far)`
/// are the integrals against the linear hat functions anchored at the
/// smaller and the larger lag.
fn step_weights(h: f64, tau0: f64) -> (f64, f64) {
    let r = h / tau0;
    // far = (1 − e^{−r}(1 + r)) / r, near = (1 − e^{−r}) − far
    let far = if r < 0.1 {
        // Σ_{k≥2} (−1)^k (k−1) r^{k−1} / k!
        let mut term = 1.0; // r^{k-1}/k! at k = 1
        let mut sum = 0.0;
        for k in 2..20 {
            term *= r / k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (k - 1) as f64 * term;
        }
        sum
    } else {
        (1.0 - (-r).exp() * (1.0 + r)) / r
    };
    let total = -(-r).exp_m1();
    (total - far, far)
}

/// Lag tables shared by the marching solvers.
struct Lags {
    cos2: Vec<f64>,
    sin2: Vec<f64>,
    /// Weight of the grid value at lag `m` (m ≥ 1) in the memory integral,
    /// excluding the endpoint `t = 0`, which only takes the far weight.
    interior: Vec<f64>,
    /// Weight of the value at `t = 0` when it sits at lag `m`.
    origin: Vec<f64>,
    /// Weight of the unknown endpoint (lag 0).
    endpoint: f64,
    survival: Vec<f64>,
}

impl Lags {
    fn new(g0: f64, tau0: f64, h: f64, n_steps: usize) -> Self {
        let (near, far) = step_weights(h, tau0);
        let decay = |m: usize| (-(m as f64) * h / tau0).exp();
        let survival: Vec<f64> = (0..=n_steps).map(decay).collect();
        let interior = (0..=n_steps)
            .map(|m| if m == 0 { 0.0 } else { survival[m - 1] * far + survival[m] * near })
            .collect();
        let origin = (0..=n_steps)
            .map(|m| if m == 0 { 0.0 } else { survival[m - 1] * far })
            .collect();
        let angle = |m: usize| g0 * m as f64 * h;
        Self {
            cos2: (0..=n_steps).map(|m| angle(m).cos().powi(2)).collect(),
            sin2: (0..=n_steps).map(|m| angle(m).sin().powi(2)).collect(),
            interior,
            origin,
            endpoint: near,
            survival,
        }
    }

    fn weight(&self, step: usize, j: usize) -> f64 {
        let m = step - j;
        if j == 0 {
            self.origin[m]
        } else {
            self.interior[m]
        }
    }
}

/// Marches the coupled population equations. The initial populations come
/// from [`SimParams::initial_density`], so either normalization (unit trace
/// or trace N) is carried through.
pub fn solve_populations(params: &SimParams, h: f64, n_steps: usize) -> Result<RenewalGrid> {
    check_step(params, h)?;
    let rho0 = params.initial_density();
    let lags = Lags::new(params.g0, params.tau0, h, n_steps);
    let mut p1 = Vec::with_capacity(n_steps + 1);
    let mut p2 = Vec::with_capacity(n_steps + 1);
    p1.push(rho0.e11.re);
    p2.push(rho0.e22.re);
    // K(0) = I, so the implicit endpoint system is diagonal.
    let lhs = 1.0 - lags.endpoint;
    for n in 1..=n_steps {
        let mut mem1 = 0.0;
        let mut mem2 = 0.0;
        for j in 0..n {
            let m = n - j;
            let w = lags.weight(n, j);
            mem1 += w * (lags.cos2[m] * p1[j] + lags.sin2[m] * p2[j]);
            mem2 += w * (lags.sin2[m] * p1[j] + lags.cos2[m] * p2[j]);
        }
        let s = lags.survival[n];
        let free1 = s * (lags.cos2[n] * p1[0] + lags.sin2[n] * p2[0]);
        let free2 = s * (lags.sin2[n] * p1[0] + lags.cos2[n] * p2[0]);
        p1.push((free1 + mem1) / lhs);
        p2.push((free2 + mem2) / lhs);
    }
    Ok(RenewalGrid {
        h,
        n_steps,
        rho11: p1,
        rho22: p2,
    })
}

/// Marches the scalar coherence equation
/// `ρ̄12(τ) = e^{−τ/τ0} cos²(g0 τ) ρ12(0) + (1/τ0)∫ e^{−(τ−t)/τ0} cos²(g0(τ−t)) ρ̄12(t) dt`.
pub fn solve_coherence(params: &SimParams, h: f64, n_steps: usize) -> Result<CoherenceGrid> {
    let rho0 = params.rho0.ok_or(Error::MissingDensity)?;
    check_step(params, h)?;
    let lags = Lags::new(params.g0, params.tau0, h, n_steps);
    let mut c = Vec::with_capacity(n_steps + 1);
    c.push(rho0.e12);
    let lhs = 1.0 - lags.endpoint;
    for n in 1..=n_steps {
        let mut mem = Complex64::new(0.0, 0.0);
        for (j, &cj) in c.iter().enumerate() {
            mem += cj * (lags.weight(n, j) * lags.cos2[n - j]);
        }
        let free = c[0] * (lags.survival[n] * lags.cos2[n]);
        c.push((free + mem) / lhs);
    }
    Ok(CoherenceGrid {
        h,
        n_steps,
        rho12: c,
    })
}

/// Quadrature tolerance used by the residual checks.
const RESIDUAL_QUAD_TOL: f64 = 1e-11;

/// Residual of the occupation renewal equation at `tau`, scaled by
/// `e^{−τ/τ0}`:
///
/// ```text
/// n(τ) − e^{−τ/τ0}[na0 cos(2g0τ) + N sin²(g0τ)]
///      − (1/τ0) ∫_0^τ e^{−(τ−t)/τ0}[n(t) cos(2g0(τ−t)) + N sin²(g0(τ−t))] dt
/// ```
fn residual_at(candidate: &impl Fn(f64) -> f64, tau: f64, p: &RelaxationParams) -> f64 {
    let n_total = p.n_total();
    let (g0, tau0) = (p.g0, p.tau0);
    let free = (-tau / tau0).exp() * (p.na0 * (2.0 * g0 * tau).cos() + n_total * (g0 * tau).sin().powi(2));
    let scale = if g0 > 0.0 { tau0.min(1.0 / g0) } else { tau0 };
    let panels = ((tau / scale).ceil() as usize).clamp(1, 4096);
    let memory = quadrature::integrate(
        |t| {
            let lag = tau - t;
            (-lag / tau0).exp()
                * (candidate(t) * (2.0 * g0 * lag).cos() + n_total * (g0 * lag).sin().powi(2))
        },
        0.0,
        tau,
        RESIDUAL_QUAD_TOL * tau0,
        panels,
    ) / tau0;
    candidate(tau) - free - memory
}

/// Largest absolute residual of the occupation renewal equation for a
/// candidate solution given as a function, over `times`.
pub fn residual_check_fn(
    candidate: impl Fn(f64) -> f64,
    times: &[f64],
    params: &RelaxationParams,
) -> f64 {
    times
        .iter()
        .map(|&tau| residual_at(&candidate, tau, params).abs())
        .fold(0.0, f64::max)
}

/// Largest absolute residual for a candidate given as a sampled series,
/// interpolated with local cubics between its points.
pub fn residual_check(series: &TimeSeries, params: &RelaxationParams) -> Result<f64> {
    let times = &series.times;
    if times.len() < 4 {
        return Err(Error::invalid("series", "need at least 4 points"));
    }
    if times[0] != 0.0 {
        return Err(Error::invalid("series", "must start at t = 0"));
    }
    let interp = |t: f64| cubic_interpolate(times, &series.mean, t);
    Ok(residual_check_fn(interp, times, params))
}

/// Four-point Lagrange interpolation on a sorted grid.
fn cubic_interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let start = i.saturating_sub(1).min(n - 4);
    let mut value = 0.0;
    for a in start..start + 4 {
        let mut basis = 1.0;
        for b in start..start + 4 {
            if a != b {
                basis *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        value += basis * ys[a];
    }
    value
}
