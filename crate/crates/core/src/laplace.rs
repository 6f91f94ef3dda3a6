//! Laplace-domain form of the relaxation problem and a numerical inverse.
//!
//! The unknown is `f(t) = n̄_a(t) e^{t/τ0}`. Its transform is assembled from
//! the kernels `g(t) = cos(2 g0 t)`, `h(t) = e^{t/τ0}`, `j(t) = sin²(g0 t)`:
//!
//! ```text
//! f̂ = [na0 ĝ + N ĵ + (N/τ0) ĥ ĵ] / (1 − ĝ/τ0)
//!   = na0 s / D(s) + N (2g0)² / (2 (s − 1/τ0) D(s)),   D = (s − 1/(2τ0))² + Ω²
//! ```
//!
//! [`invert_numeric`] recovers `f(t)` from any transform that is analytic to
//! the right of its singularities. The default scheme is the fixed-Talbot
//! contour; a Gaver–Stehfest real-axis sum is available for smooth,
//! non-oscillatory targets.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, RelaxationParams, Result};

/// Distance from a pole below which [`f_hat`] refuses to evaluate.
pub const POLE_TOL: f64 = 1e-12;

/// Relative difference between consecutive orders above which an inversion
/// is flagged as unconverged.
pub const CONVERGENCE_TOL: f64 = 1e-8;

/// `s² − s/τ0 + 4g0²`, i.e. `(s − 1/(2τ0))² + Ω²` without forming Ω.
fn denominator(s: Complex64, p: &RelaxationParams) -> Complex64 {
    s * s - s / p.tau0 + 4.0 * p.g0 * p.g0
}

/// Transform of `n̄_a(t) e^{t/τ0}`.
pub fn f_hat(s: Complex64, params: &RelaxationParams) -> Result<Complex64> {
    let d = denominator(s, params);
    let shifted = s - 1.0 / params.tau0;
    if d.norm() < POLE_TOL || shifted.norm() < POLE_TOL {
        return Err(Error::Pole { re: s.re, im: s.im });
    }
    let g0 = params.g0;
    Ok(params.na0 * s / d + params.n_total() * (2.0 * g0).powi(2) / (2.0 * shifted * d))
}

/// Transforms of the three kernels at `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTransforms {
    /// L[cos(2 g0 t)] = s / (s² + 4g0²)
    pub g: Complex64,
    /// L[e^{t/τ0}] = 1 / (s − 1/τ0)
    pub h: Complex64,
    /// L[sin²(g0 t)] = 2g0² / (s (s² + 4g0²))
    pub j: Complex64,
}

/// Kernel transforms, continued analytically to every `s` that is not one
/// of their poles `{0, ±2i g0, 1/τ0}`.
pub fn kernel_transforms(s: Complex64, g0: f64, tau0: f64) -> Result<KernelTransforms> {
    let q = s * s + 4.0 * g0 * g0;
    if s.norm() < POLE_TOL || q.norm() < POLE_TOL || (s - 1.0 / tau0).norm() < POLE_TOL {
        return Err(Error::Pole { re: s.re, im: s.im });
    }
    Ok(KernelTransforms {
        g: s / q,
        h: 1.0 / (s - 1.0 / tau0),
        j: 2.0 * g0 * g0 / (s * q),
    })
}

/// `f̂` assembled from the kernel transforms, before simplification.
pub fn f_hat_from_kernels(s: Complex64, params: &RelaxationParams) -> Result<Complex64> {
    let k = kernel_transforms(s, params.g0, params.tau0)?;
    let n = params.n_total();
    let tau0 = params.tau0;
    Ok((params.na0 * k.g + n * k.j + (n / tau0) * k.h * k.j) / (1.0 - k.g / tau0))
}

/// Simple poles of `f̂` with their residues.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleExpansion {
    pub poles: Vec<Complex64>,
    pub residues: Vec<Complex64>,
}

impl PoleExpansion {
    /// `Σ r_k / (s − p_k)`.
    pub fn transform(&self, s: Complex64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, r)| r / (s - p))
            .sum()
    }

    /// `Σ r_k e^{p_k t}`, the exact inverse.
    pub fn inverse(&self, t: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, r)| r * (p * t).exp())
            .sum::<Complex64>()
            .re
    }
}

/// Poles `{1/τ0, 1/(2τ0) ± iΩ}` and residues of `f̂`. Fails at the critical
/// point, where the complex pair merges into a double pole.
pub fn pole_expansion(params: &RelaxationParams) -> Result<PoleExpansion> {
    let a = 0.5 / params.tau0;
    let g0 = params.g0;
    let omega_sq = (2.0 * g0 - a) * (2.0 * g0 + a);
    if omega_sq.abs() < POLE_TOL {
        return Err(Error::invalid("tau0", "double pole at the critical point"));
    }
    let omega = Complex64::new(omega_sq, 0.0).sqrt();
    let i = Complex64::i();
    let q = Complex64::new(2.0 * a, 0.0);
    let p_plus = a + i * omega;
    let p_minus = a - i * omega;
    let n = params.n_total();
    let k = n * 2.0 * g0 * g0;
    // f̂ = na0 s / ((s−p+)(s−p−)) + k / ((s−q)(s−p+)(s−p−))
    let res_q = k / ((q - p_plus) * (q - p_minus));
    let res_plus = params.na0 * p_plus / (p_plus - p_minus) + k / ((p_plus - q) * (p_plus - p_minus));
    let res_minus =
        params.na0 * p_minus / (p_minus - p_plus) + k / ((p_minus - q) * (p_minus - p_plus));
    Ok(PoleExpansion {
        poles: alloc::vec![q, p_plus, p_minus],
        residues: alloc::vec![res_q, res_plus, res_minus],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMethod {
    /// Fixed-Talbot contour (Abate–Valkó), `order` nodes.
    Talbot,
    /// Gaver–Stehfest real-axis sum with `order` terms. Loses roughly half a
    /// digit per term to cancellation in double precision and resolves
    /// oscillatory targets poorly.
    Stehfest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub method: InversionMethod,
    /// Even, at least 8.
    pub order: usize,
    /// Real part of the rightmost singularity. The transform is inverted as
    /// `e^{σt} L⁻¹[F(s + σ)]` so the contour sits to the right of it.
    pub abscissa: f64,
    pub tolerance: f64,
}

impl InversionOptions {
    pub fn new(order: usize) -> Self {
        Self {
            method: InversionMethod::Talbot,
            order,
            abscissa: 0.0,
            tolerance: CONVERGENCE_TOL,
        }
    }

    pub fn abscissa(mut self, sigma: f64) -> Self {
        self.abscissa = sigma;
        self
    }

    pub fn method(mut self, method: InversionMethod) -> Self {
        self.method = method;
        self
    }
}

/// Result of a numerical inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub value: f64,
    /// Value at `order − 2`.
    pub previous: f64,
    /// `|value − previous| / max(1, |value|)`.
    pub difference: f64,
    /// `difference <= tolerance`.
    pub converged: bool,
}

/// Inverts `transform` at `t > 0` with `order` fixed-Talbot nodes, assuming
/// all singularities have non-positive real part.
pub fn invert_numeric<F>(transform: F, t: f64, order: usize) -> Result<Inversion>
where
    F: Fn(Complex64) -> Complex64,
{
    invert_with(transform, t, &InversionOptions::new(order))
}

/// Numerical inverse with explicit options. The result is flagged (not an
/// error) when consecutive even orders disagree beyond the tolerance.
pub fn invert_with<F>(transform: F, t: f64, opts: &InversionOptions) -> Result<Inversion>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be finite and > 0, got {t}")));
    }
    if opts.order < 8 || !opts.order.is_multiple_of(2) {
        return Err(Error::invalid(
            "order",
            format!("must be even and >= 8, got {}", opts.order),
        ));
    }
    let value = invert_once(&transform, t, opts.order, opts);
    let previous = invert_once(&transform, t, opts.order - 2, opts);
    let difference = (value - previous).abs() / value.abs().max(1.0);
    Ok(Inversion {
        value,
        previous,
        difference,
        converged: difference <= opts.tolerance,
    })
}

/// Values at each order in `orders`, for locating the accuracy plateau.
pub fn order_profile<F>(transform: F, t: f64, orders: &[usize], opts: &InversionOptions) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Complex64,
{
    orders
        .iter()
        .map(|&order| {
            let o = InversionOptions { order, ..*opts };
            invert_with(&transform, t, &o).map(|inv| inv.value)
        })
        .collect()
}

fn invert_once<F>(transform: &F, t: f64, order: usize, opts: &InversionOptions) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    let sigma = opts.abscissa;
    let shifted = |s: Complex64| transform(s + sigma);
    let raw = match opts.method {
        InversionMethod::Talbot => talbot(&shifted, t, order),
        InversionMethod::Stehfest => stehfest(&shifted, t, order),
    };
    (sigma * t).exp() * raw
}

fn talbot<F: Fn(Complex64) -> Complex64>(transform: &F, t: f64, order: usize) -> f64 {
    let m = order as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut sum = 0.5 * (transform(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..order {
        let theta = k as f64 * PI / m;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        sum += ((s * t).exp() * transform(s) * Complex64::new(1.0, sigma)).re;
    }
    r / m * sum
}

/// Gaver–Stehfest weights V_k, k = 1..=n.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |acc, i| acc * i as f64);
    (1..=n)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let sum: f64 = (lo..=hi)
                .map(|j| {
                    (j as f64).powi(half as i32) * fact(2 * j)
                        / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k))
                })
                .sum();
            if (k + half).is_multiple_of(2) {
                sum
            } else {
                -sum
            }
        })
        .collect()
}

fn stehfest<F: Fn(Complex64) -> Complex64>(transform: &F, t: f64, order: usize) -> f64 {
    let step = LN_2 / t;
    stehfest_weights(order)
        .iter()
        .enumerate()
        .map(|(i, v)| v * transform(Complex64::new((i + 1) as f64 * step, 0.0)).re)
        .sum::<f64>()
        * step
}

/// `n̄_a(t) = e^{−t/τ0} f(t)`.
pub fn unwrap_na(inverted_f: f64, t: f64, tau0: f64) -> f64 {
    inverted_f * (-t / tau0).exp()
}

/// Numerical inverse of [`f_hat`] unwrapped to the occupation of mode `a`.
pub fn mean_na_numeric(t: f64, params: &RelaxationParams, order: usize) -> Result<Inversion> {
    // f_hat is only ever evaluated on the contour, away from its poles.
    let opts = InversionOptions::new(order).abscissa(1.0 / params.tau0);
    let inv = invert_with(
        |s| f_hat(s, params).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        t,
        &opts,
    )?;
    Ok(Inversion {
        value: unwrap_na(inv.value, t, params.tau0),
        previous: unwrap_na(inv.previous, t, params.tau0),
        ..inv
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn textbook_pairs() {
        let v = invert_numeric(|s| 1.0 / (s + 1.0), 1.0, 16).unwrap();
        assert!((v.value - (-1.0f64).exp()).abs() < 1e-8);
        assert!(v.converged);
        let v = invert_numeric(|s| 1.0 / (s * s), 3.0, 16).unwrap();
        assert!((v.value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn stehfest_smooth_pair() {
        let opts = InversionOptions::new(14).method(InversionMethod::Stehfest);
        let v = invert_with(|s| 1.0 / (s + 1.0), 1.0, &opts).unwrap();
        assert!((v.value - (-1.0f64).exp()).abs() < 1e-5);
        let w = stehfest_weights(8);
        // A constant transform inverts to zero for t > 0, so the weights sum to zero.
        assert!(w.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn order_contract() {
        assert!(invert_numeric(|s| 1.0 / s, 1.0, 7).is_err());
        assert!(invert_numeric(|s| 1.0 / s, 1.0, 6).is_err());
        assert!(invert_numeric(|s| 1.0 / s, 0.0, 16).is_err());
    }

    #[test]
    fn kernel_values_at_unit_s() {
        let k = kernel_transforms(c(1.5), 1.0, 1.0).unwrap();
        assert!((k.g - c(1.5 / 6.25)).norm() < 1e-15);
        // ĝ(1) = 1/5 and ĵ(1) = 2/5 for g0 = 1.
        let k = kernel_transforms(c(1.0), 1.0, 2.0).unwrap();
        assert!((k.g - c(0.2)).norm() < 1e-15);
        assert!((k.j - c(0.4)).norm() < 1e-15);
        assert!(matches!(kernel_transforms(c(1.0), 1.0, 1.0), Err(Error::Pole { .. })));
        assert!(kernel_transforms(Complex64::new(0.0, 2.0), 1.0, 1.0).is_err());
        assert!(kernel_transforms(c(0.5), 1.0, 1.0).is_ok());
    }

    #[test]
    fn pole_is_refused() {
        let p = RelaxationParams::new(1.0, 1.0, 0.0, 2.0).unwrap();
        assert!(matches!(f_hat(c(1.0), &p), Err(Error::Pole { .. })));
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(unwrap_na(3.5, 0.0, 1.0), 3.5);
        assert_eq!(unwrap_na(3.5, 2.0, f64::INFINITY), 3.5);
    }

    #[test]
    fn simple_pole_residue_is_half_n() {
        let p = RelaxationParams::new(1.0, 1.0, 0.0, 2.0).unwrap();
        let e = pole_expansion(&p).unwrap();
        assert!((e.residues[0] - c(1.0)).norm() < 1e-14);
    }
}
