//! Closed-form averaged occupation and regime classification.
//!
//! With `a = 1/(2τ0)` and `Ω² = (2g0)² − a²` the averaged occupation of
//! mode `a` is
//!
//! ```text
//! n̄_a(t) = N/2 + (na0 − N/2) · E(t),
//! E(t)   = e^{−a t} [cos(Ω t) + a sin(Ω t)/Ω]
//! ```
//!
//! For `Ω² < 0` the trigonometric functions continue to `cosh`/`sinh` of
//! `|Ω| t`; at `Ω = 0` the bracket becomes `1 + a t`. Regimes are named by
//! g0·τ0: above 1/4 the transfer oscillates (WCR), below it is overdamped
//! (SCR) and freezes as g0·τ0 → 0.

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::params::{check_nonnegative, check_positive};
use crate::{Error, RelaxationParams, Result};

/// Value of g0·τ0 at which the oscillation disappears.
pub const CRITICAL_G0TAU0: f64 = 0.25;

/// Half-width of the band around [`CRITICAL_G0TAU0`] classified as critical.
pub const CRITICAL_BAND: f64 = 1e-12;

/// Below this `|Ω t|` the brackets are evaluated from their Taylor series.
const SERIES_THRESHOLD: f64 = 1e-3;

/// Beyond this `a t` the hyperbolic bracket is always split into two decaying
/// exponentials instead of `e^{−at} cosh(|Ω| t)`.
const SPLIT_THRESHOLD: f64 = 700.0;

/// The split form is also used once `|Ω| > SPLIT_OMEGA_RATIO · a`, where
/// `e^{−at} cosh(|Ω|t)` would lose digits to the large cancelling exponents.
const SPLIT_OMEGA_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeKind {
    /// g0·τ0 > 1/4: damped oscillation, Ω real.
    Wcr,
    /// g0·τ0 = 1/4: Ω = 0.
    Critical,
    /// g0·τ0 < 1/4: overdamped, Ω imaginary.
    Scr,
}

impl RegimeKind {
    pub fn label(&self) -> &'static str {
        match self {
            RegimeKind::Wcr => "WCR",
            RegimeKind::Critical => "Critical",
            RegimeKind::Scr => "SCR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    /// |Ω|; zero when critical.
    pub omega: f64,
    /// Signed Ω² = (2g0)² − 1/(2τ0)²; forced to zero when critical.
    pub omega_sq: f64,
    pub g0tau0: f64,
}

impl Regime {
    /// +|Ω| in the WCR, −|Ω| in the SCR, 0 at the critical point.
    pub fn signed_omega(&self) -> f64 {
        match self.kind {
            RegimeKind::Wcr => self.omega,
            RegimeKind::Critical => 0.0,
            RegimeKind::Scr => -self.omega,
        }
    }
}

/// Ω and the regime for positive `g0`, `tau0`.
pub fn omega(g0: f64, tau0: f64) -> Result<Regime> {
    check_positive("g0", g0)?;
    check_positive("tau0", tau0)?;
    Ok(regime_unchecked(g0, tau0))
}

/// Same as [`omega`]; named for call sites that only need the label.
pub fn classify_regime(g0: f64, tau0: f64) -> Result<Regime> {
    omega(g0, tau0)
}

fn regime_unchecked(g0: f64, tau0: f64) -> Regime {
    let g0tau0 = g0 * tau0;
    let a = 0.5 / tau0;
    // Factored to avoid cancellation near the critical point.
    let radicand = (2.0 * g0 - a) * (2.0 * g0 + a);
    if (g0tau0 - CRITICAL_G0TAU0).abs() <= CRITICAL_BAND {
        Regime {
            kind: RegimeKind::Critical,
            omega: 0.0,
            omega_sq: 0.0,
            g0tau0,
        }
    } else {
        Regime {
            kind: if g0tau0 > CRITICAL_G0TAU0 {
                RegimeKind::Wcr
            } else {
                RegimeKind::Scr
            },
            omega: radicand.abs().sqrt(),
            omega_sq: radicand,
            g0tau0,
        }
    }
}

/// `e^{−a t} [C(t) + a S(t)]` with `C = cos(Ω t)` and `S = sin(Ω t)/Ω`
/// (or their hyperbolic / critical counterparts).
fn envelope(t: f64, a: f64, g0: f64, regime: &Regime) -> f64 {
    let x = regime.omega_sq * t * t;
    if x.abs() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        // C = Σ (−x)^k/(2k)!,  S/t = Σ (−x)^k/(2k+1)!
        let c = 1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0 + x * x * x * x / 40320.0;
        let s = 1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0 + x * x * x * x / 362_880.0;
        return (-a * t).exp() * (c + a * t * s);
    }
    let w = regime.omega;
    if regime.omega_sq > 0.0 {
        let (sin, cos) = (w * t).sin_cos();
        (-a * t).exp() * (cos + a * sin / w)
    } else if a * t <= SPLIT_THRESHOLD && w <= SPLIT_OMEGA_RATIO * a {
        (-a * t).exp() * ((w * t).cosh() + a * (w * t).sinh() / w)
    } else {
        // cosh + (a/w) sinh = ½[(1 + a/w)e^{wt} + (1 − a/w)e^{−wt}]
        let slow = slow_rate(a, w, g0);
        0.5 * ((1.0 + a / w) * (-slow * t).exp() + (1.0 - a / w) * (-(a + w) * t).exp())
    }
}

/// a − |Ω| in the overdamped regime, formed as (a² − |Ω|²)/(a + |Ω|) =
/// 4g0²/(a + |Ω|) to avoid cancellation when |Ω| ≈ a.
fn slow_rate(a: f64, w: f64, g0: f64) -> f64 {
    4.0 * g0 * g0 / (a + w)
}

/// Averaged occupation of mode `a` at time `t >= 0`, every regime.
pub fn mean_na(t: f64, params: &RelaxationParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    let n = params.n_total();
    if params.g0 == 0.0 {
        return Ok(params.na0);
    }
    let a = 0.5 / params.tau0;
    let regime = regime_unchecked(params.g0, params.tau0);
    Ok(0.5 * n + (params.na0 - 0.5 * n) * envelope(t, a, params.g0, &regime))
}

/// Occupation of mode `a` for `|0⟩_a |N_b⟩_b` in the oscillatory regime.
pub fn wcr_na(t: f64, n_b: f64, g0: f64, tau0: f64) -> Result<f64> {
    let regime = omega(g0, tau0)?;
    if regime.kind != RegimeKind::Wcr {
        return Err(Error::RegimeMismatch {
            expected: "WCR",
            g0tau0: regime.g0tau0,
        });
    }
    check_time(t)?;
    check_nonnegative("n_b", n_b)?;
    let w = regime.omega;
    let (sin, cos) = (w * t).sin_cos();
    Ok(0.5 * n_b * (1.0 - (-t / (2.0 * tau0)).exp() * (cos + sin / (2.0 * tau0 * w))))
}

/// Occupation of mode `a` for `|0⟩_a |N_b⟩_b` in the overdamped regime.
pub fn scr_na(t: f64, n_b: f64, g0: f64, tau0: f64) -> Result<f64> {
    let regime = omega(g0, tau0)?;
    if regime.kind != RegimeKind::Scr {
        return Err(Error::RegimeMismatch {
            expected: "SCR",
            g0tau0: regime.g0tau0,
        });
    }
    check_time(t)?;
    check_nonnegative("n_b", n_b)?;
    let a = 0.5 / tau0;
    let w = regime.omega;
    // e^{−at}[cosh(wt) + sinh(wt)/(2τ0 w)] written as two decaying
    // exponentials so that large a·t cannot overflow.
    let fast = (-(a + w) * t).exp();
    let slow = (-slow_rate(a, w, g0) * t).exp();
    let bracket = 0.5 * (slow + fast) + a * 0.5 * (slow - fast) / w;
    Ok(0.5 * n_b * (1.0 - bracket))
}

/// Photon/exciton reservoir damping rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingParams {
    pub gamma_p: f64,
    pub gamma_ex: f64,
}

impl DampingParams {
    pub fn new(gamma_p: f64, gamma_ex: f64) -> Result<Self> {
        check_nonnegative("gamma_p", gamma_p)?;
        check_nonnegative("gamma_ex", gamma_ex)?;
        Ok(Self { gamma_p, gamma_ex })
    }

    /// Total damping γ = γ_p + γ_ex.
    pub fn gamma(&self) -> f64 {
        self.gamma_p + self.gamma_ex
    }

    /// Equivalent mean jump interval τ0 = 1/γ.
    pub fn tau0(&self) -> f64 {
        1.0 / self.gamma()
    }
}

/// Exciton–polariton limit: `(N_b/2)[1 − e^{−γt/2} cos(2 g0 t)]`.
pub fn polariton_na(t: f64, n_b: f64, g0: f64, damping: &DampingParams) -> Result<f64> {
    check_time(t)?;
    check_nonnegative("n_b", n_b)?;
    check_nonnegative("g0", g0)?;
    let gamma = damping.gamma();
    Ok(0.5 * n_b * (1.0 - (-0.5 * gamma * t).exp() * (2.0 * g0 * t).cos()))
}

/// Slowest relaxation rate 1/(2τ0) − |Ω| in the overdamped regime (and at
/// the critical point, where it equals 1/(2τ0)).
pub fn effective_rate(g0: f64, tau0: f64) -> Result<f64> {
    let regime = omega(g0, tau0)?;
    if regime.kind == RegimeKind::Wcr {
        return Err(Error::RegimeMismatch {
            expected: "SCR",
            g0tau0: regime.g0tau0,
        });
    }
    Ok(slow_rate(0.5 / tau0, regime.omega, g0))
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("t", format!("must be >= 0, got {t}")))
    }
}
