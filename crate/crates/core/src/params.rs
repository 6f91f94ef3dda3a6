use alloc::format;

use crate::{Error, Result};

/// Coupling, noise and initial occupations: everything the averaged
/// occupation of mode `a` depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParams {
    /// Coupling modulus g0 [1/time].
    pub g0: f64,
    /// Mean interval between phase jumps [time].
    pub tau0: f64,
    /// Initial mean occupation of mode `a`.
    pub na0: f64,
    /// Initial mean occupation of mode `b`.
    pub nb0: f64,
}

impl RelaxationParams {
    /// `g0 = 0` is accepted (no dynamics); `tau0` must be positive and may be
    /// infinite.
    pub fn new(g0: f64, tau0: f64, na0: f64, nb0: f64) -> Result<Self> {
        check_nonnegative("g0", g0)?;
        if !(tau0 > 0.0) {
            return Err(Error::invalid("tau0", format!("must be > 0, got {tau0}")));
        }
        check_nonnegative("na0", na0)?;
        check_nonnegative("nb0", nb0)?;
        Ok(Self { g0, tau0, na0, nb0 })
    }

    /// Total excitation number N = na0 + nb0.
    pub fn n_total(&self) -> f64 {
        self.na0 + self.nb0
    }

    /// Dimensionless product g0·tau0.
    pub fn g0tau0(&self) -> f64 {
        self.g0 * self.tau0
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}
