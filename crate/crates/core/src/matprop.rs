//! 2×2 complex matrices and the constant-phase interaction-picture
//! propagator
//!
//! ```text
//! U(φ, dt) = [[ cos(g0 dt),           e^{iφ} sin(g0 dt) ],
//!             [ -e^{-iφ} sin(g0 dt),  cos(g0 dt)        ]]
//! ```
//!
//! Free-mode frequencies never enter: evolution is generated by the coupling
//! term alone.

use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Maximum per-entry deviation of `U†U` from the identity (and of `|det U|`
/// from one) accepted for a [`Unitary2`].
pub const UNITARITY_TOL: f64 = 1e-12;

/// Maximum per-entry deviation from Hermiticity accepted for a density matrix.
pub const HERMITICITY_TOL: f64 = 1e-9;

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex2x2 {
    pub e11: Complex64,
    pub e12: Complex64,
    pub e21: Complex64,
    pub e22: Complex64,
}

impl Complex2x2 {
    pub const fn new(e11: Complex64, e12: Complex64, e21: Complex64, e22: Complex64) -> Self {
        Self { e11, e12, e21, e22 }
    }

    pub const fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub const fn zero() -> Self {
        Self::diag(0.0, 0.0)
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self::new(Complex64::new(a, 0.0), z, z, Complex64::new(b, 0.0))
    }

    /// Hermitian matrix with populations `p1`, `p2` and coherence `rho12`
    /// (`rho21 = conj(rho12)`).
    pub fn hermitian(p1: f64, p2: f64, rho12: Complex64) -> Self {
        Self::new(
            Complex64::new(p1, 0.0),
            rho12,
            rho12.conj(),
            Complex64::new(p2, 0.0),
        )
    }

    pub fn adjoint(&self) -> Self {
        Self::new(
            self.e11.conj(),
            self.e21.conj(),
            self.e12.conj(),
            self.e22.conj(),
        )
    }

    pub fn trace(&self) -> Complex64 {
        self.e11 + self.e22
    }

    pub fn det(&self) -> Complex64 {
        self.e11 * self.e22 - self.e12 * self.e21
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.e11 * k, self.e12 * k, self.e21 * k, self.e22 * k)
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.e11, self.e12, self.e21, self.e22]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other)
            .entries()
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Largest entrywise modulus of `self† self - I`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }
}

impl Mul for Complex2x2 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.e11 * rhs.e11 + self.e12 * rhs.e21,
            self.e11 * rhs.e12 + self.e12 * rhs.e22,
            self.e21 * rhs.e11 + self.e22 * rhs.e21,
            self.e21 * rhs.e12 + self.e22 * rhs.e22,
        )
    }
}

impl Add for Complex2x2 {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.e11 + rhs.e11,
            self.e12 + rhs.e12,
            self.e21 + rhs.e21,
            self.e22 + rhs.e22,
        )
    }
}

impl Sub for Complex2x2 {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.e11 - rhs.e11,
            self.e12 - rhs.e12,
            self.e21 - rhs.e21,
            self.e22 - rhs.e22,
        )
    }
}

/// A validated 2×2 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2(Complex2x2);

impl Unitary2 {
    /// Checks `U†U = I` and `|det U| = 1` to [`UNITARITY_TOL`].
    pub fn new(matrix: Complex2x2) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::NotUnitary {
                deviation: f64::INFINITY,
            });
        }
        let deviation = matrix
            .unitarity_defect()
            .max((matrix.det().norm() - 1.0).abs());
        if deviation > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self(matrix))
    }

    pub const fn identity() -> Self {
        Self(Complex2x2::identity())
    }

    pub fn matrix(&self) -> &Complex2x2 {
        &self.0
    }

    pub fn into_matrix(self) -> Complex2x2 {
        self.0
    }
}

/// Propagator for a segment of duration `dt` at constant phase `phi`.
pub fn propagator(g0: f64, phi: f64, dt: f64) -> Result<Unitary2> {
    check_duration("g0", g0)?;
    check_duration("dt", dt)?;
    Unitary2::new(Su2::segment(g0 * dt, phi).to_matrix())
}

/// Matrix product `later · earlier`, re-validated.
pub fn compose(later: &Unitary2, earlier: &Unitary2) -> Result<Unitary2> {
    Unitary2::new(later.0 * earlier.0)
}

/// `U ρ U†`.
pub fn conjugate_density(u: &Unitary2, rho: &Complex2x2) -> Result<Complex2x2> {
    let deviation = rho.hermiticity_defect();
    if !(deviation <= HERMITICITY_TOL) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(u.0 * *rho * u.0.adjoint())
}

fn check_duration(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            alloc::format!("must be finite and >= 0, got {value}"),
        ))
    }
}


/// Cayley–Klein form `[[α, β], [-β*, α*]]` of an SU(2) element.
///
/// Every segment propagator has this form (unit determinant), so products of
/// them can be carried as two complex numbers instead of four.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2 {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl Su2 {
    pub const IDENTITY: Su2 = Su2 {
        alpha: Complex64::new(1.0, 0.0),
        beta: Complex64::new(0.0, 0.0),
    };

    /// Segment propagator for rotation angle `theta = g0·dt` and phase `phi`.
    #[inline]
    pub fn segment(theta: f64, phi: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Su2 {
            alpha: Complex64::new(c, 0.0),
            beta: Complex64::new(cp * s, sp * s),
        }
    }

    /// `later · self`.
    #[inline]
    pub fn then(self, later: Su2) -> Su2 {
        Su2 {
            alpha: later.alpha * self.alpha - later.beta * self.beta.conj(),
            beta: later.alpha * self.beta + later.beta * self.alpha.conj(),
        }
    }

    /// `|α|² + |β|² - 1`; zero for an exact SU(2) element.
    pub fn norm_defect(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr() - 1.0
    }

    pub fn to_matrix(&self) -> Complex2x2 {
        Complex2x2::new(self.alpha, self.beta, -self.beta.conj(), self.alpha.conj())
    }

    /// Unitary with the same matrix. Exact products stay in SU(2), so the
    /// defect is only rounding; it is checked in debug builds.
    pub fn to_unitary(&self) -> Unitary2 {
        debug_assert!(self.norm_defect().abs() <= UNITARITY_TOL);
        Unitary2(self.to_matrix())
    }

    /// `U ρ U†` without the Hermiticity check.
    pub fn conjugate(&self, rho: &Complex2x2) -> Complex2x2 {
        let u = self.to_matrix();
        u * *rho * u.adjoint()
    }
}
