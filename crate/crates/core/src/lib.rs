//! Two linearly coupled bosonic modes whose coupling phase follows a
//! random-telegraph process.
//!
//! The averaged occupation of mode `a` is available three independent ways:
//!
//! * [`ensemble`]: Monte Carlo over sampled jump histories, each evolved
//!   exactly with composed 2×2 propagators ([`matprop`], [`telegraph`]);
//! * [`renewal`]: a marching solver for the renewal (Volterra) equations
//!   satisfied by the phase-averaged density matrix;
//! * [`analytic`]: the closed-form solution, cross-checked by numerical
//!   inversion of its Laplace transform ([`laplace`]).
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature to use
//! the platform float routines instead of `libm`.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analytic;
pub mod ensemble;
mod error;
pub mod laplace;
pub mod matprop;
mod params;
pub mod quadrature;
pub mod renewal;
pub mod telegraph;

pub use error::{Error, Result};
pub use params::RelaxationParams;

pub use num_complex::Complex64;
