//! Core numerics for saddle-node unfoldings of complex vector fields.
//!
//! Everything here is `no_std` + `alloc`: the polynomial layer for
//! `P_eps(x) = x^{k+1} + sum eps_j x^j`, truncated bivariate series and the
//! prepared-form vector fields built from them, formal normalization,
//! closed-form periods for `k = 1`, and the one-variable germ / necklace
//! algebra. IO, quadrature oracles and the CLI live in the companion
//! `unfolding-lab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cpoly;
pub mod dynamics;
pub mod germ;
pub mod necklace;
pub mod normalform;
pub mod period;
pub mod series;

pub use num_complex::Complex64;

/// Default tolerance used to decide discriminant membership, scaled by the
/// parameter norm: `tol_disc = 1e-8 * max(1, eps_norm)`.
pub fn tol_disc(eps_norm: f64) -> f64 {
    1e-8 * if eps_norm > 1.0 { eps_norm } else { 1.0 }
}

/// Errors shared across the core modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input (wrong lengths, out-of-range parameters).
    Argument(&'static str),
    /// An iteration failed to converge; carries the residual that was left.
    Numeric { what: &'static str, residual: f64 },
    /// The parameter lies on (or too close to) the discriminant, or a
    /// resonance makes the requested object undefined.
    Degenerate(&'static str),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::Argument(m) => write!(f, "argument error: {m}"),
            Error::Numeric { what, residual } => {
                write!(f, "numeric error: {what} (residual {residual:.3e})")
            }
            Error::Degenerate(m) => write!(f, "degenerate parameter: {m}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
