//! Physical constants and the frequency/wavenumber pairing used throughout
//! the crate.
//!
//! Green tensors are computed in whatever length unit the caller uses for
//! positions; the only requirement is that [`Frequency::k0`] is expressed in
//! the inverse of that unit. Two conventions are provided:
//!
//! * reduced units, where frequencies are multiples of a reference `ω_ref`
//!   and lengths are multiples of `λ_ref = 2πc/ω_ref`, so `k0 = 2π·ω̃`;
//! * SI units, where `ω` is in rad/s and `k0 = ω/c` in 1/m.

use std::f64::consts::TAU;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_8128e-12;
/// One debye in C·m.
pub const DEBYE: f64 = 3.335_640_952e-30;

/// A frequency together with its vacuum wavenumber.
///
/// `omega` is in the unit the permittivity models were parameterized with;
/// `k0` is in inverse length units matching the geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    pub omega: f64,
    pub k0: f64,
}

impl Frequency {
    /// Reduced units: `omega` in units of `ω_ref`, lengths in `λ_ref`.
    pub fn reduced(omega: f64) -> Self {
        Self {
            omega,
            k0: TAU * omega,
        }
    }

    /// SI units: `omega` in rad/s, lengths in metres.
    pub fn si(omega: f64) -> Self {
        Self {
            omega,
            k0: omega / SPEED_OF_LIGHT,
        }
    }
}

/// Conversion between reduced and SI units for a given reference frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedUnits {
    /// Reference angular frequency (rad/s).
    pub omega_ref: f64,
}

impl ReducedUnits {
    pub fn from_wavelength(lambda_ref_m: f64) -> Self {
        Self {
            omega_ref: TAU * SPEED_OF_LIGHT / lambda_ref_m,
        }
    }

    /// Reference length `λ_ref = 2πc/ω_ref` in metres.
    pub fn lambda_ref(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / self.omega_ref
    }

    pub fn omega_si(&self, omega_reduced: f64) -> f64 {
        omega_reduced * self.omega_ref
    }

    pub fn length_si(&self, length_reduced: f64) -> f64 {
        length_reduced * self.lambda_ref()
    }

    /// Converts a Green-tensor value (inverse length) from reduced to SI units.
    pub fn green_si(&self, green_reduced: f64) -> f64 {
        green_reduced / self.lambda_ref()
    }
}
