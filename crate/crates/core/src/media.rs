//! Material dispersion models and the wavenumbers derived from them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::Frequency;

/// Frequency-dependent relative permittivity of a non-magnetic medium.
///
/// Frequencies are in whatever unit the model was parameterized with
/// (reduced units in the presets, rad/s in SI work).
#[derive(Debug, Clone, PartialEq)]
pub enum PermittivityModel {
    Constant(Complex64),
    /// Single-resonance model `1 + ω_P²/(ω_T² − ω² − iωγ)`. `ω_T = 0` is the
    /// Drude (metal) case.
    DrudeLorentz {
        omega_p: f64,
        omega_t: f64,
        gamma: f64,
    },
    Tabulated(PermittivityTable),
}

/// Sorted samples `(ω, ε)` interpolated linearly in `ω`, separately for the
/// real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityTable {
    omega: Vec<f64>,
    eps: Vec<Complex64>,
}

impl PermittivityTable {
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn eps(&self) -> &[Complex64] {
        &self.eps
    }

    fn interpolate(&self, omega: f64) -> Result<Complex64> {
        let (min, max) = (self.omega[0], self.omega[self.omega.len() - 1]);
        if !(omega >= min && omega <= max) {
            return Err(Error::OutOfRange { omega, min, max });
        }
        let upper = self.omega.partition_point(|&w| w < omega);
        if upper == 0 {
            return Ok(self.eps[0]);
        }
        let (w0, w1) = (self.omega[upper - 1], self.omega[upper]);
        let t = (omega - w0) / (w1 - w0);
        let (e0, e1) = (self.eps[upper - 1], self.eps[upper]);
        Ok(Complex64::new(
            e0.re + t * (e1.re - e0.re),
            e0.im + t * (e1.im - e0.im),
        ))
    }
}

impl PermittivityModel {
    pub const VACUUM: PermittivityModel = PermittivityModel::Constant(Complex64::new(1.0, 0.0));

    /// A frequency-independent permittivity. Gain media (`Im ε < 0`) are rejected.
    pub fn constant(eps: Complex64) -> Result<Self> {
        if !eps.re.is_finite() || !eps.im.is_finite() {
            return Err(Error::InvalidModel(format!("non-finite permittivity {eps}")));
        }
        if eps.im < 0.0 {
            return Err(Error::InvalidModel(format!(
                "Im ε = {} < 0 describes a gain medium",
                eps.im
            )));
        }
        Ok(Self::Constant(eps))
    }

    /// A Drude–Lorentz medium. The linewidth must be strictly positive so that
    /// every pole of the layered and spherical response stays off the real axis.
    pub fn drude_lorentz(omega_p: f64, omega_t: f64, gamma: f64) -> Result<Self> {
        if !(omega_p >= 0.0 && omega_p.is_finite()) {
            return Err(Error::InvalidModel(format!("ω_P = {omega_p} must be ≥ 0")));
        }
        if !(omega_t >= 0.0 && omega_t.is_finite()) {
            return Err(Error::InvalidModel(format!("ω_T = {omega_t} must be ≥ 0")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "γ = {gamma}: the linewidth must be positive (lossless resonances are not supported)"
            )));
        }
        Ok(Self::DrudeLorentz {
            omega_p,
            omega_t,
            gamma,
        })
    }

    pub fn tabulated(samples: Vec<(f64, Complex64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidModel(
                "a permittivity table needs at least two samples".into(),
            ));
        }
        for pair in samples.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::InvalidModel(format!(
                    "table frequencies must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if let Some((w, e)) = samples.iter().find(|(_, e)| e.im < 0.0) {
            return Err(Error::InvalidModel(format!(
                "Im ε = {} < 0 at ω = {w}",
                e.im
            )));
        }
        let (omega, eps) = samples.into_iter().unzip();
        Ok(Self::Tabulated(PermittivityTable { omega, eps }))
    }

    /// Complex relative permittivity at `omega` (> 0).
    pub fn evaluate(&self, omega: f64) -> Result<Complex64> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
        }
        match self {
            Self::Constant(eps) => Ok(*eps),
            Self::DrudeLorentz {
                omega_p,
                omega_t,
                gamma,
            } => {
                let denom = Complex64::new(omega_t * omega_t - omega * omega, -omega * gamma);
                Ok(1.0 + omega_p * omega_p / denom)
            }
            Self::Tabulated(table) => table.interpolate(omega),
        }
    }

    /// Wavenumber `√ε·ω/c` in the medium.
    pub fn wavenumber(&self, freq: Frequency) -> Result<Complex64> {
        Ok(wavenumber(self.evaluate(freq.omega)?, freq.k0))
    }

    /// Longitudinal frequency `√(ω_T² + ω_P²)` bounding the band gap of a
    /// Drude–Lorentz medium.
    pub fn longitudinal_frequency(&self) -> Option<f64> {
        match self {
            Self::DrudeLorentz {
                omega_p, omega_t, ..
            } => Some(omega_t.hypot(*omega_p)),
            _ => None,
        }
    }
}

/// `√ε·k0` on the branch with `Im k ≥ 0`.
pub fn wavenumber(eps: Complex64, k0: f64) -> Complex64 {
    upper_sqrt(eps) * k0
}

/// `β = √(k² − k_par²)` on the branch with `Im β ≥ 0`.
pub fn axial_wavenumber(k: Complex64, k_par: f64) -> Complex64 {
    upper_sqrt(k * k - k_par * k_par)
}

/// Square root with `Im ≥ 0`, and `Re ≥ 0` on the real axis.
///
/// The sign of a zero imaginary part is ignored, so `-x + 0i` and `-x - 0i`
/// both map to `+i√x`.
pub(crate) fn upper_sqrt(z: Complex64) -> Complex64 {
    let z = Complex64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im });
    let s = z.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}
