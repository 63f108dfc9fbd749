//! Medium-assisted Green tensors and the resonance-energy-transfer and decay
//! kernels built from them.
//!
//! * [`media`]: permittivity models and wavenumbers.
//! * [`specfun`]: Bessel, spherical Bessel/Hankel and Legendre functions.
//! * [`quadrature`]: adaptive Gauss–Kronrod integration.
//! * [`green`]: bulk, planar multilayer and sphere Green tensors.
//! * [`rates`]: transfer/decay kernels, line spectra and overlap rates.

pub mod error;
pub mod green;
pub mod media;
pub mod quadrature;
pub mod rates;
pub mod specfun;
pub mod units;

pub use error::{Error, Result};
pub use units::Frequency;
