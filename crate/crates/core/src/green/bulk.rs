//! Green tensor of an unbounded homogeneous medium.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use super::{DipolePair, GreenResult, Tensor};
use crate::error::{Error, Result};
use crate::media::wavenumber;
use crate::units::Frequency;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `G(r_B, r_A)` in a homogeneous medium of permittivity `eps`:
///
/// `G = (q/4π) e^{iqR} [ (I − R̂R̂)/(qR) − (I − 3R̂R̂)(1/(qR)³ − i/(qR)²) ]`
/// with `q = √ε k0`.
pub fn bulk_tensor(r_b: &Vector3<f64>, r_a: &Vector3<f64>, eps: Complex64, freq: Frequency) -> Result<Tensor> {
    let sep = r_b - r_a;
    let dist = sep.norm();
    if dist == 0.0 {
        return Err(Error::Domain(
            "bulk Green tensor is singular at coincident points".into(),
        ));
    }
    let q = wavenumber(eps, freq.k0);
    let x = q * dist;
    let near = 1.0 / (x * x * x) - I / (x * x);
    let far = 1.0 / x;
    let pre = q / (4.0 * PI) * (I * x).exp();
    let diag = pre * (far - near);
    let dyad = pre * (3.0 * near - far);
    let rhat = sep / dist;
    Ok(Tensor::from_fn(|i, j| {
        let delta = if i == j { diag } else { Complex64::new(0.0, 0.0) };
        delta + dyad * (rhat[i] * rhat[j])
    }))
}

/// Bulk Green tensor for a dipole pair.
pub fn bulk_coupling(pair: &DipolePair, eps: Complex64, freq: Frequency) -> Result<GreenResult> {
    bulk_tensor(&pair.r_b, &pair.r_a, eps, freq).map(GreenResult::exact)
}

/// Imaginary part of the regular coincidence limit, `Im G(r, r) = Re(q)/(6π) I`.
///
/// For a lossy host only the real part of `q` survives in the finite part;
/// the remainder diverges as `R → 0` and is excluded.
pub fn bulk_coincidence_im(eps: Complex64, freq: Frequency) -> f64 {
    wavenumber(eps, freq.k0).re / (6.0 * PI)
}
