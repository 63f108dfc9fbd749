//! Green tensors of the supported geometries.
//!
//! All tensors carry units of inverse length, in the same length unit as the
//! positions and [`Frequency::k0`](crate::units::Frequency).

pub mod bulk;
pub mod layered;
pub mod sphere;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// 3×3 complex Green tensor.
pub type Tensor = Matrix3<Complex64>;

/// A Green tensor together with the numerical error estimate of its
/// evaluation (zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenResult {
    pub tensor: Tensor,
    pub error: f64,
}

impl GreenResult {
    pub fn exact(tensor: Tensor) -> Self {
        Self { tensor, error: 0.0 }
    }

    /// Projected coupling `d̂_B · G · d̂_A`.
    pub fn projected(&self, d_b: &Vector3<f64>, d_a: &Vector3<f64>) -> Complex64 {
        project(&self.tensor, d_b, d_a)
    }
}

/// `d_B · G · d_A` for real orientation vectors.
pub fn project(tensor: &Tensor, d_b: &Vector3<f64>, d_a: &Vector3<f64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc += tensor[(i, j)] * d_b[i] * d_a[j];
        }
    }
    acc
}

/// Two point dipoles: positions, unit orientations and moment magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipolePair {
    pub r_a: Vector3<f64>,
    pub r_b: Vector3<f64>,
    pub d_a: Vector3<f64>,
    pub d_b: Vector3<f64>,
    pub moment_a: f64,
    pub moment_b: f64,
}

impl DipolePair {
    /// Builds a pair with unit moments; orientations are normalized.
    pub fn new(r_a: Vector3<f64>, d_a: Vector3<f64>, r_b: Vector3<f64>, d_b: Vector3<f64>) -> Result<Self> {
        Ok(Self {
            r_a,
            r_b,
            d_a: unit(d_a)?,
            d_b: unit(d_b)?,
            moment_a: 1.0,
            moment_b: 1.0,
        })
    }

    pub fn with_moments(mut self, moment_a: f64, moment_b: f64) -> Self {
        self.moment_a = moment_a;
        self.moment_b = moment_b;
        self
    }

    pub fn separation(&self) -> Vector3<f64> {
        self.r_b - self.r_a
    }
}

/// Normalizes an orientation vector, rejecting zero or non-finite input.
pub fn unit(v: Vector3<f64>) -> Result<Vector3<f64>> {
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain("dipole orientation must be a nonzero finite vector".into()));
    }
    Ok(v / n)
}
