//! Scattering part of the Green tensor for two points outside a homogeneous
//! sphere, for tangential (`φφ`) and radial (`rr`) orientations with the
//! source on the polar axis.
//!
//! With `a₁ = k₁a`, `a₂ = k₂a`, `x = k₁r` and the log-derivatives
//! `D f = [z f(z)]'/(z f(z))`, the coefficients are
//!
//! `B^M_l = −(j_l(a₁)/h_l(a₁)) (a₁Dj(a₁) − a₂Dj(a₂))/(a₁Dh(a₁) − a₂Dj(a₂))`
//!
//! `B^N_l = −(j_l(a₁)/h_l(a₁)) (ε₂a₁Dj(a₁) − ε₁a₂Dj(a₂))/(ε₂a₁Dh(a₁) − ε₁a₂Dj(a₂))`
//!
//! i.e. the negated textbook Mie coefficients `−b_l` and `−a_l`, and
//!
//! `G_φφ = (ik₁/4π) Σ (2l+1)/(l(l+1)) [B^M h h τ_l + B^N h h Dh(x_A)Dh(x_B) π_l]`
//!
//! `G_rr = (ik₁/4π) Σ l(l+1)(2l+1)/(x_A x_B) B^N h h P_l(cos θ_B)`
//!
//! with `h h = h_l(x_A)h_l(x_B)`, `π_l = P_l'` and `τ_l = l(l+1)P_l − cos θ P_l'`.
//! Products of radial functions are formed from their logarithms, so orders
//! far above the size parameter (needed when the points sit close to the
//! surface) neither overflow nor underflow.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::media::{wavenumber, PermittivityModel};
use crate::specfun::{legendre_sequence, ScaledBesselJ, ScaledHankel};
use crate::units::Frequency;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Homogeneous sphere in a homogeneous host.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGeometry {
    pub radius: f64,
    pub outside: PermittivityModel,
    pub inside: PermittivityModel,
}

impl SphereGeometry {
    pub fn new(radius: f64, outside: PermittivityModel, inside: PermittivityModel) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain("sphere radius must be positive".into()));
        }
        Ok(Self { radius, outside, inside })
    }
}

/// Radial distances of the two points and the polar angle of `B`, with `A`
/// on the polar axis and both at azimuth zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePositions {
    pub r_a: f64,
    pub r_b: f64,
    pub theta_b: f64,
}

impl SpherePositions {
    pub fn validate(&self, geometry: &SphereGeometry) -> Result<()> {
        if !(self.r_a > geometry.radius && self.r_b > geometry.radius) {
            return Err(Error::Domain(format!(
                "both points must lie outside the sphere of radius {} (got r_A = {}, r_B = {})",
                geometry.radius, self.r_a, self.r_b
            )));
        }
        if !(0.0..=PI).contains(&self.theta_b) {
            return Err(Error::Domain("theta_B must lie in [0, π]".into()));
        }
        Ok(())
    }

    /// Cartesian positions of `A` and `B` (sphere centred at the origin).
    pub fn cartesian(&self) -> (Vector3<f64>, Vector3<f64>) {
        let (s, c) = self.theta_b.sin_cos();
        (Vector3::new(0.0, 0.0, self.r_a), Vector3::new(self.r_b * s, 0.0, self.r_b * c))
    }

    /// Radial unit vectors at `A` and `B`.
    pub fn radial_directions(&self) -> (Vector3<f64>, Vector3<f64>) {
        let (s, c) = self.theta_b.sin_cos();
        (Vector3::z(), Vector3::new(s, 0.0, c))
    }

    /// Azimuthal unit vector shared by both points.
    pub fn azimuthal_direction(&self) -> Vector3<f64> {
        Vector3::y()
    }
}

/// Series truncation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Required `|term(l_max)| / |partial sum|`.
    pub tail_tol: f64,
    /// Highest order that may be summed before reporting truncation.
    pub max_order: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            tail_tol: 1e-10,
            max_order: 40_000,
        }
    }
}

/// A summed series with the order it stopped at and its final tail ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: Complex64,
    pub l_max: usize,
    pub tail: f64,
}

struct Radial {
    eps_out: Complex64,
    eps_in: Complex64,
    k1: Complex64,
    a1: Complex64,
    a2: Complex64,
}

impl Radial {
    fn new(freq: Frequency, geometry: &SphereGeometry) -> Result<Self> {
        let eps_out = geometry.outside.evaluate(freq.omega)?;
        let eps_in = geometry.inside.evaluate(freq.omega)?;
        let k1 = wavenumber(eps_out, freq.k0);
        let k2 = wavenumber(eps_in, freq.k0);
        Ok(Self {
            eps_out,
            eps_in,
            k1,
            a1: k1 * geometry.radius,
            a2: k2 * geometry.radius,
        })
    }
}

/// Order-by-order ingredients of both series up to a fixed order.
struct Tables {
    j1: ScaledBesselJ,
    h1: ScaledHankel,
    j2: ScaledBesselJ,
}

impl Tables {
    fn new(radial: &Radial, l_max: usize) -> Result<Self> {
        Ok(Self {
            j1: ScaledBesselJ::new(l_max, radial.a1)?,
            h1: ScaledHankel::new(l_max, radial.a1)?,
            j2: ScaledBesselJ::new(l_max, radial.a2)?,
        })
    }

    /// `(M_l, N_l)` such that `B^M = −(j/h)(a₁) M_l`, `B^N = −(j/h)(a₁) N_l`.
    fn ratios(&self, radial: &Radial, l: usize) -> (Complex64, Complex64) {
        let (a1, a2) = (radial.a1, radial.a2);
        let (dj1, dh1, dj2) = (self.j1.log_derivative(l), self.h1.log_derivative(l), self.j2.log_derivative(l));
        let (e1, e2) = (radial.eps_out, radial.eps_in);
        let m = (a1 * dj1 - a2 * dj2) / (a1 * dh1 - a2 * dj2);
        let n = (e2 * a1 * dj1 - e1 * a2 * dj2) / (e2 * a1 * dh1 - e1 * a2 * dj2);
        (m, n)
    }

    fn ln_j_over_h(&self, l: usize) -> Complex64 {
        self.j1.ln_value(l) - self.h1.ln_value(l)
    }
}

/// Coefficients `(B^M_l, B^N_l)` for order `l ≥ 1`.
pub fn mie_coefficients(l: usize, freq: Frequency, geometry: &SphereGeometry) -> Result<(Complex64, Complex64)> {
    if l == 0 {
        return Err(Error::Domain("Mie coefficients start at l = 1".into()));
    }
    let radial = Radial::new(freq, geometry)?;
    let tables = Tables::new(&radial, l)?;
    let (m, n) = tables.ratios(&radial, l);
    let ratio = tables.ln_j_over_h(l).exp();
    let (bm, bn) = (-ratio * m, -ratio * n);
    if !(bm.is_finite() && bn.is_finite()) {
        return Err(Error::Truncation { l_max: l, tail: f64::NAN });
    }
    Ok((bm, bn))
}

#[derive(Clone, Copy)]
enum Component {
    Tangential,
    Radial,
}

fn sum_series(
    freq: Frequency,
    geometry: &SphereGeometry,
    pos: &SpherePositions,
    component: Component,
    options: SeriesOptions,
) -> Result<SeriesResult> {
    pos.validate(geometry)?;
    let radial = Radial::new(freq, geometry)?;
    let (xa, xb) = (radial.k1 * pos.r_a, radial.k1 * pos.r_b);
    let size = radial.k1.re * pos.r_a.max(pos.r_b);
    let l_start = (size + 4.0 * size.cbrt() + 10.0).ceil() as usize;
    let cos_theta = pos.theta_b.cos();
    let mut l_max = l_start.max(16).min(options.max_order);
    loop {
        let tables = Tables::new(&radial, l_max)?;
        let ha = ScaledHankel::new(l_max, xa)?;
        let hb = ScaledHankel::new(l_max, xb)?;
        let (p, dp) = legendre_sequence(l_max, cos_theta);
        let mut terms = Vec::with_capacity(l_max);
        for l in 1..=l_max {
            let (m, n) = tables.ratios(&radial, l);
            let f = (tables.ln_j_over_h(l) + ha.ln_value(l) + hb.ln_value(l)).exp();
            let lf = l as f64;
            let ll = lf * (lf + 1.0);
            let term = match component {
                Component::Tangential => {
                    let tau = ll * p[l] - cos_theta * dp[l];
                    let pi = dp[l];
                    let dd = ha.log_derivative(l) * hb.log_derivative(l);
                    -(2.0 * lf + 1.0) / ll * f * (m * tau + n * dd * pi)
                }
                Component::Radial => -ll * (2.0 * lf + 1.0) / (xa * xb) * f * n * p[l],
            };
            if !term.is_finite() {
                return Err(Error::Truncation { l_max: l, tail: f64::INFINITY });
            }
            terms.push(term);
        }
        let sum: Complex64 = terms.iter().sum();
        let scale = sum.norm();
        // Converged once the last few terms beyond the starting order are all
        // negligible relative to the sum.
        let window = 8.min(terms.len());
        let tail = terms[terms.len() - window..]
            .iter()
            .map(|t| t.norm())
            .fold(0.0, f64::max)
            / scale.max(f64::MIN_POSITIVE);
        if scale == 0.0 || tail < options.tail_tol {
            return Ok(SeriesResult {
                value: I * radial.k1 / (4.0 * PI) * sum,
                l_max,
                tail: if scale == 0.0 { 0.0 } else { tail },
            });
        }
        if l_max >= options.max_order {
            return Err(Error::Truncation { l_max, tail });
        }
        l_max = (2 * l_max).min(options.max_order);
    }
}

/// `G^refl_{φφ}` for two azimuthally oriented dipoles.
pub fn sphere_refl_tangential(freq: Frequency, geometry: &SphereGeometry, pos: &SpherePositions) -> Result<SeriesResult> {
    sum_series(freq, geometry, pos, Component::Tangential, SeriesOptions::default())
}

/// `G^refl_{rr}` for two radially oriented dipoles.
pub fn sphere_refl_radial(freq: Frequency, geometry: &SphereGeometry, pos: &SpherePositions) -> Result<SeriesResult> {
    sum_series(freq, geometry, pos, Component::Radial, SeriesOptions::default())
}

/// [`sphere_refl_tangential`] with explicit truncation controls.
pub fn sphere_refl_tangential_with(
    freq: Frequency,
    geometry: &SphereGeometry,
    pos: &SpherePositions,
    options: SeriesOptions,
) -> Result<SeriesResult> {
    sum_series(freq, geometry, pos, Component::Tangential, options)
}

/// [`sphere_refl_radial`] with explicit truncation controls.
pub fn sphere_refl_radial_with(
    freq: Frequency,
    geometry: &SphereGeometry,
    pos: &SpherePositions,
    options: SeriesOptions,
) -> Result<SeriesResult> {
    sum_series(freq, geometry, pos, Component::Radial, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::legendre_p;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sphere(radius: f64, eps_in: Complex64) -> SphereGeometry {
        SphereGeometry::new(radius, PermittivityModel::VACUUM, PermittivityModel::constant(eps_in).unwrap()).unwrap()
    }

    /// Reflected part of the electrostatic Green tensor for radial dipoles,
    /// from the induced potential of a point charge outside a dielectric sphere.
    fn static_radial(eps: f64, a: f64, pos: &SpherePositions, k1: f64) -> f64 {
        let x = pos.theta_b.cos();
        (1..400)
            .map(|l| {
                let lf = l as f64;
                let image = lf * (eps - 1.0) / (lf * (eps + 1.0) + 1.0);
                image * (lf + 1.0).powi(2) * a.powi(2 * l as i32 + 1) / (pos.r_a * pos.r_b).powi(l as i32 + 2) * legendre_p(l, x)
            })
            .sum::<f64>()
            / (4.0 * PI * k1 * k1)
    }

    #[test]
    fn matched_media_scatter_nothing() {
        let g = sphere(1.0, c(1.0, 0.0));
        let f = Frequency::reduced(1.0);
        for l in [1, 5, 20] {
            let (bm, bn) = mie_coefficients(l, f, &g).unwrap();
            assert!(bm.norm() < 1e-15 && bn.norm() < 1e-15);
        }
        let pos = SpherePositions { r_a: 1.2, r_b: 1.5, theta_b: 1.0 };
        assert!(sphere_refl_radial(f, &g, &pos).unwrap().value.norm() < 1e-15);
        assert!(sphere_refl_tangential(f, &g, &pos).unwrap().value.norm() < 1e-15);
    }

    #[test]
    fn rayleigh_limit_of_electric_coefficient() {
        let eps = 4.0;
        let f = Frequency::reduced(1.0);
        let radius = 0.01 / f.k0;
        let (bm, bn) = mie_coefficients(1, f, &sphere(radius, c(eps, 0.0))).unwrap();
        let expect = c(0.0, 2.0 / 3.0 * 1e-6 * (eps - 1.0) / (eps + 2.0));
        assert!((bn - expect).norm() < 1e-2 * expect.norm(), "{bn} vs {expect}");
        assert!(bm.norm() < 1e-3 * bn.norm());
    }

    #[test]
    fn lossless_coefficients_are_unitary() {
        let f = Frequency::reduced(1.0);
        let g = sphere(1.3, c(2.5, 0.0));
        for l in 1..30 {
            let (bm, bn) = mie_coefficients(l, f, &g).unwrap();
            for b in [bm, bn] {
                assert!(b.norm() <= 1.0 + 1e-9);
                assert!((-b.re - b.norm_sqr()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_series_reduces_to_electrostatic_image() {
        let f = Frequency::reduced(1e-3);
        let eps = 3.0;
        let g = sphere(1.0, c(eps, 0.0));
        for pos in [
            SpherePositions { r_a: 1.5, r_b: 2.0, theta_b: 0.0 },
            SpherePositions { r_a: 1.2, r_b: 1.3, theta_b: 0.7 },
            SpherePositions { r_a: 1.5, r_b: 1.5, theta_b: PI },
        ] {
            let series = sphere_refl_radial(f, &g, &pos).unwrap().value;
            let oracle = static_radial(eps, 1.0, &pos, f.k0);
            assert!((series.re - oracle).abs() < 1e-3 * oracle.abs(), "{series} vs {oracle}");
        }
    }

    #[test]
    fn lossy_sphere_enhances_decay() {
        let f = Frequency::reduced(1.0);
        let g = sphere(0.5, c(-3.0, 1.0));
        let free = f.k0 / (6.0 * PI);
        for r in [0.55, 0.7, 1.0] {
            let pos = SpherePositions { r_a: r, r_b: r, theta_b: 0.0 };
            let radial = sphere_refl_radial(f, &g, &pos).unwrap().value;
            let tangential = sphere_refl_tangential(f, &g, &pos).unwrap().value;
            assert!(radial.im + free > 0.0);
            assert!(tangential.im + free > 0.0);
        }
        let close = SpherePositions { r_a: 0.52, r_b: 0.52, theta_b: 0.0 };
        assert!(sphere_refl_radial(f, &g, &close).unwrap().value.im > 10.0 * free);
    }

    #[test]
    fn series_meets_tail_contract() {
        let f = Frequency::reduced(1.0);
        let g = sphere(2.0, c(-1.5, 0.01));
        let pos = SpherePositions { r_a: 2.02, r_b: 2.02, theta_b: PI };
        let res = sphere_refl_radial(f, &g, &pos).unwrap();
        assert!(res.tail < 1e-10);
        let longer = sphere_refl_radial_with(f, &g, &pos, SeriesOptions { tail_tol: 1e-13, ..Default::default() }).unwrap();
        assert!(longer.l_max >= res.l_max);
        assert!((longer.value - res.value).norm() < 1e-8 * res.value.norm());
    }

    #[test]
    fn truncation_is_reported() {
        let f = Frequency::reduced(1.0);
        let g = sphere(2.0, c(-1.5, 0.01));
        let pos = SpherePositions { r_a: 2.02, r_b: 2.02, theta_b: PI };
        let err = sphere_refl_radial_with(f, &g, &pos, SeriesOptions { tail_tol: 1e-10, max_order: 50 }).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn positions_inside_sphere_are_rejected() {
        let g = sphere(1.0, c(2.0, 0.0));
        let pos = SpherePositions { r_a: 0.9, r_b: 1.5, theta_b: 0.0 };
        assert!(sphere_refl_radial(Frequency::reduced(1.0), &g, &pos).is_err());
        assert!(mie_coefficients(0, Frequency::reduced(1.0), &g).is_err());
        assert!(SphereGeometry::new(-1.0, PermittivityModel::VACUUM, PermittivityModel::VACUUM).is_err());
    }

    #[test]
    fn cartesian_layout() {
        let pos = SpherePositions { r_a: 2.0, r_b: 3.0, theta_b: PI / 2.0 };
        let (a, b) = pos.cartesian();
        assert_eq!(a, Vector3::new(0.0, 0.0, 2.0));
        assert!((b - Vector3::new(3.0, 0.0, 0.0)).norm() < 1e-15);
        let (ua, ub) = pos.radial_directions();
        assert_eq!(ua, Vector3::z());
        assert!((ub - Vector3::x()).norm() < 1e-15);
    }
}
