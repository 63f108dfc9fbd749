//! Reflection Green tensor of a planar multilayer for source and observation
//! points inside the same layer.
//!
//! Layers are listed from the top (index 0) to the bottom; the first and last
//! are semi-infinite. Inside a slab the `z` coordinate is measured upward from
//! the slab's lower boundary. Inside a bounding half-space it is measured from
//! the single interface: positive in the top medium, negative in the bottom
//! one.
//!
//! The tensor is assembled from the Sommerfeld integral
//!
//! `G^refl = (i/4π) ∫₀^∞ dk k/(2β_j) G̃(k)`
//!
//! in a frame where the lateral separation points along `+x`; the general
//! orientation is recovered by a rotation about `z`.

use std::cell::Cell;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::{GreenResult, Tensor};
use crate::error::{Error, Result};
use crate::media::{axial_wavenumber, wavenumber, PermittivityModel};
use crate::quadrature::{integrate_segmented, CVec, QuadratureSpec};
use crate::specfun::bessel_j;
use crate::units::Frequency;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One layer of a planar stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub model: PermittivityModel,
    /// Thickness; `f64::INFINITY` for the two bounding half-spaces.
    pub thickness: f64,
}

impl Layer {
    pub fn bounding(model: PermittivityModel) -> Self {
        Self {
            model,
            thickness: f64::INFINITY,
        }
    }

    pub fn slab(model: PermittivityModel, thickness: f64) -> Self {
        Self { model, thickness }
    }
}

/// Ordered planar layers with a designated source layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredStack {
    layers: Vec<Layer>,
    source: usize,
}

impl LayeredStack {
    pub fn new(layers: Vec<Layer>, source: usize) -> Result<Self> {
        let n = layers.len();
        if n < 2 {
            return Err(Error::Domain("a stack needs at least two layers".into()));
        }
        if source >= n {
            return Err(Error::Domain(format!("source layer {source} does not exist in a {n}-layer stack")));
        }
        for (i, layer) in layers.iter().enumerate() {
            let bounding = i == 0 || i == n - 1;
            if bounding && layer.thickness != f64::INFINITY {
                return Err(Error::Domain(format!("layer {i} bounds the stack and must be semi-infinite")));
            }
            if !bounding && !(layer.thickness > 0.0 && layer.thickness.is_finite()) {
                return Err(Error::Domain(format!(
                    "layer {i} must have a finite positive thickness, got {}",
                    layer.thickness
                )));
            }
        }
        Ok(Self { layers, source })
    }

    /// Two media separated by one interface, with the source in the upper one.
    pub fn half_space(upper: PermittivityModel, lower: PermittivityModel) -> Self {
        Self {
            layers: vec![Layer::bounding(upper), Layer::bounding(lower)],
            source: 0,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn source(&self) -> usize {
        self.source
    }

    /// Thickness of the source layer, zero for a bounding half-space.
    pub fn source_thickness(&self) -> f64 {
        let d = self.layers[self.source].thickness;
        if d.is_finite() {
            d
        } else {
            0.0
        }
    }

    fn has_upper(&self) -> bool {
        self.source > 0
    }

    fn has_lower(&self) -> bool {
        self.source + 1 < self.layers.len()
    }

    /// Checks that `z` lies strictly inside the source layer.
    pub fn check_height(&self, z: f64) -> Result<()> {
        let ok = match (self.has_upper(), self.has_lower()) {
            (true, true) => z > 0.0 && z < self.source_thickness(),
            (false, true) => z > 0.0,
            (true, false) => z < 0.0,
            (false, false) => unreachable!("stacks have at least two layers"),
        };
        if ok && z.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("z = {z} is not strictly inside the source layer")))
        }
    }
}

/// Field polarization relative to the plane of incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    P,
    S,
}

/// Which part of the stack a reflection coefficient looks into, as seen from
/// the source layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Layers above the source layer (`r_+`).
    Upper,
    /// Layers below the source layer (`r_−`).
    Lower,
}

/// Portion of the Sommerfeld integral to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Full,
    /// `k_∥ ∈ [0, Re k_j]`: waves propagating along `z` in the source layer.
    Propagating,
    /// `k_∥ ∈ [Re k_j, ∞)`: waves evanescent along `z`.
    Evanescent,
}

/// Single-interface reflection coefficient for a wave in medium `a` hitting
/// medium `b`.
pub fn fresnel(pol: Polarization, eps_a: Complex64, eps_b: Complex64, beta_a: Complex64, beta_b: Complex64) -> Complex64 {
    match pol {
        Polarization::S => (beta_a - beta_b) / (beta_a + beta_b),
        Polarization::P => (eps_b * beta_a - eps_a * beta_b) / (eps_b * beta_a + eps_a * beta_b),
    }
}

/// A stack with its permittivities and wavenumbers evaluated at one frequency.
#[derive(Debug, Clone)]
pub struct StackAtFrequency {
    eps: Vec<Complex64>,
    k: Vec<Complex64>,
    thickness: Vec<f64>,
    source: usize,
    k0: f64,
}

/// Upper and lower reflection coefficients for both polarizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflections {
    pub p_upper: Complex64,
    pub p_lower: Complex64,
    pub s_upper: Complex64,
    pub s_lower: Complex64,
}

impl StackAtFrequency {
    pub fn new(stack: &LayeredStack, freq: Frequency) -> Result<Self> {
        let eps = stack
            .layers
            .iter()
            .map(|l| l.model.evaluate(freq.omega))
            .collect::<Result<Vec<_>>>()?;
        let k = eps.iter().map(|&e| wavenumber(e, freq.k0)).collect();
        Ok(Self {
            eps,
            k,
            thickness: stack.layers.iter().map(|l| l.thickness).collect(),
            source: stack.source,
            k0: freq.k0,
        })
    }

    pub fn permittivities(&self) -> &[Complex64] {
        &self.eps
    }

    pub fn wavenumbers(&self) -> &[Complex64] {
        &self.k
    }

    pub fn source_wavenumber(&self) -> Complex64 {
        self.k[self.source]
    }

    /// Reflection coefficient seen from the source layer, composed outward
    /// from the far bounding medium.
    pub fn reflection(&self, side: Side, pol: Polarization, k_par: f64) -> Complex64 {
        let beta: Vec<Complex64> = self.k.iter().map(|&k| axial_wavenumber(k, k_par)).collect();
        self.reflection_with(&beta, side, pol)
    }

    pub fn reflections(&self, k_par: f64) -> Reflections {
        let beta: Vec<Complex64> = self.k.iter().map(|&k| axial_wavenumber(k, k_par)).collect();
        Reflections {
            p_upper: self.reflection_with(&beta, Side::Upper, Polarization::P),
            p_lower: self.reflection_with(&beta, Side::Lower, Polarization::P),
            s_upper: self.reflection_with(&beta, Side::Upper, Polarization::S),
            s_lower: self.reflection_with(&beta, Side::Lower, Polarization::S),
        }
    }

    fn reflection_with(&self, beta: &[Complex64], side: Side, pol: Polarization) -> Complex64 {
        let j = self.source;
        let n = self.eps.len();
        // Sequence of layer indices from the far bounding medium to the source.
        let path: Vec<usize> = match side {
            Side::Upper => (0..=j).collect(),
            Side::Lower => (j..n).rev().collect(),
        };
        let mut r = ZERO;
        for (step, w) in path.windows(2).enumerate() {
            let (outer, inner) = (w[0], w[1]);
            let rho = fresnel(pol, self.eps[inner], self.eps[outer], beta[inner], beta[outer]);
            r = if step == 0 {
                rho
            } else {
                let phase = (2.0 * I * beta[outer] * self.thickness[outer]).exp() * r;
                (rho + phase) / (1.0 + rho * phase)
            };
        }
        r
    }

    /// Points where the Sommerfeld integrand is non-smooth or sharply peaked:
    /// `Re k_m` of every layer and the surface-plasmon estimate
    /// `Re k0 √(ε_a ε_b/(ε_a + ε_b))` of every interface.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.k.iter().map(|k| k.re).collect();
        for w in self.eps.windows(2) {
            let sum = w[0] + w[1];
            if sum.norm() > 0.0 {
                pts.push((self.k0 * (w[0] * w[1] / sum).sqrt()).re);
            }
        }
        pts.retain(|p| p.is_finite() && *p > 0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        pts
    }
}

/// Reflection coefficient `r_±` of `stack` for the given side and polarization.
pub fn stack_reflection(stack: &LayeredStack, side: Side, pol: Polarization, freq: Frequency, k_par: f64) -> Result<Complex64> {
    if !(k_par >= 0.0) {
        return Err(Error::Domain("k_par must be nonnegative".into()));
    }
    Ok(StackAtFrequency::new(stack, freq)?.reflection(side, pol, k_par))
}

/// Source and observation heights within the source layer and their lateral
/// distance (taken along `+x`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InLayerPositions {
    pub z_a: f64,
    pub z_b: f64,
    pub r_x: f64,
}

impl InLayerPositions {
    fn validate(&self, stack: &LayeredStack) -> Result<()> {
        stack.check_height(self.z_a)?;
        stack.check_height(self.z_b)?;
        if !(self.r_x >= 0.0 && self.r_x.is_finite()) {
            return Err(Error::Domain("lateral separation must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Nonzero components of the Sommerfeld integrand `G̃^refl` (with the phase
/// `e^{iβ_j d_j}` already absorbed), in the frame with `R_y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionComponents {
    pub xx: Complex64,
    pub yy: Complex64,
    pub xz: Complex64,
    pub zx: Complex64,
    pub zz: Complex64,
}

impl ReflectionComponents {
    fn to_cvec(self) -> CVec<5> {
        CVec([self.xx, self.yy, self.xz, self.zx, self.zz])
    }

    fn from_cvec(v: CVec<5>) -> Self {
        let [xx, yy, xz, zx, zz] = v.0;
        Self { xx, yy, xz, zx, zz }
    }

    pub fn to_tensor(self) -> Tensor {
        Matrix3::new(self.xx, ZERO, self.xz, ZERO, self.yy, ZERO, self.zx, ZERO, self.zz)
    }
}

struct Geometry {
    has_upper: bool,
    has_lower: bool,
    d: f64,
    h: f64,
    rz: f64,
    r_x: f64,
}

impl Geometry {
    fn new(stack: &LayeredStack, pos: &InLayerPositions) -> Self {
        Self {
            has_upper: stack.has_upper(),
            has_lower: stack.has_lower(),
            d: stack.source_thickness(),
            h: pos.z_a + pos.z_b,
            rz: pos.z_b - pos.z_a,
            r_x: pos.r_x,
        }
    }

    /// Smallest exponential decay length of the integrand at large `k_∥`.
    fn decay(&self) -> f64 {
        let mut kappa = f64::INFINITY;
        if self.has_lower {
            kappa = kappa.min(self.h);
        }
        if self.has_upper {
            kappa = kappa.min(2.0 * self.d - self.h);
        }
        if self.has_upper && self.has_lower {
            kappa = kappa.min(2.0 * self.d - self.rz.abs());
        }
        kappa
    }
}

fn components(ev: &StackAtFrequency, geo: &Geometry, k_par: f64) -> Result<ReflectionComponents> {
    let kj = ev.k[ev.source];
    let beta = axial_wavenumber(kj, k_par);
    let r = ev.reflections(k_par);
    let e = |x: f64| (I * beta * x).exp();
    let (d, h, rz) = (geo.d, geo.h, geo.rz);
    let e_h = if geo.has_lower { e(h) } else { ZERO };
    let e_u = if geo.has_upper { e(2.0 * d - h) } else { ZERO };
    let both = geo.has_upper && geo.has_lower;
    let (e_p, e_m, e_2d) = if both {
        (e(2.0 * d + rz), e(2.0 * d - rz), e(2.0 * d))
    } else {
        (ZERO, ZERO, ZERO)
    };
    let coeffs = |up: Complex64, low: Complex64| -> Result<(Complex64, Complex64, Complex64, Complex64)> {
        let denom = 1.0 - up * low * e_2d;
        if denom.norm() < 1e-300 {
            return Err(Error::PoleProximity { k_par });
        }
        let cross = up * low;
        let c_base = low * e_h + up * e_u;
        let s_base = low * e_h - up * e_u;
        Ok((
            (c_base + cross * (e_p + e_m)) / denom,
            (c_base - cross * (e_p + e_m)) / denom,
            (s_base + cross * (e_p - e_m)) / denom,
            (s_base - cross * (e_p - e_m)) / denom,
        ))
    };
    let (cp_plus, cp_minus, sp_plus, sp_minus) = coeffs(r.p_upper, r.p_lower)?;
    let (cs_plus, _, _, _) = coeffs(r.s_upper, r.s_lower)?;
    let arg = k_par * geo.r_x;
    let (j0, j1, j2) = (bessel_j(0, arg), bessel_j(1, arg), bessel_j(2, arg));
    let kj2 = kj * kj;
    let b2 = beta * beta / kj2;
    Ok(ReflectionComponents {
        xx: -b2 * cp_minus * (j0 - j2) + cs_plus * (j0 + j2),
        yy: -b2 * cp_minus * (j0 + j2) + cs_plus * (j0 - j2),
        xz: -2.0 * I * beta * k_par / kj2 * sp_plus * j1,
        zx: 2.0 * I * beta * k_par / kj2 * sp_minus * j1,
        zz: 2.0 * k_par * k_par / kj2 * cp_plus * j0,
    })
}

/// Integrand components `G̃^refl(k_∥)` at one lateral wavenumber.
pub fn refl_integrand(stack: &LayeredStack, pos: &InLayerPositions, freq: Frequency, k_par: f64) -> Result<ReflectionComponents> {
    pos.validate(stack)?;
    if !(k_par >= 0.0) {
        return Err(Error::Domain("k_par must be nonnegative".into()));
    }
    let ev = StackAtFrequency::new(stack, freq)?;
    components(&ev, &Geometry::new(stack, pos), k_par)
}

/// Reflection Green tensor in the frame where the lateral separation lies
/// along `+x`.
pub fn refl_green_local(
    stack: &LayeredStack,
    pos: &InLayerPositions,
    freq: Frequency,
    part: Part,
    spec: &QuadratureSpec,
) -> Result<GreenResult> {
    pos.validate(stack)?;
    let ev = StackAtFrequency::new(stack, freq)?;
    let geo = Geometry::new(stack, pos);
    let kappa = geo.decay();
    if !(kappa > 0.0) {
        return Err(Error::Domain("positions touch an interface".into()));
    }
    let kj = ev.source_wavenumber();
    let mut breakpoints = ev.breakpoints();
    breakpoints.extend(spec.breakpoints.iter().copied());
    breakpoints.sort_by(f64::total_cmp);
    let last = breakpoints.last().copied().unwrap_or(0.0);
    let quad = QuadratureSpec {
        breakpoints,
        tail_decay: Some(kappa),
        tail_ceiling: Some(spec.tail_ceiling.unwrap_or(last + 120.0 / kappa)),
        ..spec.clone()
    };

    let failure: Cell<Option<Error>> = Cell::new(None);
    let integrand = |k_par: f64| -> CVec<5> {
        let beta = axial_wavenumber(kj, k_par);
        if beta.norm() == 0.0 {
            return CVec([ZERO; 5]);
        }
        match components(&ev, &geo, k_par) {
            Ok(c) => c.to_cvec().scale(I / (4.0 * PI) * k_par / (2.0 * beta)),
            Err(e) => {
                failure.set(Some(e));
                CVec([ZERO; 5])
            }
        }
    };
    let split = kj.re;
    let result = match part {
        Part::Full => integrate_segmented(integrand, 0.0, f64::INFINITY, &quad),
        Part::Propagating => integrate_segmented(integrand, 0.0, split, &quad),
        Part::Evanescent => integrate_segmented(integrand, split, f64::INFINITY, &quad),
    }?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(GreenResult {
        tensor: ReflectionComponents::from_cvec(result.value).to_tensor(),
        error: result.error,
    })
}

/// Rotates a tensor computed with the lateral separation along `+x` into the
/// frame where the separation is `(dx, dy)`.
pub fn rotate_lateral(local: &Tensor, dx: f64, dy: f64) -> Tensor {
    let rho = dx.hypot(dy);
    if rho == 0.0 {
        return *local;
    }
    let (c, s) = (dx / rho, dy / rho);
    let rot = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0).map(|v| Complex64::new(v, 0.0));
    rot * local * rot.transpose()
}

/// Reflection Green tensor `G^refl(r_B, r_A)` for arbitrary points inside the
/// source layer; `z` components follow the stack's height convention.
pub fn refl_green(
    stack: &LayeredStack,
    r_b: &Vector3<f64>,
    r_a: &Vector3<f64>,
    freq: Frequency,
    part: Part,
    spec: &QuadratureSpec,
) -> Result<GreenResult> {
    let (dx, dy) = (r_b.x - r_a.x, r_b.y - r_a.y);
    let pos = InLayerPositions {
        z_a: r_a.z,
        z_b: r_b.z,
        r_x: dx.hypot(dy),
    };
    let local = refl_green_local(stack, &pos, freq, part, spec)?;
    Ok(GreenResult {
        tensor: rotate_lateral(&local.tensor, dx, dy),
        error: local.error,
    })
}

/// Near-interface closed form of the reflection tensor for two points in a
/// real, positive-permittivity half-space `ε₁` above a medium `ε₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticResult {
    pub green: GreenResult,
    /// `max(k₁(z_A + z_B), k₁R_x)`; the form is accepted below 0.5 and is
    /// only qualitative above 0.2.
    pub validity: f64,
}

impl AsymptoticResult {
    pub fn near_validity_edge(&self) -> bool {
        self.validity > 0.2
    }
}

pub fn interface_asymptotic(eps1: f64, eps2: Complex64, z_a: f64, z_b: f64, r_x: f64, freq: Frequency) -> Result<AsymptoticResult> {
    if !(eps1 > 0.0) {
        return Err(Error::Domain("the source half-space must have real positive permittivity".into()));
    }
    if !(z_a > 0.0 && z_b > 0.0 && r_x >= 0.0) {
        return Err(Error::Domain("heights must be positive and R_x nonnegative".into()));
    }
    let k1 = eps1.sqrt() * freq.k0;
    let h = z_a + z_b;
    let validity = (k1 * h).max(k1 * r_x);
    if validity >= 0.5 {
        return Err(Error::Precondition(format!(
            "near-interface form requires k1(z_A+z_B) and k1 R_x below 0.5, got {validity:.3}"
        )));
    }
    let e1 = Complex64::new(eps1, 0.0);
    let f = (eps2 - e1) / (eps2 + e1);
    let r2 = h * h + r_x * r_x;
    let r5 = r2 * r2 * r2.sqrt();
    let pre = f / (4.0 * PI * k1 * k1);
    let xx = pre * (h * h - 2.0 * r_x * r_x) / r5;
    let yy = pre * r2 / r5;
    let xz = pre * 3.0 * h * r_x / r5;
    let zz = f / (4.0 * PI * r2.sqrt()) * ((2.0 * h * h - r_x * r_x) / (k1 * k1 * r2 * r2) + 1.0);
    let comps = ReflectionComponents { xx, yy, xz, zx: -xz, zz };
    Ok(AsymptoticResult {
        green: GreenResult::exact(comps.to_tensor()),
        validity,
    })
}
