//! Transfer and decay kernels, vibronic line sets, spectral-overlap total
//! rates, orientation averages and the single-molecule emission spectrum.
//!
//! The `*_si` kernels take the projected Green tensor in 1/m, dipole moments
//! in C·m and angular frequency in rad/s. The dimensionless forms take the
//! Green tensor and `k0` in any consistent inverse length unit.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::green::Tensor;
use crate::quadrature::{integrate_product_spectrum, QuadratureResult, QuadratureSpec};
use crate::units::{EPSILON_0, HBAR, SPEED_OF_LIGHT};

const C2: f64 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;

/// Transfer-rate kernel `w̃ = (2π/ħ²)(ω²/(ε₀c²))² |d_A|²|d_B|² |d̂_B·G·d̂_A|²`.
pub fn transfer_kernel_si(projected: Complex64, moment_a: f64, moment_b: f64, omega: f64) -> f64 {
    let coupling = omega * omega / (EPSILON_0 * C2);
    2.0 * PI / (HBAR * HBAR) * coupling * coupling * (moment_a * moment_b).powi(2) * projected.norm_sqr()
}

/// Decay-rate kernel `Γ̃ = (2ω²/(ħε₀c²)) |d|² d̂·Im G(r, r)·d̂`.
///
/// Slightly negative input within `1e−12` of the vacuum value (rounding) is
/// clamped to zero; anything below that is a passivity violation.
pub fn decay_kernel_si(im_projected: f64, moment: f64, omega: f64) -> Result<f64> {
    let vacuum = omega / (6.0 * PI * SPEED_OF_LIGHT);
    let im = check_passive(im_projected, vacuum)?;
    Ok(2.0 * omega * omega / (HBAR * EPSILON_0 * C2) * moment * moment * im)
}

/// Free-space spontaneous decay rate `ω³|d|²/(3πε₀ħc³)`.
pub fn free_space_decay_rate(moment: f64, omega: f64) -> f64 {
    omega.powi(3) * moment * moment / (3.0 * PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3))
}

fn check_passive(im: f64, vacuum: f64) -> Result<f64> {
    if im >= 0.0 {
        Ok(im)
    } else if im >= -1e-12 * vacuum {
        Ok(0.0)
    } else {
        Err(Error::Passivity(format!(
            "Im G at coincidence is {im:e}, below zero beyond rounding tolerance"
        )))
    }
}

/// `w̃` in units of `(|d_A d_B| ω³/(ħε₀c³))²/(8π)`, which reduces to
/// `16π²|G|²/k0²`.
pub fn transfer_kernel_scaled(projected: Complex64, k0: f64) -> f64 {
    16.0 * PI * PI * projected.norm_sqr() / (k0 * k0)
}

/// `Γ̃` relative to the vacuum rate at the same frequency, `6π Im G/k0`.
pub fn decay_ratio_to_vacuum(im_projected: f64, k0: f64) -> Result<f64> {
    let vacuum = k0 / (6.0 * PI);
    Ok(check_passive(im_projected, vacuum)? / vacuum)
}

/// Orientation average `⟨|d̂_B·G·d̂_A|²⟩ = Σ|G_ij|²/9` for independent
/// isotropically distributed unit dipoles.
pub fn orientation_average_sq(tensor: &Tensor) -> f64 {
    tensor.iter().map(|g| g.norm_sqr()).sum::<f64>() / 9.0
}

/// Orientation average `⟨d̂·Im G·d̂⟩ = Tr Im G / 3`.
pub fn orientation_average_im(tensor: &Tensor) -> f64 {
    (tensor[(0, 0)].im + tensor[(1, 1)].im + tensor[(2, 2)].im) / 3.0
}

/// Orientation-averaged transfer kernel in SI units.
pub fn orientation_average_transfer_si(tensor: &Tensor, moment_a: f64, moment_b: f64, omega: f64) -> f64 {
    let coupling = omega * omega / (EPSILON_0 * C2);
    2.0 * PI / (HBAR * HBAR) * coupling * coupling * (moment_a * moment_b).powi(2) * orientation_average_sq(tensor)
}

/// One vibronic line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub center: f64,
    pub weight: f64,
}

/// Lorentzian-broadened vibronic spectrum `σ(ω) = Σ w_i L_η(ω − ω_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSet {
    lines: Vec<Line>,
    hwhm: f64,
}

impl LineSet {
    /// Builds a normalized line set; weights must sum to one within `1e−9`.
    pub fn new(lines: Vec<Line>, hwhm: f64) -> Result<Self> {
        let set = Self::unnormalized(lines, hwhm)?;
        let total: f64 = set.lines.iter().map(|l| l.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "line weights sum to {total}, expected 1 (use an unnormalized set for truncated manifolds)"
            )));
        }
        Ok(set)
    }

    /// Builds a line set without the unit-sum requirement.
    pub fn unnormalized(lines: Vec<Line>, hwhm: f64) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::Domain("a line set needs at least one line".into()));
        }
        if !(hwhm > 0.0 && hwhm.is_finite()) {
            return Err(Error::Domain("line half-width must be positive".into()));
        }
        for l in &lines {
            if !(l.weight >= 0.0 && l.weight.is_finite() && l.center.is_finite()) {
                return Err(Error::Domain(format!("invalid line {l:?}")));
            }
        }
        Ok(Self { lines, hwhm })
    }

    /// A single unit-weight line.
    pub fn single(center: f64, hwhm: f64) -> Result<Self> {
        Self::new(vec![Line { center, weight: 1.0 }], hwhm)
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn hwhm(&self) -> f64 {
        self.hwhm
    }

    /// Spectral density at `omega`.
    pub fn density(&self, omega: f64) -> f64 {
        self.lines
            .iter()
            .map(|l| l.weight * lorentzian(omega - l.center, self.hwhm))
            .sum()
    }
}

/// Unit-area Lorentzian with half-width `eta`.
pub fn lorentzian(detuning: f64, eta: f64) -> f64 {
    eta / (PI * (detuning * detuning + eta * eta))
}

/// A kernel sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl KernelCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::Domain("a kernel curve needs at least two (ω, value) samples".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("kernel grid must be strictly increasing".into()));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Domain("kernel samples must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` on `grid`.
    pub fn sample(grid: Vec<f64>, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = grid.iter().map(|&w| f(w)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().expect("nonempty grid"))
    }

    /// Linear interpolation, held constant beyond the grid ends.
    pub fn value_at(&self, omega: f64) -> f64 {
        let n = self.grid.len();
        if omega <= self.grid[0] {
            return self.values[0];
        }
        if omega >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.grid.partition_point(|&g| g <= omega) - 1;
        let t = (omega - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Total transfer rate `w = ∫dω w̃(ω) σ_em(ω) σ_abs(ω)`.
pub fn total_transfer_rate(
    kernel: &KernelCurve,
    emission: &LineSet,
    absorption: &LineSet,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<f64>> {
    integrate_product_spectrum(kernel, &[emission, absorption], spec)
}

/// Total decay rate `Γ = ∫dω Γ̃(ω) σ_em(ω)`.
pub fn total_decay_rate(kernel: &KernelCurve, emission: &LineSet, spec: &QuadratureSpec) -> Result<QuadratureResult<f64>> {
    integrate_product_spectrum(kernel, &[emission], spec)
}

/// Spectral overlap `σ = ∫dω σ_em(ω) σ_abs(ω)` of two line sets (closed form
/// for Lorentzians: a Lorentzian of the summed widths at each center pair).
pub fn spectral_overlap(emission: &LineSet, absorption: &LineSet) -> f64 {
    let eta = emission.hwhm() + absorption.hwhm();
    let mut acc = 0.0;
    for e in emission.lines() {
        for a in absorption.lines() {
            acc += e.weight * a.weight * lorentzian(e.center - a.center, eta);
        }
    }
    acc
}

/// Emission spectrum `S(ω_S) = 2π Σ_i w_i |F_i|² L_η(ω_S − ω_i)` observed at a
/// point, with `F_i = −i(ω_i²/(ε₀c²)) G(r, r_A, ω_i)·d_A`.
///
/// `dipole` is the transition dipole in C·m, and `propagator(ω)` returns the
/// Green tensor from the molecule to the observation point in 1/m.
pub fn emission_spectrum(
    grid: &[f64],
    molecule: &LineSet,
    dipole: &Vector3<f64>,
    propagator: impl Fn(f64) -> Result<Tensor>,
) -> Result<Vec<f64>> {
    let d = dipole.map(|v| Complex64::new(v, 0.0));
    let mut strengths = Vec::with_capacity(molecule.lines().len());
    for line in molecule.lines() {
        let g = propagator(line.center)?;
        let coupling = line.center * line.center / (EPSILON_0 * C2);
        let field = g * d;
        strengths.push(coupling * coupling * field.norm_squared());
    }
    Ok(grid
        .iter()
        .map(|&w| {
            2.0 * PI
                * molecule
                    .lines()
                    .iter()
                    .zip(&strengths)
                    .map(|(l, s)| l.weight * s * lorentzian(w - l.center, molecule.hwhm()))
                    .sum::<f64>()
        })
        .collect())
}
