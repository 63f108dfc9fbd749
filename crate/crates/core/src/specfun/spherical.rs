use num_complex::Complex64;

use crate::error::{Error, Result};

/// Highest order accepted by the pointwise spherical Bessel/Hankel routines.
///
/// The log-scaled sequences ([`ScaledBesselJ`], [`ScaledHankel`]) are not
/// bound by this limit because they never form the individual values.
pub const MAX_ORDER: usize = 200;

const I: Complex64 = Complex64::new(0.0, 1.0);
const RESCALE: f64 = 1e200;

/// Which radial function a Riccati derivative refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    /// Spherical Bessel function of the first kind `j_l`.
    J,
    /// Spherical Hankel function of the first kind `h_l^(1)`.
    H1,
}

fn check_order(l: usize) -> Result<()> {
    if l > MAX_ORDER {
        Err(Error::Domain(format!(
            "order l = {l} exceeds the supported maximum {MAX_ORDER}"
        )))
    } else {
        Ok(())
    }
}

/// Starting order for the downward recurrence of `j_n`.
fn miller_start(l: usize, z_abs: f64) -> usize {
    let top = (l as f64).max(z_abs);
    top.ceil() as usize + 30 + (50.0 * top).sqrt().ceil() as usize
}

fn j0_closed(z: Complex64) -> Complex64 {
    z.sin() / z
}

fn j1_closed(z: Complex64) -> Complex64 {
    z.sin() / (z * z) - z.cos() / z
}

/// Spherical Bessel function `j_l(z)`.
///
/// Uses Miller's downward recurrence normalized against the closed form of
/// `j_0` (or `j_1` when `j_0` is near one of its zeros).
pub fn spherical_bessel_j(l: usize, z: Complex64) -> Result<Complex64> {
    check_order(l)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(if l == 0 { 1.0.into() } else { 0.0.into() });
    }
    let start = miller_start(l, z.norm());
    let mut next = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1.0, 0.0);
    // Captured values keep the scale they had when recorded; `rescales`
    // counts the divisions by RESCALE applied to the running pair so far.
    let mut rescales = 0i32;
    let mut target = (cur, 0i32);
    let mut f1 = (Complex64::new(0.0, 0.0), 0i32);
    for n in (1..=start).rev() {
        let prev = (2.0 * n as f64 + 1.0) / z * cur - next;
        next = cur;
        cur = prev;
        if n == 1 {
            f1 = (next, rescales);
        }
        if n - 1 == l {
            target = (cur, rescales);
        }
        if cur.norm() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            rescales += 1;
        }
    }
    let f0 = (cur, rescales);
    let (j0, j1) = (j0_closed(z), j1_closed(z));
    let (anchor, exact) = if j0.norm() >= j1.norm() { (f0, j0) } else { (f1, j1) };
    // Scale before dividing: num-complex division squares the divisor.
    let norm = anchor.0.norm();
    let mut value = (target.0 / norm) / (anchor.0 / norm) * exact;
    for _ in 0..(anchor.1 - target.1) {
        value /= RESCALE;
    }
    Ok(value)
}

/// Spherical Hankel function of the first kind `h_l^(1)(z)` by upward recurrence.
pub fn spherical_hankel_h1(l: usize, z: Complex64) -> Result<Complex64> {
    check_order(l)?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("h_l^(1) is singular at z = 0".into()));
    }
    let e = (I * z).exp();
    let mut prev = -I * e / z;
    if l == 0 {
        return Ok(prev);
    }
    let mut cur = -e * (z + I) / (z * z);
    for n in 1..l {
        let next = (2.0 * n as f64 + 1.0) / z * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Riccati derivative `[z f_l(z)]' = z f_{l-1}(z) − l f_l(z)`.
pub fn riccati_derivative(kind: RadialKind, l: usize, z: Complex64) -> Result<Complex64> {
    check_order(l)?;
    let f = |n: usize| match kind {
        RadialKind::J => spherical_bessel_j(n, z),
        RadialKind::H1 => spherical_hankel_h1(n, z),
    };
    if l == 0 {
        return match kind {
            RadialKind::J => Ok(z.cos()),
            RadialKind::H1 => {
                if z == Complex64::new(0.0, 0.0) {
                    Err(Error::Domain("h_l^(1) is singular at z = 0".into()))
                } else {
                    Ok((I * z).exp())
                }
            }
        };
    }
    Ok(z * f(l - 1)? - l as f64 * f(l)?)
}

/// `ln sin z`, stable for large `|Im z|`.
fn ln_sin(z: Complex64) -> Complex64 {
    if z.im.abs() < 15.0 {
        z.sin().ln()
    } else if z.im > 0.0 {
        -I * z + (((2.0 * I * z).exp() - 1.0) / (2.0 * I)).ln()
    } else {
        I * z + ((1.0 - (-2.0 * I * z).exp()) / (2.0 * I)).ln()
    }
}

/// `cot z`, stable for large `|Im z|`.
fn cot(z: Complex64) -> Complex64 {
    if z.im.abs() < 15.0 {
        z.cos() / z.sin()
    } else if z.im > 0.0 {
        let e = (2.0 * I * z).exp();
        I * (e + 1.0) / (e - 1.0)
    } else {
        let e = (-2.0 * I * z).exp();
        I * (1.0 + e) / (1.0 - e)
    }
}

/// Orders `0..=l_max` of `j_l(z)` held as complex logarithms together with the
/// log-derivative `D_l = [z j_l(z)]' / (z j_l(z))`.
///
/// Built from the continued fraction for `j_l/j_{l−1}`, so very high orders
/// and arguments with large imaginary part neither overflow nor underflow.
#[derive(Debug, Clone)]
pub struct ScaledBesselJ {
    ln_value: Vec<Complex64>,
    log_derivative: Vec<Complex64>,
}

impl ScaledBesselJ {
    pub fn new(l_max: usize, z: Complex64) -> Result<Self> {
        if z == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("scaled j_l requires z ≠ 0".into()));
        }
        let start = miller_start(l_max, z.norm());
        // ratio[n] = j_n / j_{n−1}
        let mut ratio = vec![Complex64::new(0.0, 0.0); l_max + 1];
        let mut r = Complex64::new(0.0, 0.0);
        for n in (1..=start).rev() {
            r = 1.0 / ((2.0 * n as f64 + 1.0) / z - r);
            if n <= l_max {
                ratio[n] = r;
            }
        }
        // Unnormalized logarithms of the Miller sequence, f_{l_max} = 1.
        let mut ln_f = vec![Complex64::new(0.0, 0.0); l_max + 1];
        for n in (1..=l_max).rev() {
            ln_f[n - 1] = ln_f[n] - ratio[n].ln();
        }
        // Normalize at j_0 or j_1, whichever is not close to a zero: the
        // ratio adjacent to a near-zero carries a large relative error.
        let ln_j0 = ln_sin(z) - z.ln();
        let j1_over_j0 = 1.0 / z - cot(z);
        let ln_j1 = ln_j0 + j1_over_j0.ln();
        let offset = if l_max >= 1 && j1_over_j0.norm() > 1.0 {
            ln_j1 - ln_f[1]
        } else {
            ln_j0 - ln_f[0]
        };
        let mut ln_value: Vec<Complex64> = ln_f.iter().map(|v| v + offset).collect();
        ln_value[0] = ln_j0;
        if l_max >= 1 {
            ln_value[1] = ln_j1;
        }
        let mut log_derivative = Vec::with_capacity(l_max + 1);
        log_derivative.push(cot(z));
        for (n, &rn) in ratio.iter().enumerate().skip(1) {
            log_derivative.push(1.0 / rn - n as f64 / z);
        }
        Ok(Self {
            ln_value,
            log_derivative,
        })
    }

    pub fn l_max(&self) -> usize {
        self.ln_value.len() - 1
    }

    /// `ln j_l(z)` (any branch; only its exponential is meaningful).
    pub fn ln_value(&self, l: usize) -> Complex64 {
        self.ln_value[l]
    }

    /// `[z j_l(z)]' / (z j_l(z))`.
    pub fn log_derivative(&self, l: usize) -> Complex64 {
        self.log_derivative[l]
    }
}

/// Orders `0..=l_max` of `h_l^(1)(z)` held as complex logarithms with the
/// log-derivative `[z h_l(z)]' / (z h_l(z))`, by upward ratio recurrence.
#[derive(Debug, Clone)]
pub struct ScaledHankel {
    ln_value: Vec<Complex64>,
    log_derivative: Vec<Complex64>,
}

impl ScaledHankel {
    pub fn new(l_max: usize, z: Complex64) -> Result<Self> {
        if z == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("h_l^(1) is singular at z = 0".into()));
        }
        let mut ln_value = Vec::with_capacity(l_max + 1);
        let mut log_derivative = Vec::with_capacity(l_max + 1);
        let mut ln = Complex64::new(0.0, -std::f64::consts::FRAC_PI_2) + I * z - z.ln();
        ln_value.push(ln);
        log_derivative.push(I);
        // r = h_n / h_{n−1}
        let mut r = 1.0 / z - I;
        for n in 1..=l_max {
            if n > 1 {
                r = (2.0 * (n - 1) as f64 + 1.0) / z - 1.0 / r;
            }
            ln += r.ln();
            ln_value.push(ln);
            log_derivative.push(1.0 / r - n as f64 / z);
        }
        Ok(Self {
            ln_value,
            log_derivative,
        })
    }

    pub fn l_max(&self) -> usize {
        self.ln_value.len() - 1
    }

    pub fn ln_value(&self, l: usize) -> Complex64 {
        self.ln_value[l]
    }

    pub fn log_derivative(&self, l: usize) -> Complex64 {
        self.log_derivative[l]
    }
}
