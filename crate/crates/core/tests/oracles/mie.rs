//! Textbook Mie coefficients `a_n`, `b_n` for a sphere of relative index `m`
//! and real size parameter `x`, in the Bohren–Huffman formulation: the
//! log-derivative `D_n(mx)` by downward recurrence, `ψ_n(x)` by normalized
//! downward recurrence and `χ_n(x)` by upward recurrence.

use num_complex::Complex64;

fn log_derivative(n_max: usize, z: Complex64) -> Vec<Complex64> {
    let start = n_max.max(z.norm().ceil() as usize) + 60;
    let mut d = vec![Complex64::new(0.0, 0.0); start + 1];
    for n in (1..=start).rev() {
        let nz = n as f64 / z;
        d[n - 1] = nz - 1.0 / (d[n] + nz);
    }
    d.truncate(n_max + 1);
    d
}

/// `ψ_n(x) = x j_n(x)` for `n = 0..=n_max`.
fn riccati_psi(n_max: usize, x: f64) -> Vec<f64> {
    let start = n_max.max(x.ceil() as usize) + 60 + (20.0 * x).sqrt() as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    for n in (1..=start).rev() {
        vals[n - 1] = (2.0 * n as f64 + 1.0) / x * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > 1e250 {
            for v in vals.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let (psi0, psi1) = (x.sin(), x.sin() / x - x.cos());
    let scale = if psi0.abs() > psi1.abs() { psi0 / vals[0] } else { psi1 / vals[1] };
    vals.truncate(n_max + 1);
    vals.iter().map(|v| v * scale).collect()
}

/// `χ_n(x) = −x y_n(x)` for `n = 0..=n_max`.
fn riccati_chi(n_max: usize, x: f64) -> Vec<f64> {
    let mut vals = vec![x.cos(), x.cos() / x + x.sin()];
    for n in 1..n_max {
        let next = (2.0 * n as f64 + 1.0) / x * vals[n] - vals[n - 1];
        vals.push(next);
    }
    vals.truncate(n_max + 1);
    vals
}

/// `(a_n, b_n)` for `n = 1..=n_max` (index 0 unused).
pub fn coefficients(n_max: usize, x: f64, m: Complex64) -> Vec<(Complex64, Complex64)> {
    let d = log_derivative(n_max, m * x);
    let psi = riccati_psi(n_max, x);
    let chi = riccati_chi(n_max, x);
    let xi = |n: usize| Complex64::new(psi[n], -chi[n]);
    let mut out = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))];
    for n in 1..=n_max {
        let nx = n as f64 / x;
        let ta = d[n] / m + nx;
        let tb = d[n] * m + nx;
        let a = (ta * psi[n] - psi[n - 1]) / (ta * xi(n) - xi(n - 1));
        let b = (tb * psi[n] - psi[n - 1]) / (tb * xi(n) - xi(n - 1));
        out.push((a, b));
    }
    out
}
