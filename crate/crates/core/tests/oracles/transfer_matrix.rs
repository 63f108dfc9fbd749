//! Reflection of a planar film stack from 2×2 characteristic matrices.
//!
//! Each film contributes `[[cos δ, −i sin δ/η], [−iη sin δ, cos δ]]` with
//! `δ = βd`; admittances are `η = β` for s and `η = β/ε` for p polarization.

use num_complex::Complex64;

pub struct Medium {
    pub eps: Complex64,
    /// Ignored for the incidence medium and the substrate.
    pub thickness: f64,
}

fn beta(eps: Complex64, k0: f64, k_par: f64) -> Complex64 {
    let b = (eps * k0 * k0 - k_par * k_par).sqrt();
    if b.im < 0.0 || (b.im == 0.0 && b.re < 0.0) {
        -b
    } else {
        b
    }
}

/// Reflection coefficient for a wave in `media[0]` hitting the films
/// `media[1..n−1]` backed by the substrate `media[n−1]`.
pub fn reflection(media: &[Medium], k0: f64, k_par: f64, p_polarized: bool) -> Complex64 {
    let eta = |m: &Medium| {
        let b = beta(m.eps, k0, k_par);
        if p_polarized {
            b / m.eps
        } else {
            b
        }
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut mat = [[one, zero], [zero, one]];
    for film in &media[1..media.len() - 1] {
        let e = eta(film);
        let delta = beta(film.eps, k0, k_par) * film.thickness;
        let (c, s) = (delta.cos(), delta.sin());
        let layer = [[c, -i * s / e], [-i * e * s, c]];
        mat = [
            [
                mat[0][0] * layer[0][0] + mat[0][1] * layer[1][0],
                mat[0][0] * layer[0][1] + mat[0][1] * layer[1][1],
            ],
            [
                mat[1][0] * layer[0][0] + mat[1][1] * layer[1][0],
                mat[1][0] * layer[0][1] + mat[1][1] * layer[1][1],
            ],
        ];
    }
    let eta_in = eta(&media[0]);
    let eta_sub = eta(&media[media.len() - 1]);
    let b = mat[0][0] + mat[0][1] * eta_sub;
    let c = mat[1][0] + mat[1][1] * eta_sub;
    (eta_in * b - c) / (eta_in * b + c)
}
