mod oracles;

use medfret::green::sphere::{mie_coefficients, SphereGeometry};
use medfret::media::PermittivityModel;
use medfret::Frequency;
use num_complex::Complex64;
use oracles::mie;

fn check(eps: Complex64, size: f64, tol: f64) {
    let freq = Frequency::reduced(1.0);
    let radius = size / freq.k0;
    let geometry = SphereGeometry::new(radius, PermittivityModel::VACUUM, PermittivityModel::constant(eps).unwrap()).unwrap();
    let reference = mie::coefficients(60, size, eps.sqrt());
    for (l, &(a, b)) in reference.iter().enumerate().skip(1) {
        let (bm, bn) = mie_coefficients(l, freq, &geometry).unwrap();
        let (ea, eb) = ((-bn - a).norm() / a.norm(), (-bm - b).norm() / b.norm());
        assert!(ea < tol && eb < tol, "eps={eps} x={size} l={l}: a err {ea:e}, b err {eb:e}");
    }
}

#[test]
fn lossless_spheres_match_textbook_coefficients() {
    for eps in [Complex64::new(2.25, 0.0), Complex64::new(6.0, 0.0), Complex64::new(1.5, 0.0)] {
        for size in [0.5, 1.0, 3.7, 8.0, 13.0] {
            check(eps, size, 1e-10);
        }
    }
}

#[test]
fn lossy_spheres_match_textbook_coefficients() {
    for eps in [Complex64::new(-4.0, 0.5), Complex64::new(-16.0, 0.6), Complex64::new(2.49, 0.3), Complex64::new(-1.2, 1e-3)] {
        for size in [0.5, 1.0, 3.7, 8.0, 13.0] {
            check(eps, size, 1e-10);
        }
    }
}

#[test]
fn size_parameter_at_zero_of_j0() {
    check(Complex64::new(2.25, 0.1), 4.0 * std::f64::consts::PI, 1e-10);
}

#[test]
fn nearly_index_matched_sphere() {
    // b_l ∝ (m² − 1) cancels in both formulations at high order.
    check(Complex64::new(1.1, 0.0), 0.5, 1e-8);
    check(Complex64::new(1.1, 0.0), 13.0, 1e-8);
}
