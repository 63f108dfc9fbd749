/// Cylindrical Bessel function of the first kind `J_n(x)` for `n ∈ {0, 1, 2}`
/// and real `x ≥ 0`.
///
/// Higher orders are not needed by the planar Green tensor and panic in debug
/// builds; in release they fall through to the general-order routine.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    debug_assert!(n <= 2, "only J_0, J_1 and J_2 are provided");
    match n {
        0 => libm::j0(x),
        1 => libm::j1(x),
        2 if x == 0.0 => 0.0,
        // Forward recurrence is stable for n = 2 once x is not tiny.
        2 if x > 1e-3 => 2.0 / x * libm::j1(x) - libm::j0(x),
        n => libm::jn(n as i32, x),
    }
}
