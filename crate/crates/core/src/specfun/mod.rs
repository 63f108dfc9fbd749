//! Special functions needed by the layered and spherical Green tensors.
//!
//! * cylindrical Bessel functions `J_0`, `J_1`, `J_2` of real argument,
//! * spherical Bessel `j_l` and Hankel `h_l^(1)` of complex argument, with the
//!   Riccati derivative `[z f_l(z)]'`,
//! * Legendre polynomials `P_l` and their derivatives.

mod cylindrical;
mod legendre;
mod spherical;

pub use cylindrical::bessel_j;
pub use legendre::{legendre_p, legendre_p_deriv, legendre_sequence};
pub use spherical::{
    riccati_derivative, spherical_bessel_j, spherical_hankel_h1, RadialKind, ScaledBesselJ,
    ScaledHankel, MAX_ORDER,
};
