//! Special functions used by the engines: integer-order Bessel functions for
//! the kick operator, Jacobi elliptic functions and elliptic integrals for the
//! pendulum orbits, and Gauss–Legendre rules for the phase-space quadrature.

mod bessel;
mod elliptic;
mod gauss;

pub use bessel::bessel_j_orders;
pub use elliptic::{carlson_rf, ellip_f, ellip_k, jacobi_elliptic, Jacobi};
pub use gauss::GaussLegendre;
