//! Numerical building blocks shared by the solver modules: adaptive
//! quadrature, an embedded Runge–Kutta integrator, monotone interpolation
//! and a couple of special functions.

pub mod interp;
pub mod ode;
pub mod quad;
pub mod special;

pub use interp::Pchip;
pub use quad::{exp_tail_integral, integrate_adaptive};
pub use special::{carlson_rd, unit_sphere_area};
