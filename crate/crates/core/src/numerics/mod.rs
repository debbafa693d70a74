//! Scalar numeric kernels: bracketed root finding, adaptive quadrature and
//! explicit Runge-Kutta stepping.

mod ode;
mod quad;
mod root;

pub use ode::{integrate_ode, OdeConfig, StepControl, Trajectory};
pub use quad::{integrate_1d, QuadConfig};
pub use root::{expand_bracket, find_root, RootConfig};
