//! Radial ground states of −Δu + εu − u^{p−1} + u^{q−1} = 0 on ℝᴺ.

pub mod error;
pub mod ode_core;

pub use error::{Error, Result};
pub mod quadrature;
pub mod shooting;
pub mod functionals;
pub mod emden_fowler;
pub mod rescaling;
