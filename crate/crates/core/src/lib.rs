//! Pseudospectral laboratory for the fractional Helmholtz operator
//! `(-Δ)^s - λ` on a periodic box.

pub mod dual;
pub mod error;
pub mod estimates;
pub mod exponents;
pub mod fit;
pub mod fixed_point;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod resolvent;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid, Space};
pub use resolvent::{CutoffSpec, EpsSequence, Extrapolation, ResolventParams};
pub use scalar::Real;

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type Field64 = ComplexField<f64>;
pub type Field32 = ComplexField<f32>;
pub type Params64 = ResolventParams<f64>;
