//! Convex integration on flat tori: a numerical Nash–Kuiper iteration for
//! isometric immersions of the n-torus into R^{2n}, with the decomposition
//! lemmas, per-step metric increments and exponent arithmetic exposed for
//! testing.
//!
//! Everything is generic over the scalar type (`f32` or `f64`, see
//! [`Real`]); the aliases at the crate root fix it to `f64`.

pub mod audit;
pub mod decomp;
pub mod error;
pub mod fieldlab;
pub mod frames;
pub mod linalg;
pub mod profiles;
pub mod scalar;
pub mod stage;
pub mod symcore;

pub use error::{Category, Error, Result};
pub use scalar::Real;

pub type SymMatrix = symcore::SymMatrix<f64>;
pub type PrimitiveBasis = symcore::PrimitiveBasis<f64>;
pub type GridDomain = fieldlab::GridDomain<f64>;
pub type Field = fieldlab::Field<f64>;
pub type ImmersionField = fieldlab::ImmersionField<f64>;
