//! Periodic grid fields: sampling, differentiation, mollification, pullback
//! metrics and norm estimates.
//!
//! The box is treated as a flat torus, so every operation is a periodic one.

mod field;
mod grid;
mod immersion;
mod mollify;
pub mod norms;
pub mod snapshot;
mod spectral;

pub use field::{Field, MetricField, ScalarField, VectorField};
pub use grid::GridDomain;
pub use immersion::{deficit, pullback_metric, ImmersionField};
pub use mollify::{kernel, mollify};
pub use norms::{holder_seminorm, holder_seminorm_order, metric_sup, norm, seminorm, sup_norm, MatrixNorm};
pub use spectral::{differentiate, gradient, integrate_axis, Scheme};
