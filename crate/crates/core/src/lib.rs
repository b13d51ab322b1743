//! Finite-dimensional K-frames, K-fusion frames, their duals and multipliers.
//!
//! Everything is generic over the real precision type via [`scalar::Scalar`]
//! (`f32` or `f64`); matrix entries are complex, with real operators as the
//! degenerate all-real case. Concrete `f64` aliases live at the crate root.

pub mod error;
pub mod factor;
pub mod harness;
pub mod kframes;
pub mod kfusion;
pub mod matrix;
pub mod multipliers;
pub mod numerics;
pub mod rng;
pub mod scalar;
pub mod spaces;

pub use error::{Error, Result};
pub use matrix::{Field, MatrixOperator};
pub use scalar::Scalar;

/// Default-precision aliases used by the CLI, the harness and most callers.
pub type Mat64 = MatrixOperator<f64>;
pub type Tolerances64 = numerics::Tolerances<f64>;
pub type RangedOperator64 = numerics::RangedOperator<f64>;
pub type Subspace64 = spaces::Subspace<f64>;
pub type WeightedFamily64 = spaces::WeightedFamily<f64>;
pub type VectorFamily64 = spaces::VectorFamily<f64>;
pub type Instance64 = spaces::Instance<f64>;

/// Single-precision aliases for callers that trade accuracy for size; the
/// default tolerances are tuned for `f64` and need loosening at `f32`.
pub type Mat32 = MatrixOperator<f32>;
pub type Tolerances32 = numerics::Tolerances<f32>;
