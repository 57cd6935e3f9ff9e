//! Occupation kernel methods for learning ODE vector fields from snapshot
//! trajectories, and for learning the coefficients of a quasilinear
//! first-order PDE from gridded samples.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below fix the scalar.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod datasets;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod kernels;
pub mod learner;
pub mod linalg;
pub mod model_io;
pub mod pde;
pub mod quadrature;
pub mod scalar;
pub mod tuning;

pub use datasets::{GeneratorConfig, SnapshotSeries, Split, System};
pub use error::{OckError, Result};
pub use inference::{PredictedTrajectory, VectorField};
pub use kernels::{FeatureMap, Kernel, KernelSpec};
pub use learner::{FitPath, OckModel, TrainingSet};
pub use linalg::Matrix;
pub use pde::{GridField, PdeModel};
pub use quadrature::Segment;
pub use scalar::Real;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Segment64 = Segment<f64>;
pub type Segment32 = Segment<f32>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type KernelSpec32 = KernelSpec<f32>;
pub type SnapshotSeries64 = SnapshotSeries<f64>;
pub type SnapshotSeries32 = SnapshotSeries<f32>;
pub type OckModel64 = OckModel<f64>;
pub type OckModel32 = OckModel<f32>;
pub type GridField64 = GridField<f64>;
pub type GridField32 = GridField<f32>;
pub type PdeModel64 = PdeModel<f64>;
pub type PdeModel32 = PdeModel<f32>;
