//! Numerical engine for cut loci, split loci and Hamilton-Jacobi boundary
//! value problems on the classical low-dimensional test manifolds, plus the
//! conjugate-descending-curve machinery on canonical singularity models.

pub mod error;
pub mod numerics;

pub mod geometry;
pub mod flow;
pub mod conjugate;
pub mod hj;
pub mod split;
pub mod cdc;
pub mod svg;

pub use error::{CoreError, Result};
pub use nalgebra;
pub use geometry::{ChartedManifold, ManifoldSpec, MetricField, MetricKind, Vec2, Vec3};
