//! Finite-model toolkit for mean dimensions of dynamical systems.
//!
//! A [`MetricSystem`] is a finite sample of a compact metric space together
//! with a self map. Everything else (separated and spanning counts, windowed
//! ball covers, the four dimension estimators, measure certificates) is
//! computed on top of the Bowen metrics `d_N` of such a system.

// `!(x > 0.0)` is how NaN gets rejected alongside the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod covers;
pub mod dimensions;
pub mod error;
pub mod measures;
pub mod metric;
pub mod scalar;
pub mod systems;

pub use error::{Error, Result};
pub use metric::{Ball, BowenScale, BowenView, Geometry, PointId, ProductMode};
pub use scalar::Scalar;

/// Metric system over `f64`, the precision every estimator runs at.
pub type MetricSystem = metric::MetricSystem<f64>;
/// Single-precision system, useful for large exploratory point clouds.
pub type MetricSystemF32 = metric::MetricSystem<f32>;
/// Comparison tolerance applied to every radius test.
pub const TOLERANCE: f64 = 1e-12;
