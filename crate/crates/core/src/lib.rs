//! Exact arithmetic on finite real measures stored as piecewise-linear
//! quantile functions, the partial orders that compare them, shadow
//! projections, left-curtain martingale couplings, and Markov-composed
//! peacock discretizations.
//!
//! Everything is closed-form on the piecewise-linear representation: atoms
//! are flat quantile pieces, uniform blocks are sloped pieces. Measures are
//! immutable values and all operations are pure, so the whole crate is safe
//! for unrestricted concurrent use.

pub mod curtain;
pub mod json;
pub mod measure;
pub mod orders;
pub mod peacock;
pub mod rng;
pub mod shadow;

pub use curtain::{Coupling, CouplingSource, FiniteCoupling, ReducedSupport, UniformKernel};
pub use measure::{Measure, MeasureError, Moments, Segment, SpatialForm};
pub use orders::OrderRelation;
pub use peacock::{Partition, PathSet, Peacock, TransitionMatrix};
pub use shadow::{QuantileSet, ShadowError, ShadowTrace};

/// Absolute tolerance for mass comparisons; all test measures have masses of
/// order one.
pub const MASS_TOL: f64 = 1e-12;

/// Canonicalization merges quantile pieces whose values agree within this.
pub const MERGE_TOL: f64 = 1e-13;

/// Barycenter residual accepted when solving for a shadow interval.
pub const BARY_TOL: f64 = 1e-9;
