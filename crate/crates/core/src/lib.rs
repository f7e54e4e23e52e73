//! Numerical laboratory for skew-evolution semiflows on a base space of
//! generator translates.
//!
//! The crate builds two-parameter evolution cocycles from closed-form
//! log-magnitude laws, keeps every magnitude in log-space (gallery values
//! reach e^{5120} and beyond), and provides:
//!
//! * checkers and minimax fitters for exponential growth/decay bounds,
//! * certification and falsification of six dichotomy classes
//!   (uniform / Barreira-Valls / nonuniform, in exponential and polynomial
//!   flavors) on sampled grids,
//! * witness sequences with diverging violation margins,
//! * quadrature-backed verification of the integral characterization of
//!   exponential dichotomy,
//! * a truncated cosine-basis semigroup driven by the same base integrals,
//! * a gallery of reference instances with machine-readable reports.

pub mod base_space;
pub mod cocycles;
pub mod criteria;
pub mod dichotomy;
pub mod error;
pub mod expr;
pub mod gallery;
pub mod grid;
pub mod growth;
pub mod logspace;
mod minimax;
pub mod projectors;
pub mod report;
pub mod spectral;

pub use base_space::{BasePoint, GeneratorKind, GeneratorSpec, TimePair};
pub use cocycles::{DiagonalCocycle, SkewEvolution, StateVector};
pub use dichotomy::{Certificate, ClassParams, DichotomyClass, Verdict, Witness};
pub use error::{Error, Result};
pub use logspace::LogScalar;

/// Tool version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
