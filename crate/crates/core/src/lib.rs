//! Numerical toolkit for weak Lebesgue and Wiener-amalgam spaces over the
//! real line with a non-doubling Radon measure: measures and partitions,
//! block and amalgam norms, fractional maximal and potential operators,
//! Muckenhoupt-type weight constants, a midpoint covering selection, and a
//! scenario harness that checks weighted inequalities empirically.

pub mod cli;
pub mod covering;
pub mod error;
pub mod exponent;
pub mod function;
pub mod harness;
pub mod measure;
pub mod norms;
pub mod operators;
pub mod quad;
pub mod weights;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use function::{FunctionShape, FunctionSpec, Monotone, Piece, RealFunction, Support};
pub use measure::{growth_constant, integrate, make_measure, partition, IntervalRC, MeasureSpec, Partition, RadonMeasure};
