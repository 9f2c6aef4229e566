//! Scalar numerics shared by the spectral, bounds and schedule code.

mod golden;
mod hermite;
mod quad;

pub use golden::golden_section_minimize;
pub use hermite::MonotoneCubic;
pub use quad::{integrate, QuadError, QuadResult, QuadSettings};
