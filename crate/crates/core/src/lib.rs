pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod operators;
pub mod quat;
pub mod report;
pub mod splitting;
pub mod suites;

pub use error::{Error, Result};
pub use geometry::Vec3;
pub use quat::{ImaginaryUnit, Quaternion};
