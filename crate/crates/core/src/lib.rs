//! Mean-curvature flow and curvature-adaptedness verification in locally
//! symmetric model spaces.

pub mod ambient;
pub mod error;
pub mod flow;
pub mod immersion;
pub mod parallel;
pub mod tensor;

pub use error::{Error, Result};
