pub mod error;
pub mod eval;
pub mod linalg;
pub mod multiview;
pub mod problem;
pub mod scalar;
pub mod scf;
pub mod synth;
mod tridiag;

pub use error::{Error, Result};
pub use scalar::Scalar;
