pub mod abscheme;
pub mod bounds;
pub mod ctsensor;
pub mod diqcodec;
pub mod discretize;
pub mod error;
pub mod harness;
pub mod matkernel;
pub mod rdsolver;
pub mod rng;

pub use error::{Error, Result};
