pub mod codebook;
pub mod error;
pub mod harness;
pub mod lasso;
pub mod music;
pub mod numerics;
mod output;
pub mod pep;
pub mod scene;
pub mod signal;

pub use error::{Error, Result};
