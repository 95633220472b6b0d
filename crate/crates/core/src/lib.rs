pub mod covmodel;
pub mod error;
pub mod experiment;
pub mod field;
pub mod kriging;
pub mod linalg;
mod quad;
pub mod responses;
pub mod rng;
pub mod simulate;
pub mod sparsity;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
