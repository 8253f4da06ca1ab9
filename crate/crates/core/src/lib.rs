//! Exact information measures, typicality machinery, achievable
//! rate-distortion regions for two-encoder lossy source coding, and a
//! desk-scale simulator of the two-layer finite-blocklength construction.
//!
//! Logarithms are base 2 throughout; `0 log 0 = 0`.

pub mod boho;
pub mod checks;
pub mod components;
mod error;
pub mod info;
pub mod regions;
pub mod rng;
pub mod sim;
pub mod source;
pub mod text;
pub mod typicality;

pub use error::{Error, Result};
pub use info::{Alphabet, CondDist, JointDist};
pub use source::{DistortionTable, DistributedSource, DistributedSourceSi};
