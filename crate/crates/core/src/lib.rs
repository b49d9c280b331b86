//! Simulation library for optical intelligent reflecting surfaces in
//! visible-light links: geometry and radiometry of mirror-array reflections,
//! channel coherence analysis, beam-steering codebooks, and a block-sampling
//! channel estimator, plus the named experiments the CLI exposes.

pub mod channel;
pub mod codebook;
pub mod coherence;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod scenario;

pub use error::{Error, Result};
