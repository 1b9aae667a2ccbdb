//! Anomalous edge detection on dynamic graphs with diffusion-guided
//! substructure sampling and an attention encoder.

pub mod diffusion;
pub mod encoding;
pub mod error;
pub mod graphstream;
pub mod neuralnet;
pub mod synth;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
