//! Single-ion qudit error correction with spin-cat codes.
//!
//! The crate simulates a logical qubit stored in the six-level `D5/2`
//! manifold of a trapped ion: encoding by an SU(2) rotation, Gaussian
//! magnetic dephasing, measurement-free correction through the motional
//! mode, maximum-likelihood tomography, and lifetime analysis.

pub mod analytics;
pub mod channels;
pub mod code;
pub mod correction;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod spinops;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
