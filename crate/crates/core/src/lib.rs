//! Numerical and exact tools for complete minimal surfaces of finite total
//! curvature: Weierstrass immersions, index bounds, Morse index by spectral
//! exhaustion, and the weighted harmonic 1-forms behind the bounds.

pub mod complexfn;
pub mod error;
pub mod forms;
pub mod quad;
pub mod spectral;
pub mod surface;
pub mod topology;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
