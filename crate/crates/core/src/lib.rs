//! Simulation of the critical Gaussian multiplicative chaos of the planar
//! discrete Gaussian free field, and of the gauge-function machinery used to
//! describe its carrier.

pub mod bessel;
pub mod chaos;
pub mod concentric;
pub mod dst;
pub mod error;
pub mod gauge;
pub mod gff;
pub mod hausdorff;
pub mod lattice;
pub mod linalg;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
