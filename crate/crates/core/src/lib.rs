//! Numerical toolkit for tamed immersions: comparison geometry, sampled
//! charts, tamedness estimates, properness certificates, the distance-function
//! flow and radial spectral bounds.

pub mod comparison;
pub mod error;
pub mod expr;
pub mod flow;
pub mod immersion;
pub mod jet;
pub mod linalg;
pub mod oracle;
pub mod ode;
pub mod properness;
pub mod sampled;
pub mod spectral;
pub mod tamedness;

pub use error::{Error, Result};
