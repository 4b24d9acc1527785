pub mod error;
pub mod export;
pub mod fbm;
pub mod integrator;
pub mod liegroup;
pub mod malliavin;
pub mod quadrature;
pub mod rng;
pub mod signature;
pub mod stats;
pub mod tolerance;

pub use error::{Error, Result};
pub use tolerance::Tolerances;
