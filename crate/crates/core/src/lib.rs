//! Atom-optics delta-kicked rotor near quantum resonance.

pub mod eclassical;
pub mod error;
pub mod model;
pub mod pendulum;
pub mod quantum;
pub mod rng;
pub mod scan;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
