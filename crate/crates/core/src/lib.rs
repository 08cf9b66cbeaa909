pub mod checkers;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod metrics;
pub mod ring;
pub mod rng;
pub mod statefile;

pub use error::{Error, Result};
