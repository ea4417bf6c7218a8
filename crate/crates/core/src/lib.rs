pub mod chern;
pub mod cli;
pub mod deform;
pub mod error;
pub mod linalg;
pub mod frames;
pub mod magnetics;
pub mod model;
pub mod operators;
pub mod pointsets;
pub mod spectral;

pub use error::{Error, Result};
