pub mod config;
pub mod error;
pub mod experiment;
pub mod invlearn;
pub mod mlp;
pub mod plantsim;
pub mod polylti;
pub mod strategy;

pub use error::{Error, Result};
