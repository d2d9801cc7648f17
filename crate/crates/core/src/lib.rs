pub mod bench;
pub mod config;
pub mod entropy;
pub mod error;
pub mod fixedpoint;
pub mod generator;
pub mod lfsr;
pub mod logistic;
pub mod pendulum;
pub mod stats;

pub use error::{Error, Result};
