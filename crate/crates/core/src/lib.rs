pub mod classify;
pub mod cli;
pub mod config;
pub mod contourlet;
pub mod dataio;
pub mod error;
pub mod features;
pub mod gaselect;
pub mod geometry;
pub mod normalize;
pub mod pipeline;
pub mod segment;
pub mod store;

pub use error::{IrisError, Result};
