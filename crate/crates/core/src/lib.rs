pub mod bitmatch;
pub mod encoding;
pub mod error;
pub mod genes;
pub mod negsel;
pub mod netsim;
pub mod pipeline;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
