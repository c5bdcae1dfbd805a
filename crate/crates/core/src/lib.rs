pub mod channel;
pub mod engine;
pub mod error;
pub mod exact;
pub mod fit;
pub mod gates;
pub mod noise;
pub mod rng;
pub mod wire;

pub use error::{Error, Result};
