pub mod adversary;
pub mod calibration;
pub mod channel;
pub mod derandomize;
pub mod engine;
pub mod error;
pub mod harness;
pub mod lasvegas;
pub mod proto;
pub mod rng;

pub use error::{Error, Result};
