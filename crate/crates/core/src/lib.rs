pub mod budget;
pub mod config;
pub mod error;
pub mod lattice;
pub mod numerics;
pub mod output;
pub mod pulse;
pub mod removal;
pub mod speedup;
pub mod stark;
pub mod transfer;
pub mod units;

pub use error::{Error, ErrorClass, Result};
