//! Polar-code workbench: CA-polar and partitioned polar codes, SC / SCL /
//! SCL-flip / partitioned SCL-flip decoding, latency and CRC-collision models,
//! CDF-driven partition design and Monte-Carlo frame-error simulation.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod code;
pub mod decoders;
pub mod error;
pub mod partition_design;
pub mod sim;

pub use error::{Error, Result};
