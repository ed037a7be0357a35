//! Constant-depth parallel query evaluation on a simulated CRCW PRAM.

pub mod error;
pub mod kernel;
pub mod primitives;
pub mod relstore;
pub mod array_ops;
pub mod dbops;
pub mod query;
pub mod oracle;
pub mod run;
pub mod verify;
pub mod workloads;
pub mod cli;

pub use error::{Error, Result};
pub use kernel::{Arr, Machine, MachineConfig, Metrics, WriteMode};
