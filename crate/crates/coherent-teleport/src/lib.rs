//! Exact simulation of coherent-state teleportation channels on bosonic Fock space.

pub mod coherent;
pub mod config;
pub mod crosscheck;
pub mod error;
pub mod fock_ops;
pub mod mode_space;
pub mod model;
pub mod oracle;
pub mod ortho;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
