//! Link-level Monte-Carlo simulator for cooperative relaying through
//! reconfigurable intelligent surfaces, with neural phase control at the
//! relays and neural symbol detection at the destination.

pub mod channel;
pub mod complexity;
pub mod datasets;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod cli;
pub mod harness;
pub mod modem;
pub mod neural;
pub mod rislink;

pub use error::{Error, Result};
