//! Deterministic discrete-event simulator of an auction-driven,
//! self-organizing cloud.
//!
//! A run proceeds in four stages, each in its own module:
//!
//! 1. [`topology`] bootstraps the core/periphery contact lists.
//! 2. [`engine`] initializes core-server state and runs the event loop.
//! 3. [`workload`] supplies the lazy request stream; [`market`] runs one
//!    coalition-formation auction per request.
//! 4. [`metrics`] bins success rates and writes the report files.
//!
//! [`harness`] ties the stages together behind named presets.

pub mod engine;
pub mod error;
pub mod harness;
pub mod histogram;
pub mod market;
pub mod metrics;
pub mod rng;
pub mod topology;
pub mod workload;

pub use error::{Error, Result};
