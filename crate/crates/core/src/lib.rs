//! LEO constellation simulator for comparing centralized, distributed and
//! federated security-AI architectures.
//!
//! - [`orbits`]: Walker-delta geometry and ground-station visibility.
//! - [`topology`]: +Grid ISL snapshots, ground links, shortest paths, RTT.
//! - [`archmodel`]: inference latency, round communication cost, telemetry exposure.
//! - [`fedsim`]: centralized vs. FedAvg training on a simulated clock.
//! - [`harness`]: JSON scenarios, CSV/JSON/SVG outputs, and the CLI plumbing.

pub mod archmodel;
pub mod error;
pub mod fedsim;
pub mod harness;
pub mod orbits;
pub mod topology;

pub use error::{Error, Result};

/// Version string recorded in every run summary.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
