//! Design and simulation toolkit for PON-based fog-computing interconnects.
//!
//! The toolkit builds the cellular AWGR architecture (fog units as PON cells
//! of rack-sized PON groups behind one SDN-enabled OLT), computes provably
//! minimal wavelength routing maps for full any-to-any connectivity, runs a
//! deterministic discrete-event simulation of the OLT grant protocol, and
//! quantifies power savings against an equally sized spine-and-leaf fabric.
//!
//! Modules:
//! - [`topology`]: the fog architecture, the switched reference fabric, path
//!   queries and structural validation;
//! - [`rwa`]: routing/wavelength assignment solver, verifier, the cyclic
//!   closed-form construction and a brute-force optimality oracle;
//! - [`power`]: itemized power accounting and savings sweeps, generic over
//!   the float scalar;
//! - [`sim`]: the control-plane discrete-event simulator with per-channel
//!   FIFO contention.

pub mod power;
pub mod rwa;
pub mod sim;
pub mod topology;

pub use rwa::RoutingMap;
pub use sim::{FlowRequest, SimConfig, SimTrace};
pub use topology::{FogTopology, GroupId, ServerId, SpineLeafTopology};

/// Power parameters at the default `f64` precision.
pub type PowerParams = power::PowerParams<f64>;
/// Itemized power report at the default `f64` precision.
pub type PowerBreakdown = power::PowerBreakdown<f64>;
/// Sweep series at the default `f64` precision.
pub type SweepSeries = power::SweepSeries<f64>;
