//! The two reference controller models shipped with the toolchain.

/// Self-organized aggregation: machine `AggregationFSM`.
pub const AGGREGATION: &str = include_str!("../models/aggregation.rcm");

/// Swarm taxis towards a beacon: machine `SwarmTaxisFSM`.
pub const TAXIS: &str = include_str!("../models/taxis.rcm");

pub const AGGREGATION_MACHINE: &str = "AggregationFSM";
pub const TAXIS_MACHINE: &str = "SwarmTaxisFSM";
