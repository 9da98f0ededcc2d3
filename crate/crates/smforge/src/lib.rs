//! File formats and commands of the `smforge` tool: IR documents, NDJSON
//! traces and scripts, scenario files, metrics CSV and diagnostics output.

pub mod commands;
pub mod diagnostics;
pub mod fsio;
pub mod ir;
pub mod metrics;
pub mod scenario;
pub mod trace;
