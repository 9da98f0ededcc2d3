//! Core of the smforge toolchain.
//!
//! A small textual language for robot-controller state machines (interfaces,
//! machines with clocks and timed guards, operations with contracts), a
//! name/type analyzer, a compiler to an index-addressed transition table, a
//! deterministic cycle interpreter, and a 2D differential-drive swarm
//! simulator with the two reference controllers' platform adapters.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the operating system live in the `smforge` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analyzer;
pub mod compiler;
pub mod corpus;
pub mod diag;
pub mod dsl;
pub mod fuzz;
pub mod runtime;
pub mod sim;
pub mod span;
pub mod value;

pub use analyzer::{analyze, check, check_operation_contracts, ResolvedModel};
pub use compiler::{compile, CompiledMachine};
pub use diag::{Diagnostic, Severity};
pub use dsl::{parse, render, ModelUnit};
pub use runtime::{ExecutionContext, Platform, RuntimeConfig, TraceRecord};
pub use span::Span;
pub use value::{Type, Value};

/// Tool version, stamped into IR documents and metrics headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
