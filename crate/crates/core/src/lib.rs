//! Fault-tolerant surface-17 error correction on a linear trapped-ion chain.
//!
//! The crate covers the code itself ([`code`]), the compiled
//! Mølmer–Sørensen syndrome-extraction round and Pauli-frame propagation
//! ([`circuit`]), the ion-trap error channels ([`noise`]), the adaptive
//! lookup and matching-table protocols ([`decoder`]), chain physics and
//! scheduling ([`layout`]), and logical error rate estimation ([`sampler`]).

pub mod circuit;
pub mod code;
pub mod decoder;
pub mod error;
pub mod layout;
pub mod noise;
pub mod pauli;
pub mod sampler;

pub use circuit::{build_surface17_circuit, propagate, run_round, GateKind, TimedCircuit, TimedGate};
pub use code::{build_lookup_tables, is_logical_failure, syndrome_of, DataErrorVector, LookupTable, Syndrome};
pub use decoder::{CycleSimulator, MatchingTable, Protocol};
pub use error::{Error, Result};
pub use layout::{ChainLayout, PrintedLayout, TrapParams};
pub use noise::{NoiseModel, NoiseParams};
pub use pauli::{LocalPauli, Pauli, PauliFrame};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use sampler::{EstimatorConfig, Estimate, SubsetIndex, SubsetResult};
