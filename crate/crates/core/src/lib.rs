//! Race timing for multi-sport competitions.
//!
//! A competition is described either in the `.et` text language ([`dsl`]) or
//! as a JSON exchange document produced by the visual builder ([`model`]).
//! Valid models are compiled into guarded-rule programs, one per measuring
//! place ([`compiler`]), and timing events are folded through those programs
//! by a deterministic replay engine ([`runtime`]). The [`simulator`] generates
//! seeded event logs and carries an independent counting oracle for results.

pub mod compiler;
pub mod dsl;
pub mod model;
pub mod runtime;
pub mod simulator;

#[cfg(feature = "strategies")]
pub mod strategies;

pub use compiler::{compile, disassemble, CompiledProgram};
pub use model::{CompetitionModel, NodeId, AgentId, NodeKind};
pub use runtime::{replay, RaceConfig, RaceState, ResultsTable, TimingEvent};
pub use simulator::{results_oracle, simulate, EventLog, SimConfig};
