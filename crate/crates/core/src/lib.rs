//! Intentional agents: declarative rules and tendency-annotated actions,
//! run by a resumable inference engine and a qualitative action-selection
//! solver inside a deterministic, live-editable simulation.

pub mod dsl;
pub mod inference;
pub mod solver;
pub mod runtime;
pub mod world;
