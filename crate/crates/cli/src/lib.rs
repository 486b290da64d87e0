//! Pieces of the `iag` binary that are worth testing on their own: the
//! REPL's text syntax and the human-readable renderings.

pub mod repl;
pub mod render;
