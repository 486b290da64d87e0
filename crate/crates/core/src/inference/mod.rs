//! Per-agent clause databases and resumable SLD resolution.

mod db;
mod resolver;
mod term;

pub use db::{ClauseDb, NotFound, StoredClause};
pub use resolver::{
    solve_all, BlockedLiteral, NoProperties, Polarity, ProofStep, ProofTree, PropertyRead, PropertyView, Resolver,
    SolveError, Solutions, Status,
};
pub use term::{mgu, unify, Bindings, Mark, Substitution, Term, VarId, VarNames};
