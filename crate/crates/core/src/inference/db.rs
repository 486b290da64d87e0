use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dsl::{self, Clause, Literal};

use super::term::{unify, Bindings, Term, VarNames};

/// A body literal compiled against clause-local variable slots.
#[derive(Debug, Clone)]
pub(crate) struct CompiledLit {
    pub term: Term,
    pub negated: bool,
    pub property: Option<Arc<str>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub head: Term,
    pub body: Vec<CompiledLit>,
    pub nvars: usize,
}

#[derive(Debug, Clone)]
pub struct StoredClause {
    pub clause: Clause,
    pub(crate) compiled: Compiled,
    /// Rendered source text, used in proof trees and explanations.
    pub text: Arc<str>,
    seq: u64,
}

pub(crate) fn compile_literal(lit: &Literal, names: &mut VarNames, bindings: &mut Bindings) -> CompiledLit {
    CompiledLit {
        term: names.import(&lit.atom, bindings),
        negated: lit.negated,
        property: lit.property_name().map(Arc::from),
    }
}

fn compile(clause: &Clause) -> Compiled {
    // Local slots start at 0; resolution offsets them into fresh space.
    let mut bindings = Bindings::new();
    let mut names = VarNames::default();
    let head = names.import(&clause.head, &mut bindings);
    let body = clause.body.iter().map(|l| compile_literal(l, &mut names, &mut bindings)).collect();
    Compiled { head, body, nvars: names.iter().count() }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no clause matches `{0}`")]
pub struct NotFound(pub String);

/// An agent's own Horn-clause database.
///
/// Clauses are grouped by predicate indicator and kept in assertion order
/// within a group. Every successful edit bumps `generation`.
#[derive(Debug, Clone, Default)]
pub struct ClauseDb {
    groups: BTreeMap<(String, usize), Vec<StoredClause>>,
    properties: Vec<String>,
    generation: u64,
    next_seq: u64,
}

impl ClauseDb {
    /// A database whose 0-arity body atoms naming one of `properties` are
    /// treated as property reads.
    pub fn with_properties<S: AsRef<str>>(properties: &[S]) -> ClauseDb {
        ClauseDb {
            properties: properties.iter().map(|p| p.as_ref().to_string()).collect(),
            ..ClauseDb::default()
        }
    }

    pub fn new() -> ClauseDb {
        ClauseDb::default()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn properties(&self) -> &[String] {
        &self.properties
    }

    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn assert_clause(&mut self, mut clause: Clause) {
        clause.mark_property_atoms(&self.properties);
        let compiled = compile(&clause);
        let text: Arc<str> = Arc::from(clause.to_string());
        let key = clause.key();
        self.next_seq += 1;
        self.groups.entry(key).or_default().push(StoredClause { clause, compiled, text, seq: self.next_seq });
        self.generation += 1;
    }

    /// Remove the first clause that unifies with `pattern`, head and body.
    /// A pattern body consisting of one variable matches any body.
    pub fn retract_clause(&mut self, pattern: &Clause) -> Result<Clause, NotFound> {
        let key = pattern.key();
        let group = self.groups.get_mut(&key).ok_or_else(|| NotFound(pattern.to_string()))?;
        let pattern_term = clause_as_term(pattern);
        let idx = group
            .iter()
            .position(|stored| {
                let mut bindings = Bindings::new();
                let mut names = VarNames::default();
                let p = names.import(&pattern_term, &mut bindings);
                let mut other = VarNames::default();
                let c = other.import(&clause_as_term(&stored.clause), &mut bindings);
                unify(&p, &c, &mut bindings)
            })
            .ok_or_else(|| NotFound(pattern.to_string()))?;
        let removed = group.remove(idx);
        if group.is_empty() {
            self.groups.remove(&key);
        }
        self.generation += 1;
        Ok(removed.clause)
    }

    pub(crate) fn group(&self, name: &str, arity: usize) -> Option<&[StoredClause]> {
        // BTreeMap lookup needs an owned key; predicates are few.
        self.groups.get(&(name.to_string(), arity)).map(Vec::as_slice)
    }

    pub fn has_predicate(&self, name: &str, arity: usize) -> bool {
        self.group(name, arity).is_some_and(|g| !g.is_empty())
    }

    /// All clauses in assertion order.
    pub fn clauses(&self) -> Vec<&Clause> {
        let mut all: Vec<&StoredClause> = self.groups.values().flatten().collect();
        all.sort_by_key(|c| c.seq);
        all.into_iter().map(|c| &c.clause).collect()
    }

    pub fn listing(&self) -> String {
        self.clauses().iter().map(|c| format!("{c}\n")).collect()
    }
}

/// `head :- body` as a single term: the body is a right-nested `','/2`
/// conjunction, `true` when empty, with negations as `not/1`.
fn clause_as_term(clause: &Clause) -> dsl::Term {
    fn lit(l: &Literal) -> dsl::Term {
        if l.negated {
            dsl::Term::compound("not", vec![l.atom.clone()])
        } else {
            l.atom.clone()
        }
    }
    let body = match clause.body.split_last() {
        None => dsl::Term::atom("true"),
        Some((last, init)) => init
            .iter()
            .rev()
            .fold(lit(last), |acc, l| dsl::Term::compound(",", vec![lit(l), acc])),
    };
    dsl::Term::compound(":-", vec![clause.head.clone(), body])
}
