//! Resumable SLD resolution with negation as failure.
//!
//! The proof state lives entirely in [`Resolver`]: a persistent goal list, a
//! binding trail and a choice-point stack. [`Resolver::solve_step`] performs
//! a bounded number of steps and returns, so an agent's reasoning can be
//! interleaved with everything else in the simulation. One step is one
//! clause selection, one builtin call or one backtrack.
//!
//! Property reads go through a [`PropertyView`] at the moment the literal is
//! selected. A view may answer [`PropertyRead::Stale`], in which case the
//! resolver stops with [`Status::NeedsPerception`] without consuming the
//! literal; the caller refreshes the property and resumes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dsl::{self, Goal, Value};

use super::db::{compile_literal, ClauseDb, CompiledLit};
use super::term::{unify, Bindings, Mark, Term, VarId, VarNames};

/// Result of reading a property from inside a proof.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertyRead {
    Value(Value),
    /// A perception providing this property has to run before it is read.
    Stale,
    Unknown,
}

/// Read-only access to an agent's properties.
pub trait PropertyView {
    fn read(&self, name: &str) -> PropertyRead;
}

impl PropertyView for BTreeMap<String, Value> {
    fn read(&self, name: &str) -> PropertyRead {
        self.get(name).cloned().map_or(PropertyRead::Unknown, PropertyRead::Value)
    }
}

impl PropertyView for HashMap<String, Value> {
    fn read(&self, name: &str) -> PropertyRead {
        self.get(name).cloned().map_or(PropertyRead::Unknown, PropertyRead::Value)
    }
}

/// No properties at all.
pub struct NoProperties;

impl PropertyView for NoProperties {
    fn read(&self, _: &str) -> PropertyRead {
        PropertyRead::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Running,
    Suspended,
    NeedsPerception { property: String },
    Succeeded,
    Failed,
}

impl Status {
    pub fn is_finished(&self) -> bool {
        matches!(self, Status::Succeeded | Status::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    RequiredTrue,
    RequiredFalse,
}

/// A property-atom whose current truth value made a proof branch fail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockedLiteral {
    pub property: String,
    pub polarity: Polarity,
    /// The rule whose body contained the literal, if any.
    pub clause: Option<String>,
}

impl BlockedLiteral {
    /// The literal as written: `danger` or `not(danger)`.
    pub fn literal(&self) -> String {
        match self.polarity {
            Polarity::RequiredTrue => self.property.clone(),
            Polarity::RequiredFalse => format!("not({})", self.property),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProofStep {
    Clause { clause: String },
    Builtin { name: String },
    Property { name: String },
    Negation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTree {
    pub literal: String,
    pub step: ProofStep,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    /// Pre-order walk.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a ProofTree)) {
        visit(self);
        for c in &self.children {
            c.walk(visit);
        }
    }

    fn render(&self, depth: usize, out: &mut String) {
        let via = match &self.step {
            ProofStep::Clause { clause } => format!("by {clause}"),
            ProofStep::Builtin { name } => format!("builtin {name}"),
            ProofStep::Property { name } => format!("property {name} is true"),
            ProofStep::Negation => "no proof exists".to_string(),
        };
        out.push_str(&format!("{}{}  [{via}]\n", "  ".repeat(depth), self.literal));
        for c in &self.children {
            c.render(depth + 1, out);
        }
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(0, &mut s);
        f.write_str(s.trim_end())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("clause database changed since the proof started (generation {started} -> {now})")]
    StaleDb { started: u64, now: u64 },
    #[error("step budget must be at least 1")]
    ZeroBudget,
    #[error("resolver is already finished")]
    Finished,
    #[error("property `{0}` needs a perception before it can be read")]
    PerceptionRequired(String),
}

#[derive(Debug, Clone)]
struct Lit {
    term: Term,
    negated: bool,
    property: Option<Arc<str>>,
}

impl From<CompiledLit> for Lit {
    fn from(c: CompiledLit) -> Lit {
        Lit { term: c.term, negated: c.negated, property: c.property }
    }
}

#[derive(Debug, Clone)]
enum Pending {
    Call { lit: Lit, parent: Option<usize>, depth: u32 },
    /// Reached once the inner proof of the negation at `barrier` succeeds.
    NafSucceeded { barrier: usize },
}

#[derive(Debug)]
struct GoalNode {
    goal: Pending,
    next: GoalList,
}

type GoalList = Option<Arc<GoalNode>>;

fn cons(goal: Pending, next: GoalList) -> GoalList {
    Some(Arc::new(GoalNode { goal, next }))
}

#[derive(Debug, Clone)]
enum ChoiceKind {
    Clauses { goal: Term, key: (Arc<str>, usize), next: usize, parent: Option<usize>, depth: u32 },
    NotBarrier { lit: Lit, parent: Option<usize>, depth: u32 },
}

#[derive(Debug, Clone)]
struct ChoicePoint {
    kind: ChoiceKind,
    /// Goals remaining after the one this choice point was created for.
    cont: GoalList,
    mark: Mark,
    nodes: usize,
}

#[derive(Debug, Clone)]
enum NodeVia {
    Clause(Arc<str>),
    Builtin(&'static str),
    Property(Arc<str>),
    Negation,
}

#[derive(Debug, Clone)]
struct Node {
    parent: Option<usize>,
    term: Term,
    negated: bool,
    via: NodeVia,
    depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Forward,
    Backtrack,
}

enum Tick {
    Continue,
    Pause(String),
    Done,
}

/// Suspended or running proof state for one query against one database.
#[derive(Debug, Clone)]
pub struct Resolver {
    generation: u64,
    bindings: Bindings,
    query: VarNames,
    goals: GoalList,
    choices: Vec<ChoicePoint>,
    mode: Mode,
    status: Status,
    steps_used: u64,
    blocked: Vec<BlockedLiteral>,
    nodes: Vec<Node>,
    warnings: Vec<String>,
    solutions: usize,
}

impl Resolver {
    /// Prepare a proof of `goal`. No property is read until the first step.
    pub fn start(db: &ClauseDb, goal: &Goal) -> Resolver {
        let mut bindings = Bindings::new();
        let mut query = VarNames::default();
        let lits: Vec<Lit> = goal
            .iter()
            .map(|l| {
                let mut l = l.clone();
                l.mark_property_atoms(db.properties());
                compile_literal(&l, &mut query, &mut bindings).into()
            })
            .collect();
        let goals = lits
            .into_iter()
            .rev()
            .fold(None, |acc, lit| cons(Pending::Call { lit, parent: None, depth: 0 }, acc));
        let status = if goals.is_none() { Status::Succeeded } else { Status::Running };
        Resolver {
            generation: db.generation(),
            bindings,
            query,
            goals,
            choices: Vec::new(),
            mode: Mode::Forward,
            solutions: usize::from(status == Status::Succeeded),
            status,
            steps_used: 0,
            blocked: Vec::new(),
            nodes: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn steps_used(&self) -> u64 {
        self.steps_used
    }

    pub fn blocked(&self) -> &[BlockedLiteral] {
        &self.blocked
    }

    /// Non-fatal notes: unknown predicates, non-ground negations.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Run at most `budget` steps.
    pub fn solve_step(&mut self, db: &ClauseDb, props: &dyn PropertyView, budget: u64) -> Result<&Status, SolveError> {
        if db.generation() != self.generation {
            return Err(SolveError::StaleDb { started: self.generation, now: db.generation() });
        }
        if budget == 0 {
            return Err(SolveError::ZeroBudget);
        }
        if self.status.is_finished() {
            return Ok(&self.status);
        }
        self.status = Status::Running;
        let limit = self.steps_used.saturating_add(budget);
        while self.steps_used < limit {
            match self.tick(db, props) {
                Tick::Continue => {}
                Tick::Pause(property) => {
                    self.status = Status::NeedsPerception { property };
                    return Ok(&self.status);
                }
                Tick::Done => return Ok(&self.status),
            }
        }
        // A proof whose last step emptied the goal list is finished even if
        // the budget ran out on that very step.
        if self.mode == Mode::Forward && self.goals.is_none() {
            self.succeed();
        } else if self.mode == Mode::Backtrack && self.choices.is_empty() {
            self.status = Status::Failed;
        } else {
            self.status = Status::Suspended;
        }
        Ok(&self.status)
    }

    /// After a success, arrange for the next step to look for another one.
    pub fn next_solution(&mut self) -> Result<(), SolveError> {
        match self.status {
            Status::Succeeded => {
                self.mode = Mode::Backtrack;
                self.status = if self.choices.is_empty() { Status::Failed } else { Status::Running };
                Ok(())
            }
            Status::Failed => Err(SolveError::Finished),
            _ => Ok(()),
        }
    }

    /// Number of successes reached so far.
    pub fn solutions_found(&self) -> usize {
        self.solutions
    }

    /// Bindings of the query variables in the current solution.
    pub fn answer(&self) -> BTreeMap<String, dsl::Term> {
        let name = |v: VarId| {
            self.query
                .iter()
                .find(|(_, w)| *w == v)
                .map(|(n, _)| n.to_string())
                .unwrap_or_else(|| format!("_G{v}"))
        };
        self.query
            .iter()
            .filter(|(n, _)| !n.starts_with('_'))
            .map(|(n, v)| (n.to_string(), self.bindings.export(&Term::Var(v), &name)))
            .collect()
    }

    /// Proof of the current solution, one tree per query literal.
    pub fn proof(&self) -> Vec<ProofTree> {
        if self.status != Status::Succeeded {
            return Vec::new();
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        let mut roots = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            match n.parent {
                Some(p) => children[p].push(i),
                None => roots.push(i),
            }
        }
        roots.into_iter().map(|r| self.build_tree(r, &children)).collect()
    }

    fn build_tree(&self, i: usize, children: &[Vec<usize>]) -> ProofTree {
        let n = &self.nodes[i];
        let term = self.bindings.resolve(&n.term).to_string();
        let literal = if n.negated { format!("not({term})") } else { term };
        let step = match &n.via {
            NodeVia::Clause(text) => ProofStep::Clause { clause: text.to_string() },
            NodeVia::Builtin(name) => ProofStep::Builtin { name: name.to_string() },
            NodeVia::Property(name) => ProofStep::Property { name: name.to_string() },
            NodeVia::Negation => ProofStep::Negation,
        };
        ProofTree { literal, step, children: children[i].iter().map(|c| self.build_tree(*c, children)).collect() }
    }

    /// Predicate indicators of every positive literal proven by a clause in
    /// the current solution, in proof order.
    pub fn proven_atoms(&self) -> Vec<(String, usize)> {
        if self.status != Status::Succeeded {
            return Vec::new();
        }
        self.nodes
            .iter()
            .filter(|n| !n.negated && matches!(n.via, NodeVia::Clause(_)))
            .filter_map(|n| self.bindings.deref(&n.term).functor().map(|(f, a)| (f.to_string(), a)))
            .collect()
    }

    /// Clause used for the first query literal of the current solution.
    pub fn root_clause(&self) -> Option<String> {
        if self.status != Status::Succeeded {
            return None;
        }
        self.nodes.iter().find(|n| n.parent.is_none()).and_then(|n| match &n.via {
            NodeVia::Clause(text) => Some(text.to_string()),
            _ => None,
        })
    }

    // ---- machinery -------------------------------------------------------

    fn succeed(&mut self) {
        self.status = Status::Succeeded;
        self.solutions += 1;
    }

    fn tick(&mut self, db: &ClauseDb, props: &dyn PropertyView) -> Tick {
        match self.mode {
            Mode::Backtrack => self.backtrack(db),
            Mode::Forward => {
                let Some(head) = self.goals.clone() else {
                    self.succeed();
                    return Tick::Done;
                };
                match &head.goal {
                    Pending::Call { lit, parent, depth } => {
                        let (lit, parent, depth) = (lit.clone(), *parent, *depth);
                        self.call(db, props, lit, parent, depth, head.next.clone())
                    }
                    Pending::NafSucceeded { barrier } => {
                        self.steps_used += 1;
                        self.negation_failed(*barrier);
                        Tick::Continue
                    }
                }
            }
        }
    }

    fn backtrack(&mut self, db: &ClauseDb) -> Tick {
        let Some(cp) = self.choices.last_mut() else {
            self.status = Status::Failed;
            return Tick::Done;
        };
        self.steps_used += 1;
        match &mut cp.kind {
            ChoiceKind::Clauses { goal, key, next, parent, depth } => {
                let idx = *next;
                *next += 1;
                let (goal, key, parent, depth) = (goal.clone(), key.clone(), *parent, *depth);
                let (cont, mark, nodes) = (cp.cont.clone(), cp.mark, cp.nodes);
                let remaining = db.group(&key.0, key.1).map_or(0, <[_]>::len);
                if idx + 1 >= remaining {
                    self.choices.pop();
                }
                self.bindings.undo(mark);
                self.nodes.truncate(nodes);
                if idx < remaining {
                    self.try_clause(db, &goal, &key, idx, parent, depth, cont);
                }
            }
            ChoiceKind::NotBarrier { lit, parent, depth } => {
                // Inner proof exhausted without success: the negation holds.
                let (lit, parent, depth) = (lit.clone(), *parent, *depth);
                let cp = self.choices.pop().expect("choice point present");
                self.bindings.undo(cp.mark);
                self.nodes.truncate(cp.nodes);
                self.nodes.push(Node { parent, term: lit.term, negated: true, via: NodeVia::Negation, depth });
                self.goals = cp.cont;
                self.mode = Mode::Forward;
            }
        }
        Tick::Continue
    }

    #[allow(clippy::too_many_arguments)]
    fn try_clause(
        &mut self,
        db: &ClauseDb,
        goal: &Term,
        key: &(Arc<str>, usize),
        idx: usize,
        parent: Option<usize>,
        depth: u32,
        cont: GoalList,
    ) {
        let Some(stored) = db.group(&key.0, key.1).and_then(|g| g.get(idx)) else {
            self.mode = Mode::Backtrack;
            return;
        };
        let c = &stored.compiled;
        let base = self.bindings.fresh_block(c.nvars);
        let head = c.head.offset(base);
        if !unify(goal, &head, &mut self.bindings) {
            self.mode = Mode::Backtrack;
            return;
        }
        let node = self.nodes.len();
        self.nodes.push(Node {
            parent,
            term: goal.clone(),
            negated: false,
            via: NodeVia::Clause(stored.text.clone()),
            depth,
        });
        self.goals = c.body.iter().rev().fold(cont, |acc, l| {
            let lit = Lit { term: l.term.offset(base), negated: l.negated, property: l.property.clone() };
            cons(Pending::Call { lit, parent: Some(node), depth }, acc)
        });
        self.mode = Mode::Forward;
    }

    fn call(
        &mut self,
        db: &ClauseDb,
        props: &dyn PropertyView,
        lit: Lit,
        parent: Option<usize>,
        depth: u32,
        cont: GoalList,
    ) -> Tick {
        // Property-atoms: `p` means getProperty(p, true).
        if let Some(name) = &lit.property {
            let value = match props.read(name) {
                PropertyRead::Stale => return Tick::Pause(name.to_string()),
                PropertyRead::Value(v) => Some(v),
                PropertyRead::Unknown => None,
            };
            self.steps_used += 1;
            let holds = value == Some(Value::Bool(true));
            if holds != lit.negated {
                let via = if lit.negated { NodeVia::Negation } else { NodeVia::Property(name.clone()) };
                self.nodes.push(Node { parent, term: lit.term, negated: lit.negated, via, depth });
                self.goals = cont;
            } else {
                if depth.is_multiple_of(2) {
                    let polarity = if lit.negated { Polarity::RequiredFalse } else { Polarity::RequiredTrue };
                    self.block(name, polarity, parent);
                }
                self.mode = Mode::Backtrack;
            }
            return Tick::Continue;
        }

        let term = self.bindings.deref(&lit.term);
        if lit.negated {
            self.steps_used += 1;
            if !self.bindings.is_ground(&term) {
                self.warnings.push(format!(
                    "not({}) called with unbound variables",
                    self.bindings.resolve(&term)
                ));
            }
            self.choices.push(ChoicePoint {
                kind: ChoiceKind::NotBarrier { lit: Lit { term: term.clone(), ..lit }, parent, depth },
                cont,
                mark: self.bindings.mark(),
                nodes: self.nodes.len(),
            });
            let barrier = self.choices.len() - 1;
            let inner = Lit { term, negated: false, property: None };
            self.goals = cons(
                Pending::Call { lit: inner, parent: None, depth: depth + 1 },
                cons(Pending::NafSucceeded { barrier }, None),
            );
            return Tick::Continue;
        }

        let Some((name, arity)) = term.functor().map(|(f, a)| (f.to_string(), a)) else {
            self.steps_used += 1;
            self.warnings.push(format!("goal `{}` is not callable", self.bindings.resolve(&term)));
            self.mode = Mode::Backtrack;
            return Tick::Continue;
        };

        if let Some(result) = self.builtin(props, &name, &term) {
            return match result {
                Err(property) => Tick::Pause(property),
                Ok(true) => {
                    self.steps_used += 1;
                    let via = NodeVia::Builtin(builtin_name(&name));
                    self.nodes.push(Node { parent, term, negated: false, via, depth });
                    self.goals = cont;
                    Tick::Continue
                }
                Ok(false) => {
                    self.steps_used += 1;
                    self.mode = Mode::Backtrack;
                    Tick::Continue
                }
            };
        }

        self.steps_used += 1;
        let count = db.group(&name, arity).map_or(0, <[_]>::len);
        if count == 0 {
            let note = format!("unknown predicate {name}/{arity}");
            if !self.warnings.contains(&note) {
                self.warnings.push(note);
            }
            self.mode = Mode::Backtrack;
            return Tick::Continue;
        }
        let key: (Arc<str>, usize) = (Arc::from(name.as_str()), arity);
        if count > 1 {
            self.choices.push(ChoicePoint {
                kind: ChoiceKind::Clauses { goal: term.clone(), key: key.clone(), next: 1, parent, depth },
                cont: cont.clone(),
                mark: self.bindings.mark(),
                nodes: self.nodes.len(),
            });
        }
        self.try_clause(db, &term, &key, 0, parent, depth, cont);
        Tick::Continue
    }

    /// `Some(Ok(success))` for builtins, `Some(Err(p))` when property `p` must
    /// be perceived first, `None` when `name` is not a builtin.
    fn builtin(&mut self, props: &dyn PropertyView, name: &str, term: &Term) -> Option<Result<bool, String>> {
        let args: Vec<Term> = match term {
            Term::Compound(_, args) => args.iter().map(|a| self.bindings.deref(a)).collect(),
            _ => Vec::new(),
        };
        let ok = match (name, args.as_slice()) {
            ("true", []) => true,
            ("fail", []) | ("false", []) => false,
            ("getProperty", [prop, value]) => {
                let Term::Atom(p) = prop else {
                    self.warnings.push("getProperty/2 needs a property name".to_string());
                    return Some(Ok(false));
                };
                match props.read(p) {
                    PropertyRead::Stale => return Some(Err(p.to_string())),
                    PropertyRead::Unknown => false,
                    PropertyRead::Value(v) => unify(value, &Term::from_value(&v), &mut self.bindings),
                }
            }
            ("lt" | "gt" | "eq", [a, b]) => match (a, b) {
                (Term::Number(x), Term::Number(y)) => match name {
                    "lt" => x < y,
                    "gt" => x > y,
                    _ => x == y,
                },
                _ => false,
            },
            _ => return None,
        };
        Some(Ok(ok))
    }

    fn block(&mut self, property: &str, polarity: Polarity, parent: Option<usize>) {
        if self.blocked.iter().any(|b| b.property == property && b.polarity == polarity) {
            return;
        }
        let clause = parent.and_then(|p| match &self.nodes[p].via {
            NodeVia::Clause(text) => Some(text.to_string()),
            _ => None,
        });
        self.blocked.push(BlockedLiteral { property: property.to_string(), polarity, clause });
    }

    /// The inner goal of the negation at `barrier` has a proof, so the
    /// negation fails. Property-atoms that held directly inside it are what
    /// made it fail.
    fn negation_failed(&mut self, barrier: usize) {
        let cp = self.choices[barrier].clone();
        self.choices.truncate(barrier);
        if let ChoiceKind::NotBarrier { parent, depth, .. } = cp.kind {
            if depth % 2 == 0 {
                let held: Vec<Arc<str>> = self.nodes[cp.nodes..]
                    .iter()
                    .filter(|n| n.depth == depth + 1)
                    .filter_map(|n| match &n.via {
                        NodeVia::Property(p) => Some(p.clone()),
                        _ => None,
                    })
                    .collect();
                for p in held {
                    self.block(&p, Polarity::RequiredFalse, parent);
                }
            }
        }
        self.bindings.undo(cp.mark);
        self.nodes.truncate(cp.nodes);
        self.mode = Mode::Backtrack;
    }
}

fn builtin_name(name: &str) -> &'static str {
    match name {
        "getProperty" => "getProperty/2",
        "lt" => "lt/2",
        "gt" => "gt/2",
        "eq" => "eq/2",
        _ => "true/0",
    }
}

/// Solutions collected by [`solve_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solutions {
    pub answers: Vec<BTreeMap<String, dsl::Term>>,
    /// Stopped at `max_solutions` with the search space not exhausted.
    pub truncated: bool,
    /// Stopped because `max_steps` ran out.
    pub budget_exhausted: bool,
    pub blocked: Vec<BlockedLiteral>,
}

/// Enumerate answers to `goal` by backtracking, up to the given caps.
pub fn solve_all(
    db: &ClauseDb,
    goal: &Goal,
    props: &dyn PropertyView,
    max_solutions: usize,
    max_steps: u64,
) -> Result<Solutions, SolveError> {
    let mut r = Resolver::start(db, goal);
    let mut out = Solutions { answers: Vec::new(), truncated: false, budget_exhausted: false, blocked: Vec::new() };
    if max_solutions == 0 || max_steps == 0 {
        return Err(SolveError::ZeroBudget);
    }
    loop {
        let remaining = max_steps.saturating_sub(r.steps_used());
        if remaining == 0 {
            out.budget_exhausted = true;
            break;
        }
        match r.solve_step(db, props, remaining)?.clone() {
            Status::Succeeded => {
                out.answers.push(r.answer());
                if out.answers.len() >= max_solutions {
                    r.next_solution()?;
                    out.truncated = r.status() != &Status::Failed;
                    break;
                }
                r.next_solution()?;
                if r.status() == &Status::Failed {
                    break;
                }
            }
            Status::Failed => break,
            Status::NeedsPerception { property } => return Err(SolveError::PerceptionRequired(property)),
            Status::Suspended | Status::Running => {
                out.budget_exhausted = true;
                break;
            }
        }
    }
    out.blocked = r.blocked().to_vec();
    Ok(out)
}
