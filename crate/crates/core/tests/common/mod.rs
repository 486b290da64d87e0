//! Random instance generators and independent reference implementations
//! shared by the oracle tests and the acceptance suite.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;

use iag_core::dsl::{parse_clause, parse_program, ActionDecl, Clause, EffectAnnotation, Program, Tendency, Value};
use iag_core::inference::{ClauseDb, PropertyView, Resolver, Status};
use iag_core::solver::{Intention, Origin};

pub const CONSTANTS: [&str; 3] = ["a", "b", "c"];

// ---- definite programs -------------------------------------------------

pub struct DefiniteProgram {
    pub predicates: Vec<(String, usize)>,
    pub clauses: Vec<String>,
}

impl DefiniteProgram {
    pub fn db(&self) -> ClauseDb {
        let mut db = ClauseDb::new();
        for c in &self.clauses {
            db.assert_clause(parse_clause(c).unwrap());
        }
        db
    }

    pub fn herbrand_size(&self) -> usize {
        self.predicates.iter().map(|(_, n)| CONSTANTS.len().pow(*n as u32)).sum()
    }
}

/// A function-free, negation-free, range-restricted program whose
/// predicate dependency graph is acyclic (rules only call predicates
/// defined earlier), so plain SLD resolution terminates.
pub fn random_definite_program(rng: &mut impl Rng) -> DefiniteProgram {
    let npreds = rng.random_range(2..=8);
    let predicates: Vec<(String, usize)> = (0..npreds).map(|i| (format!("p{i}"), rng.random_range(0..=2))).collect();
    let mut clauses = Vec::new();
    let budget = rng.random_range(npreds..=30);
    for _ in 0..budget * 4 {
        if clauses.len() >= budget {
            break;
        }
        let i = rng.random_range(0..npreds);
        let (name, arity) = &predicates[i];
        if i == 0 || rng.random_bool(0.4) {
            let args: Vec<&str> = (0..*arity).map(|_| *CONSTANTS.choose(rng).unwrap()).collect();
            push_distinct(&mut clauses, atom(name, &args) + ".");
            continue;
        }
        let nbody = rng.random_range(1..=3);
        let vars = ["X", "Y", "Z"];
        let mut body = Vec::new();
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        for _ in 0..nbody {
            let (bname, barity) = &predicates[rng.random_range(0..i)];
            let args: Vec<&str> = (0..*barity)
                .map(|_| {
                    if rng.random_bool(0.7) {
                        let v = *vars.choose(rng).unwrap();
                        bound.insert(v);
                        v
                    } else {
                        *CONSTANTS.choose(rng).unwrap()
                    }
                })
                .collect();
            body.push(atom(bname, &args));
        }
        let bound: Vec<&str> = bound.into_iter().collect();
        let head: Vec<&str> = (0..*arity)
            .map(|_| if !bound.is_empty() && rng.random_bool(0.8) { *bound.choose(rng).unwrap() } else { *CONSTANTS.choose(rng).unwrap() })
            .collect();
        push_distinct(&mut clauses, format!("{} :- {}.", atom(name, &head), body.join(", ")));
    }
    DefiniteProgram { predicates, clauses }
}

pub const MAX_PROOF_TREES: f64 = 50_000.0;

/// A random definite program whose open queries all enumerate completely
/// within `MAX_PROOF_TREES` answers.
pub fn random_bounded_program(rng: &mut impl Rng) -> DefiniteProgram {
    loop {
        let p = random_definite_program(rng);
        if ground_proof_trees(&p) <= MAX_PROOF_TREES {
            return p;
        }
    }
}

// Repeated clauses multiply duplicate answers exponentially.
fn push_distinct(clauses: &mut Vec<String>, clause: String) {
    if !clauses.contains(&clause) {
        clauses.push(clause);
    }
}

fn atom(name: &str, args: &[&str]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", args.join(", "))
    }
}

pub type GroundAtom = (String, Vec<String>);

/// Upper bound on SLD success derivations of any open query: distinct
/// derivations of a range-restricted program end in distinct ground proof
/// trees, and those are counted bottom-up here (predicates are ordered).
pub fn ground_proof_trees(program: &DefiniteProgram) -> f64 {
    let parsed: Vec<Clause> = program.clauses.iter().map(|c| parse_clause(c).unwrap()).collect();
    let mut count: BTreeMap<GroundAtom, f64> = BTreeMap::new();
    for (name, _) in &program.predicates {
        for clause in parsed.iter().filter(|c| c.head.functor().is_some_and(|(f, _)| f == name)) {
            let mut vars = Vec::new();
            clause.head.variables(&mut vars);
            for l in &clause.body {
                l.atom.variables(&mut vars);
            }
            vars.sort();
            vars.dedup();
            for assignment in assignments(vars.len()) {
                let env: BTreeMap<&str, &str> = vars.iter().map(String::as_str).zip(assignment.iter().copied()).collect();
                let trees: f64 = clause.body.iter().map(|l| count.get(&ground(&l.atom, &env)).copied().unwrap_or(0.0)).product();
                *count.entry(ground(&clause.head, &env)).or_default() += trees;
            }
        }
    }
    count.values().sum()
}

/// Least Herbrand model by naive bottom-up iteration over all ground
/// instances of every clause.
pub fn forward_chain(program: &DefiniteProgram) -> BTreeSet<GroundAtom> {
    let parsed: Vec<Clause> = program.clauses.iter().map(|c| parse_clause(c).unwrap()).collect();
    let mut model: BTreeSet<GroundAtom> = BTreeSet::new();
    loop {
        let mut added = false;
        for clause in &parsed {
            let mut vars = Vec::new();
            clause.head.variables(&mut vars);
            for l in &clause.body {
                l.atom.variables(&mut vars);
            }
            vars.sort();
            vars.dedup();
            for assignment in assignments(vars.len()) {
                let env: BTreeMap<&str, &str> = vars.iter().map(String::as_str).zip(assignment.iter().copied()).collect();
                if clause.body.iter().all(|l| model.contains(&ground(&l.atom, &env))) {
                    added |= model.insert(ground(&clause.head, &env));
                }
            }
        }
        if !added {
            return model;
        }
    }
}

fn assignments(n: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                CONSTANTS.iter().map(move |c| {
                    let mut p = prefix.clone();
                    p.push(*c);
                    p
                })
            })
            .collect();
    }
    out
}

fn ground(t: &iag_core::dsl::Term, env: &BTreeMap<&str, &str>) -> GroundAtom {
    use iag_core::dsl::Term;
    let arg = |a: &Term| match a {
        Term::Var(v) => env[v.as_str()].to_string(),
        other => other.to_string(),
    };
    match t {
        Term::Atom(a) => (a.clone(), Vec::new()),
        Term::Compound(f, args) => (f.clone(), args.iter().map(arg).collect()),
        other => panic!("not an atom: {other}"),
    }
}

// ---- propositional programs with properties and negation ---------------

#[derive(Debug, Clone)]
pub enum PLit {
    Prop { name: String, negated: bool },
    Pred { name: String, negated: bool },
}

#[derive(Debug, Clone)]
pub struct PropProgram {
    /// `(head, body)` in assertion order.
    pub clauses: Vec<(String, Vec<PLit>)>,
    pub properties: BTreeMap<String, bool>,
}

impl PropProgram {
    pub fn text(&self) -> Vec<String> {
        self.clauses
            .iter()
            .map(|(h, body)| {
                if body.is_empty() {
                    return format!("{h}.");
                }
                let lits: Vec<String> = body
                    .iter()
                    .map(|l| match l {
                        PLit::Prop { name, negated } | PLit::Pred { name, negated } => {
                            if *negated {
                                format!("not({name})")
                            } else {
                                name.clone()
                            }
                        }
                    })
                    .collect();
                format!("{h} :- {}.", lits.join(", "))
            })
            .collect()
    }

    pub fn db(&self) -> ClauseDb {
        let names: Vec<&str> = self.properties.keys().map(String::as_str).collect();
        let mut db = ClauseDb::with_properties(&names);
        for c in self.text() {
            db.assert_clause(parse_clause(&c).unwrap());
        }
        db
    }

    pub fn view(&self) -> BTreeMap<String, Value> {
        self.properties.iter().map(|(k, v)| (k.clone(), Value::Bool(*v))).collect()
    }
}

/// Acyclic propositional program over predicates q0..q5 and properties
/// d0..d3; the goal is `q0`.
pub fn random_prop_program(rng: &mut impl Rng) -> PropProgram {
    let npreds = rng.random_range(1..=6);
    let nprops = rng.random_range(1..=4);
    let properties: BTreeMap<String, bool> = (0..nprops).map(|i| (format!("d{i}"), rng.random_bool(0.5))).collect();
    let mut clauses = Vec::new();
    for i in 0..npreds {
        for _ in 0..rng.random_range(0..=2) {
            let mut body = Vec::new();
            for _ in 0..rng.random_range(0..=3) {
                let negated = rng.random_bool(0.4);
                if i + 1 < npreds && rng.random_bool(0.5) {
                    body.push(PLit::Pred { name: format!("q{}", rng.random_range(i + 1..npreds)), negated });
                } else {
                    body.push(PLit::Prop { name: format!("d{}", rng.random_range(0..nprops)), negated });
                }
            }
            clauses.push((format!("q{i}"), body));
        }
    }
    PropProgram { clauses, properties }
}

/// What a first-solution depth-first proof of a goal explored.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct PropTrace {
    pub proved: bool,
    /// `(property, required_value, rule)` in discovery order, deduplicated
    /// on `(property, required_value)`.
    pub blocked: Vec<(String, bool, Option<String>)>,
}

/// Reference evaluator: a recursive depth-first prover with explicit
/// continuations. A property literal that fails outside any negation, or
/// inside an even number of them, records the value it needed. A
/// negation that fails because its inner goal is provable records the
/// properties that held directly in that inner proof as needing `false`.
pub fn prop_oracle(program: &PropProgram, goal: &str) -> PropTrace {
    let texts = program.text();
    let mut trace = PropTrace::default();
    let goals = vec![Frame { lit: PLit::Pred { name: goal.to_string(), negated: false }, rule: None, depth: 0 }];
    let mut held = Vec::new();
    trace.proved = solve(program, &texts, &goals, &mut trace, &mut held);
    trace
}

#[derive(Clone)]
struct Frame {
    lit: PLit,
    rule: Option<usize>,
    depth: u32,
}

fn record(trace: &mut PropTrace, texts: &[String], name: &str, need: bool, rule: Option<usize>) {
    if !trace.blocked.iter().any(|(p, v, _)| p == name && *v == need) {
        trace.blocked.push((name.to_string(), need, rule.map(|r| texts[r].clone())));
    }
}

/// `held` collects `(property, depth)` for property literals that held on
/// the current branch.
fn solve(p: &PropProgram, texts: &[String], goals: &[Frame], trace: &mut PropTrace, held: &mut Vec<(String, u32)>) -> bool {
    let Some((first, rest)) = goals.split_first() else { return true };
    match &first.lit {
        PLit::Prop { name, negated } => {
            let value = p.properties[name];
            if value != *negated {
                if !negated {
                    held.push((name.clone(), first.depth));
                }
                let mark = held.len() - usize::from(!negated);
                if solve(p, texts, rest, trace, held) {
                    return true;
                }
                held.truncate(mark);
                false
            } else {
                if first.depth % 2 == 0 {
                    record(trace, texts, name, !*negated, first.rule);
                }
                false
            }
        }
        PLit::Pred { name, negated: true } => {
            let inner = vec![Frame { lit: PLit::Pred { name: name.clone(), negated: false }, rule: None, depth: first.depth + 1 }];
            let mut inner_held = Vec::new();
            if solve(p, texts, &inner, trace, &mut inner_held) {
                if first.depth % 2 == 0 {
                    for (prop, d) in &inner_held {
                        if *d == first.depth + 1 {
                            record(trace, texts, prop, false, first.rule);
                        }
                    }
                }
                false
            } else {
                solve(p, texts, rest, trace, held)
            }
        }
        PLit::Pred { name, negated: false } => {
            for (idx, (head, body)) in p.clauses.iter().enumerate() {
                if head != name {
                    continue;
                }
                let mut next: Vec<Frame> =
                    body.iter().map(|l| Frame { lit: l.clone(), rule: Some(idx), depth: first.depth }).collect();
                next.extend_from_slice(rest);
                let mark = held.len();
                if solve(p, texts, &next, trace, held) {
                    return true;
                }
                held.truncate(mark);
            }
            false
        }
    }
}

// ---- resolver drivers ---------------------------------------------------

/// Everything observable about a full enumeration of a goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub statuses: Vec<String>,
    pub answers: Vec<BTreeMap<String, String>>,
    pub blocked: Vec<String>,
}

/// Enumerate every solution of `goal`, feeding the resolver `budget` steps
/// per `solve_step` call.
pub fn enumerate(db: &ClauseDb, goal: &str, props: &dyn PropertyView, budget: u64, max_solutions: usize) -> Enumeration {
    let goal = iag_core::dsl::parse_query(goal).unwrap();
    let mut r = Resolver::start(db, &goal);
    let mut out = Enumeration { statuses: Vec::new(), answers: Vec::new(), blocked: Vec::new() };
    let mut calls = 0u64;
    loop {
        calls += 1;
        assert!(calls < 5_000_000, "runaway enumeration");
        let status = r.solve_step(db, props, budget).unwrap().clone();
        match status {
            Status::Suspended | Status::Running => continue,
            Status::Succeeded => {
                out.statuses.push("succeeded".into());
                out.answers.push(r.answer().into_iter().map(|(k, v)| (k, v.to_string())).collect());
                if out.answers.len() >= max_solutions {
                    break;
                }
                r.next_solution().unwrap();
                if r.status() == &Status::Failed {
                    out.statuses.push("failed".into());
                    break;
                }
            }
            Status::Failed => {
                out.statuses.push("failed".into());
                break;
            }
            Status::NeedsPerception { property } => panic!("static view reported {property} stale"),
        }
    }
    out.blocked = r.blocked().iter().map(|b| format!("{}@{:?}", b.literal(), b.clause)).collect();
    out
}

// ---- solver instances ---------------------------------------------------

pub struct SolverInstance {
    pub actions: Vec<ActionDecl>,
    pub intentions: Vec<Intention>,
}

pub fn random_solver_instance(rng: &mut impl Rng) -> SolverInstance {
    let nprops = rng.random_range(1..=6);
    let props: Vec<String> = (0..nprops).map(|i| format!("p{i}")).collect();
    let nactions = rng.random_range(0..=10);
    let actions = (0..nactions)
        .map(|i| {
            let mut effects = Vec::new();
            for p in &props {
                if rng.random_bool(0.4) {
                    effects.push(EffectAnnotation { tendency: *Tendency::ALL.choose(rng).unwrap(), property: p.clone() });
                }
            }
            ActionDecl { name: format!("a{i}"), effects, body: Vec::new() }
        })
        .collect();
    let mut intentions: Vec<Intention> = Vec::new();
    for _ in 0..rng.random_range(0..=6) {
        let tendency = *[Tendency::Increase, Tendency::Reduce, Tendency::Maintain].choose(rng).unwrap();
        let property = props.choose(rng).unwrap().clone();
        if !intentions.iter().any(|i| i.tendency == tendency && i.property == property) {
            intentions.push(Intention { tendency, property, origin: Origin::Explicit { rule: None } });
        }
    }
    SolverInstance { actions, intentions }
}

fn oracle_match(declared: Tendency, wanted: Tendency) -> i64 {
    let sign = |t: Tendency| match t {
        Tendency::Increase => Some(1),
        Tendency::Reduce => Some(-1),
        Tendency::Maintain => Some(0),
        Tendency::Independent => None,
    };
    match (sign(declared), sign(wanted)) {
        (Some(a), Some(b)) if a == b => 1,
        (Some(_), Some(_)) => -1,
        _ => 0,
    }
}

pub fn oracle_score(a: &ActionDecl, intentions: &[Intention]) -> i64 {
    let mut total = 0;
    for i in intentions {
        for e in &a.effects {
            if e.property == i.property {
                total += oracle_match(e.tendency, i.tendency);
            }
        }
    }
    total
}

pub fn oracle_compatible(a: &ActionDecl, b: &ActionDecl) -> bool {
    a.effects.iter().all(|x| {
        b.effects.iter().filter(|y| y.property == x.property).all(|y| {
            let directional = |t: Tendency| matches!(t, Tendency::Increase | Tendency::Reduce);
            let clash = (directional(x.tendency) && directional(y.tendency) && x.tendency != y.tendency)
                || (x.tendency == Tendency::Maintain && directional(y.tendency))
                || (y.tendency == Tendency::Maintain && directional(x.tendency));
            !clash
        })
    })
}

/// Exhaustive search over all 2^n subsets: best total score among pairwise
/// compatible subsets, and the lexicographically smallest sorted name list
/// among the positive-score subsets reaching it.
pub fn brute_force_selection(inst: &SolverInstance) -> (i64, Vec<String>) {
    let n = inst.actions.len();
    let scores: Vec<i64> = inst.actions.iter().map(|a| oracle_score(a, &inst.intentions)).collect();
    let mut best = (0i64, Vec::<String>::new());
    for mask in 0u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let ok = members.iter().all(|&i| members.iter().all(|&j| i == j || oracle_compatible(&inst.actions[i], &inst.actions[j])));
        if !ok {
            continue;
        }
        let total: i64 = members.iter().map(|&i| scores[i]).sum();
        if members.iter().any(|&i| scores[i] <= 0) {
            // Such a subset can only tie a positive-only one; it never wins.
            if total > best.0 {
                panic!("a subset with a non-positive member beat every positive-only subset");
            }
            continue;
        }
        let mut names: Vec<String> = members.iter().map(|&i| inst.actions[i].name.clone()).collect();
        names.sort();
        if total > best.0 || (total == best.0 && total > 0 && names < best.1) {
            best = (total, names);
        }
    }
    best
}

// ---- scenario corpus ------------------------------------------------------

pub fn scenario_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn scenario_corpus() -> Vec<(String, Program)> {
    let mut files: Vec<_> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "iag"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let src = std::fs::read_to_string(&p).unwrap();
            (p.file_name().unwrap().to_string_lossy().into_owned(), parse_program(&src).unwrap())
        })
        .collect()
}
