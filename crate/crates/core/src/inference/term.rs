//! Engine-level terms: variables are slots in a [`Bindings`] store instead
//! of names, so renaming a clause apart is an offset and undoing bindings on
//! backtrack is a trail replay.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::dsl::{self, Value};

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(VarId),
    Atom(Arc<str>),
    Number(f64),
    Compound(Arc<str>, Arc<[Term]>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Arc::from(name))
    }

    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(a) => Some((a, 0)),
            Term::Compound(f, args) => Some((f, args.len())),
            _ => None,
        }
    }

    pub fn from_value(v: &Value) -> Term {
        match v {
            Value::Bool(b) => Term::atom(if *b { "true" } else { "false" }),
            Value::Number(n) => Term::Number(*n),
            Value::Symbol(s) => Term::atom(s),
        }
    }

    /// Shift every variable by `base`; used to rename stored clauses apart.
    pub(crate) fn offset(&self, base: VarId) -> Term {
        match self {
            Term::Var(v) => Term::Var(v + base),
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| a.offset(base)).collect())
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", export_unbound(self))
    }
}

fn export_unbound(t: &Term) -> dsl::Term {
    match t {
        Term::Var(v) => dsl::Term::Var(format!("_G{v}")),
        Term::Atom(a) => dsl::Term::Atom(a.to_string()),
        Term::Number(n) => dsl::Term::Number(*n),
        Term::Compound(f, args) => dsl::Term::Compound(f.to_string(), args.iter().map(export_unbound).collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mark {
    slots: usize,
    trail: usize,
}

/// Variable store with a trail for undoing bindings.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    slots: Vec<Option<Term>>,
    trail: Vec<VarId>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn fresh(&mut self) -> VarId {
        self.slots.push(None);
        self.slots.len() - 1
    }

    /// Reserve `n` consecutive fresh variables, returning the first id.
    pub fn fresh_block(&mut self, n: usize) -> VarId {
        let base = self.slots.len();
        self.slots.resize(base + n, None);
        base
    }

    pub fn lookup(&self, v: VarId) -> Option<&Term> {
        self.slots.get(v).and_then(Option::as_ref)
    }

    pub fn mark(&self) -> Mark {
        Mark { slots: self.slots.len(), trail: self.trail.len() }
    }

    pub fn undo(&mut self, mark: Mark) {
        for v in self.trail.drain(mark.trail..) {
            if let Some(slot) = self.slots.get_mut(v) {
                *slot = None;
            }
        }
        self.slots.truncate(mark.slots);
    }

    fn bind(&mut self, v: VarId, t: Term) {
        self.slots[v] = Some(t);
        self.trail.push(v);
    }

    /// Follow variable bindings at the top level only.
    pub fn deref(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Term::Var(v) = cur {
            match self.lookup(v) {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    /// Apply the substitution everywhere inside `t`.
    pub fn resolve(&self, t: &Term) -> Term {
        match self.deref(t) {
            Term::Compound(f, args) => Term::Compound(f, args.iter().map(|a| self.resolve(a)).collect()),
            other => other,
        }
    }

    pub fn is_ground(&self, t: &Term) -> bool {
        match self.deref(t) {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(|a| self.is_ground(a)),
            _ => true,
        }
    }

    fn occurs(&self, v: VarId, t: &Term) -> bool {
        match self.deref(t) {
            Term::Var(w) => v == w,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }

    /// Convert to a surface term; unbound variables are named by `name`.
    pub fn export(&self, t: &Term, name: &dyn Fn(VarId) -> String) -> dsl::Term {
        match self.deref(t) {
            Term::Var(v) => dsl::Term::Var(name(v)),
            Term::Atom(a) => dsl::Term::Atom(a.to_string()),
            Term::Number(n) => dsl::Term::Number(n),
            Term::Compound(f, args) => {
                dsl::Term::Compound(f.to_string(), args.iter().map(|a| self.export(a, name)).collect())
            }
        }
    }
}

/// Most general unifier of `a` and `b` extending `bindings`, with the occurs
/// check. On failure `bindings` is left exactly as it was.
pub fn unify(a: &Term, b: &Term, bindings: &mut Bindings) -> bool {
    let mark = bindings.mark();
    let ok = unify_inner(a, b, bindings);
    if !ok {
        bindings.undo(mark);
    }
    ok
}

fn unify_inner(a: &Term, b: &Term, bindings: &mut Bindings) -> bool {
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let x = bindings.deref(&x);
        let y = bindings.deref(&y);
        match (x, y) {
            (Term::Var(v), Term::Var(w)) if v == w => {}
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if bindings.occurs(v, &t) {
                    return false;
                }
                bindings.bind(v, t);
            }
            (Term::Atom(p), Term::Atom(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Number(p), Term::Number(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ => return false,
        }
    }
    true
}

/// Maps surface variable names to engine variables while importing terms.
#[derive(Debug, Default, Clone)]
pub struct VarNames {
    names: Vec<(String, VarId)>,
}

impl VarNames {
    pub fn get(&self, name: &str) -> Option<VarId> {
        self.names.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, VarId)> {
        self.names.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn import(&mut self, t: &dsl::Term, bindings: &mut Bindings) -> Term {
        match t {
            dsl::Term::Var(name) => match self.get(name) {
                Some(v) => Term::Var(v),
                None => {
                    let v = bindings.fresh();
                    self.names.push((name.clone(), v));
                    Term::Var(v)
                }
            },
            dsl::Term::Atom(a) => Term::atom(a),
            dsl::Term::Number(n) => Term::Number(*n),
            dsl::Term::Compound(f, args) => {
                Term::Compound(Arc::from(f.as_str()), args.iter().map(|a| self.import(a, bindings)).collect())
            }
        }
    }
}

/// Variable-name to term substitution over surface terms.
pub type Substitution = BTreeMap<String, dsl::Term>;

/// Most general unifier of two surface terms, or `None` if they clash.
pub fn mgu(a: &dsl::Term, b: &dsl::Term) -> Option<Substitution> {
    let mut bindings = Bindings::new();
    let mut names = VarNames::default();
    let ta = names.import(a, &mut bindings);
    let tb = names.import(b, &mut bindings);
    if !unify(&ta, &tb, &mut bindings) {
        return None;
    }
    let label = |v: VarId| {
        names.iter().find(|(_, w)| *w == v).map(|(n, _)| n.to_string()).unwrap_or_else(|| format!("_G{v}"))
    };
    let mut out = Substitution::new();
    for (name, v) in names.iter() {
        if bindings.lookup(v).is_some() {
            out.insert(name.to_string(), bindings.export(&Term::Var(v), &label));
        }
    }
    Some(out)
}
