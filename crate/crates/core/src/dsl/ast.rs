//! Abstract syntax for `.iag` programs.
//!
//! An agent class is written in three layers: declarative rules, the
//! intentional annotations (`provide:` on perceptions, `ensure:` on actions)
//! and the imperative method bodies. The AST carries no source spans so that
//! printing and reparsing yields a structurally identical tree.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A runtime value held by an agent property or produced by an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Number(f64),
    Symbol(String),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "boolean",
            Value::Number(_) => "number",
            Value::Symbol(_) => "symbol",
        }
    }

    pub fn same_type(&self, other: &Value) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Number(n) => fmt_number(*n, f),
            Value::Symbol(s) => {
                if is_plain_symbol(s) {
                    f.write_str(s)
                } else {
                    write!(f, "{s:?}")
                }
            }
        }
    }
}

pub(crate) fn fmt_number(n: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if n.is_infinite() {
        f.write_str(if n > 0.0 { "inf" } else { "-inf" })
    } else {
        write!(f, "{n}")
    }
}

/// Lowercase identifiers that are not reserved print without quotes.
pub(crate) fn is_plain_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "true" | "false" | "not" | "self" | "if" | "else")
}

// Non-finite numbers have no JSON representation; they travel as strings.
impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Bool(b) => serializer.serialize_bool(*b),
            Value::Number(n) if n.is_finite() => serializer.serialize_f64(*n),
            Value::Number(n) if n.is_nan() => serializer.serialize_str("nan"),
            Value::Number(n) if *n > 0.0 => serializer.serialize_str("inf"),
            Value::Number(_) => serializer.serialize_str("-inf"),
            Value::Symbol(s) => serializer.serialize_str(s),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        match raw {
            serde_json::Value::Bool(b) => Ok(Value::Bool(b)),
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(Value::Number)
                .ok_or_else(|| serde::de::Error::custom("number out of range")),
            serde_json::Value::String(s) => Ok(match s.as_str() {
                "inf" => Value::Number(f64::INFINITY),
                "-inf" => Value::Number(f64::NEG_INFINITY),
                _ => Value::Symbol(s),
            }),
            other => Err(serde::de::Error::custom(format!(
                "expected boolean, number or symbol, found {other}"
            ))),
        }
    }
}

/// The qualitative vocabulary shared by intentions and effect annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tendency {
    Increase,
    Reduce,
    Maintain,
    Independent,
}

impl Tendency {
    pub const ALL: [Tendency; 4] = [
        Tendency::Increase,
        Tendency::Reduce,
        Tendency::Maintain,
        Tendency::Independent,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Tendency::Increase => "increase",
            Tendency::Reduce => "reduce",
            Tendency::Maintain => "maintain",
            Tendency::Independent => "independent",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Tendency> {
        Tendency::ALL.into_iter().find(|t| t.keyword() == word)
    }
}

impl fmt::Display for Tendency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectAnnotation {
    pub tendency: Tendency,
    pub property: String,
}

impl fmt::Display for EffectAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.tendency, self.property)
    }
}

/// A first-order term as written in rules and queries.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(String),
    Atom(String),
    Number(f64),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Term {
        Term::Atom(name.into())
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn compound(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::Compound(name.into(), args)
    }

    /// Predicate indicator for callable terms.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(name) => Some((name, 0)),
            Term::Compound(name, args) => Some((name, args.len())),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn variables(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.variables(out)),
            _ => {}
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Atom(a) => fmt_atom(a, f),
            Term::Number(n) => fmt_number(*n, f),
            Term::Compound(name, args) => {
                fmt_atom(name, f)?;
                f.write_str("(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn fmt_atom(a: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let plain = a.chars().next().is_some_and(|c| c.is_ascii_lowercase())
        && a.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        f.write_str(a)
    } else {
        write!(f, "{a:?}")
    }
}

/// A body literal. `property` is set when the literal is a bare 0-arity atom
/// naming a declared property of the owning agent class, in which case it
/// reads `getProperty(p, true)` at resolution time.
#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub negated: bool,
    pub atom: Term,
    pub property: bool,
}

impl Literal {
    pub fn positive(atom: Term) -> Literal {
        Literal { negated: false, atom, property: false }
    }

    pub fn negative(atom: Term) -> Literal {
        Literal { negated: true, atom, property: false }
    }

    /// Property name when this literal is a flagged property-atom.
    pub fn property_name(&self) -> Option<&str> {
        match (&self.atom, self.property) {
            (Term::Atom(name), true) => Some(name),
            _ => None,
        }
    }

    pub fn mark_property_atoms<S: AsRef<str>>(&mut self, properties: &[S]) {
        self.property = matches!(&self.atom, Term::Atom(name)
            if properties.iter().any(|p| p.as_ref() == name));
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "not({})", self.atom)
        } else {
            write!(f, "{}", self.atom)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Literal>,
}

impl Clause {
    pub fn fact(head: Term) -> Clause {
        Clause { head, body: Vec::new() }
    }

    pub fn key(&self) -> (String, usize) {
        let (name, arity) = self.head.functor().unwrap_or(("", 0));
        (name.to_string(), arity)
    }

    pub fn mark_property_atoms<S: AsRef<str>>(&mut self, properties: &[S]) {
        for lit in &mut self.body {
            lit.mark_property_atoms(properties);
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, lit) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{lit}")?;
            }
        }
        f.write_str(".")
    }
}

/// A conjunctive query.
pub type Goal = Vec<Literal>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Value),
    /// `self.<property>`
    Property(String),
    Call(String, Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign { property: String, value: Expr },
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyDecl {
    pub name: String,
    pub initial: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionDecl {
    pub name: String,
    pub provides: Vec<String>,
    /// `@every(n)`: also run unconditionally on ticks divisible by `n`.
    pub every: Option<u64>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDecl {
    pub name: String,
    pub effects: Vec<EffectAnnotation>,
    pub body: Vec<Stmt>,
}

impl ActionDecl {
    pub fn effect_on(&self, property: &str) -> Option<Tendency> {
        self.effects.iter().find(|e| e.property == property).map(|e| e.tendency)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentClass {
    pub name: String,
    pub properties: Vec<PropertyDecl>,
    pub perceptions: Vec<PerceptionDecl>,
    pub actions: Vec<ActionDecl>,
    pub rules: Vec<Clause>,
}

impl AgentClass {
    pub fn property(&self, name: &str) -> Option<&PropertyDecl> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionDecl> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn perception(&self, name: &str) -> Option<&PerceptionDecl> {
        self.perceptions.iter().find(|p| p.name == name)
    }

    pub fn property_names(&self) -> Vec<&str> {
        self.properties.iter().map(|p| p.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    At { x: u32, y: u32 },
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpawnDecl {
    pub name: String,
    pub class: String,
    pub at: Placement,
    pub overrides: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityDecl {
    pub name: String,
    pub kind: String,
    pub at: Placement,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioDecl {
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub seed: Option<u64>,
    pub spawns: Vec<SpawnDecl>,
    pub entities: Vec<EntityDecl>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub classes: Vec<AgentClass>,
    pub scenario: Option<ScenarioDecl>,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&AgentClass> {
        self.classes.iter().find(|c| c.name == name)
    }
}
