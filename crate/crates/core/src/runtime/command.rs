use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsl::{Placement, Tendency, Value};

/// An edit to an agent's behavior or state, applied at a safe point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    AssertClause { clause: String },
    RetractClause { clause: String },
    AddEffect { action: String, tendency: Tendency, property: String },
    RemoveEffect { action: String, property: String },
    SetProperty { property: String, value: Value },
}

impl Edit {
    pub fn describe(&self) -> String {
        match self {
            Edit::AssertClause { clause } => format!("assert {clause}"),
            Edit::RetractClause { clause } => format!("retract {clause}"),
            Edit::AddEffect { action, tendency, property } => format!("add_effect {action} {tendency} {property}"),
            Edit::RemoveEffect { action, property } => format!("remove_effect {action} {property}"),
            Edit::SetProperty { property, value } => format!("set {property} = {value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Agent(String),
    Class(String),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Agent(a) => write!(f, "agent {a}"),
            Target::Class(c) => write!(f, "class {c}"),
        }
    }
}

/// Everything that can change a running simulation from outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Edit {
        target: Target,
        edit: Edit,
    },
    Spawn {
        name: String,
        class: String,
        #[serde(default = "random_placement")]
        at: Placement,
        #[serde(default)]
        overrides: BTreeMap<String, Value>,
    },
}

fn random_placement() -> Placement {
    Placement::Random
}

/// A command stamped with the tick at whose start it takes effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedCommand {
    pub tick: u64,
    #[serde(flatten)]
    pub command: Command,
}

/// Parse a JSON-lines command schedule.
pub fn parse_schedule(text: &str) -> Result<Vec<LoggedCommand>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

pub fn write_schedule(log: &[LoggedCommand]) -> String {
    log.iter().map(|c| format!("{}\n", serde_json::to_string(c).expect("commands serialize"))).collect()
}
