//! Serializable views of the simulation: per-tick trace records, state
//! snapshots and explanations. Field order is declaration order, which
//! keeps serialized traces byte-stable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsl::{EffectAnnotation, Value};
use crate::inference::{BlockedLiteral, ProofTree};
use crate::solver::{ActionSelection, Intention};
use crate::world::Entity;

use super::interp::Delta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Main,
    Intend,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MainStatus {
    Succeeded,
    Failed,
}

/// Where an agent's decision cycle stands at the end of its slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleProgress {
    pub started_tick: u64,
    pub phase: Phase,
    pub steps: u64,
}

/// The outcome of a decision cycle that completed during this tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub main: MainStatus,
    pub steps: u64,
    pub intentions: Vec<Intention>,
    pub blocked: Vec<BlockedLiteral>,
    pub selection: ActionSelection,
    pub intend_truncated: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub agent: String,
    pub class: String,
    pub edits_applied: Vec<String>,
    pub perceptions_run: Vec<String>,
    pub cycle: CycleProgress,
    pub completed: Option<CycleSummary>,
    pub actions_run: Vec<String>,
    pub deltas: Vec<Delta>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickReport {
    pub tick: u64,
    pub agents: Vec<AgentReport>,
    pub world: Vec<Entity>,
}

impl TickReport {
    pub fn agent(&self, name: &str) -> Option<&AgentReport> {
        self.agents.iter().find(|a| a.agent == name)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionInfo {
    pub name: String,
    pub effects: Vec<EffectAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: u32,
    pub name: String,
    pub class: String,
    pub properties: BTreeMap<String, Value>,
    pub actions: Vec<ActionInfo>,
    pub clauses: Vec<String>,
    pub last_selection: Option<ActionSelection>,
    pub last_intentions: Vec<Intention>,
    pub pending_edits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub width: u32,
    pub height: u32,
    pub entities: Vec<Entity>,
    pub agents: Vec<AgentSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServedIntention {
    pub intention: String,
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionReason {
    pub action: String,
    /// Proven as a subgoal of `main` rather than chosen by scoring.
    pub direct: bool,
    pub serves: Vec<ServedIntention>,
}

/// Why an agent did what it did in its last completed decision cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub agent: String,
    pub tick: u64,
    pub main: MainStatus,
    pub proof: Vec<ProofTree>,
    pub blocked: Vec<BlockedLiteral>,
    pub intentions: Vec<Intention>,
    pub actions: Vec<ActionReason>,
    pub text: Vec<String>,
}

impl Explanation {
    pub fn render(&self) -> String {
        self.text.join("\n")
    }
}
