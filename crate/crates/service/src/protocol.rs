use serde::{Deserialize, Serialize};

use iag_core::dsl::Span;
use iag_core::runtime::{Delta, TickReport};

pub const PROTOCOL_VERSION: &str = "iag/1";

pub const VERBS: &[&str] = &[
    "hello",
    "snapshot",
    "step",
    "pause",
    "resume",
    "set_speed",
    "spawn",
    "set_property",
    "assert_clause",
    "retract_clause",
    "add_effect",
    "remove_effect",
    "explain",
    "list_agents",
    "get_source",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    #[serde(default)]
    pub id: serde_json::Value,
    pub verb: String,
    #[serde(default)]
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadVerb,
    BadPayload,
    TargetNotFound,
    /// `explain` before the agent finished a decision cycle.
    NoCycleYet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: serde_json::Value,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ResponseError>,
}

impl Response {
    pub fn ok(id: serde_json::Value, payload: serde_json::Value) -> Response {
        Response { id, ok: true, payload: Some(payload), error: None }
    }

    pub fn error(id: serde_json::Value, code: ErrorCode, message: impl Into<String>, span: Option<Span>) -> Response {
        Response { id, ok: false, payload: None, error: Some(ResponseError { code, message: message.into(), span }) }
    }

    /// Wire form: the response fields plus `"type": "response"`.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("responses serialize");
        v["type"] = "response".into();
        v.to_string()
    }
}

/// Server-initiated events. Every push carries the tick it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Push {
    TickReport {
        tick: u64,
        /// Reports discarded for this client since the last one it received.
        dropped: u64,
        report: TickReport,
    },
    EditApplied {
        tick: u64,
        agent: String,
        edits: Vec<String>,
        deltas: Vec<Delta>,
    },
    Log {
        tick: u64,
        agent: String,
        message: String,
    },
}

impl Push {
    pub fn tick(&self) -> u64 {
        match self {
            Push::TickReport { tick, .. } | Push::EditApplied { tick, .. } | Push::Log { tick, .. } => *tick,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pushes serialize")
    }
}
