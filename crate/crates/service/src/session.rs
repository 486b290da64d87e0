use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value as Json};

use iag_core::dsl::{parse_effect_decl, Placement, Tendency, Value};
use iag_core::runtime::{Command, Edit, RuntimeError, Simulation, Target, TickReport};

use crate::protocol::{ErrorCode, Push, Request, Response, PROTOCOL_VERSION, VERBS};

/// The response to one request plus the pushes it caused, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Handled {
    pub response: Response,
    pub pushes: Vec<Push>,
}

/// Protocol state around one simulation. Starts paused.
pub struct Session {
    sim: Simulation,
    paused: bool,
    ticks_per_second: f64,
}

type Failure = (ErrorCode, String, Option<iag_core::dsl::Span>);

fn bad(message: impl Into<String>) -> Failure {
    (ErrorCode::BadPayload, message.into(), None)
}

fn runtime_failure(e: RuntimeError) -> Failure {
    match e {
        RuntimeError::Parse(p) => (ErrorCode::BadPayload, p.to_string(), Some(p.span)),
        RuntimeError::UnknownClass(_) | RuntimeError::UnknownTarget(_) => (ErrorCode::TargetNotFound, e.to_string(), None),
        RuntimeError::NoCycleYet(_) => (ErrorCode::NoCycleYet, e.to_string(), None),
        other => (ErrorCode::BadPayload, other.to_string(), None),
    }
}

fn fields<T: DeserializeOwned>(payload: &Json) -> Result<T, Failure> {
    let payload = if payload.is_null() { json!({}) } else { payload.clone() };
    serde_json::from_value(payload).map_err(|e| bad(e.to_string()))
}

#[derive(Deserialize)]
struct TargetFields {
    agent: Option<String>,
    class: Option<String>,
}

fn target(payload: &Json) -> Result<Target, Failure> {
    match fields::<TargetFields>(payload)? {
        TargetFields { agent: Some(a), class: None } => Ok(Target::Agent(a)),
        TargetFields { agent: None, class: Some(c) } => Ok(Target::Class(c)),
        _ => Err(bad("exactly one of `agent` or `class` is required")),
    }
}

#[derive(Deserialize)]
struct Step {
    n: u64,
}

#[derive(Deserialize)]
struct Speed {
    ticks_per_second: f64,
}

#[derive(Deserialize)]
struct Spawn {
    name: String,
    class: String,
    #[serde(default)]
    at: Option<At>,
    #[serde(default)]
    overrides: BTreeMap<String, Value>,
}

/// `{"x": 1, "y": 2}` or `"random"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum At {
    Cell { x: u32, y: u32 },
    Word(String),
}

#[derive(Deserialize)]
struct SetProperty {
    agent: String,
    property: String,
    value: Value,
}

#[derive(Deserialize)]
struct ClauseText {
    clause: String,
}

#[derive(Deserialize)]
struct AddEffect {
    action: Option<String>,
    tendency: Option<Tendency>,
    property: Option<String>,
    /// Declaration form, e.g. `mew ensure: reduce danger`.
    text: Option<String>,
}

#[derive(Deserialize)]
struct RemoveEffect {
    action: String,
    property: String,
}

#[derive(Deserialize)]
struct AgentName {
    agent: String,
}

#[derive(Deserialize)]
struct ClassName {
    class: String,
}

impl Session {
    pub fn new(sim: Simulation) -> Session {
        Session { sim, paused: true, ticks_per_second: 2.0 }
    }

    pub fn sim(&self) -> &Simulation {
        &self.sim
    }

    pub fn into_sim(self) -> Simulation {
        self.sim
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn ticks_per_second(&self) -> f64 {
        self.ticks_per_second
    }

    pub fn set_speed(&mut self, ticks_per_second: f64) -> Result<(), String> {
        if !(ticks_per_second.is_finite() && ticks_per_second > 0.0) {
            return Err("`ticks_per_second` must be a positive number".into());
        }
        self.ticks_per_second = ticks_per_second;
        Ok(())
    }

    /// Handle one raw text frame. Malformed JSON still gets a response.
    pub fn handle_text(&mut self, text: &str) -> Handled {
        match serde_json::from_str::<Request>(text) {
            Ok(req) => self.handle(&req),
            Err(e) => {
                let id = serde_json::from_str::<Json>(text).ok().and_then(|v| v.get("id").cloned()).unwrap_or(Json::Null);
                Handled { response: Response::error(id, ErrorCode::BadPayload, format!("malformed request: {e}"), None), pushes: Vec::new() }
            }
        }
    }

    pub fn handle(&mut self, req: &Request) -> Handled {
        let mut pushes = Vec::new();
        let response = match self.dispatch(req, &mut pushes) {
            Ok(payload) => Response::ok(req.id.clone(), payload),
            Err((code, message, span)) => Response::error(req.id.clone(), code, message, span),
        };
        Handled { response, pushes }
    }

    /// Advance one tick and return its pushes.
    pub fn tick(&mut self) -> Vec<Push> {
        let report = self.sim.tick();
        pushes_for(report)
    }

    fn submit(&mut self, command: Command) -> Result<Json, Failure> {
        self.sim.submit(command).map(|ack| json!(ack)).map_err(runtime_failure)
    }

    fn edit(&mut self, payload: &Json, edit: Edit) -> Result<Json, Failure> {
        let target = target(payload)?;
        self.submit(Command::Edit { target, edit })
    }

    fn dispatch(&mut self, req: &Request, pushes: &mut Vec<Push>) -> Result<Json, Failure> {
        let p = &req.payload;
        match req.verb.as_str() {
            "hello" => Ok(json!({
                "protocol": PROTOCOL_VERSION,
                "verbs": VERBS,
                "tick": self.sim.tick_count(),
                "paused": self.paused,
                "ticks_per_second": self.ticks_per_second,
            })),
            "snapshot" => Ok(json!(self.sim.snapshot())),
            "step" => {
                let Step { n } = fields(p)?;
                if n == 0 {
                    return Err(bad("`n` must be at least 1"));
                }
                let mut ticks = Vec::new();
                for _ in 0..n {
                    let report = self.sim.tick();
                    ticks.push(report.tick);
                    pushes.extend(pushes_for(report));
                }
                Ok(json!({ "ticks": ticks }))
            }
            "pause" => {
                self.paused = true;
                Ok(json!({ "paused": true }))
            }
            "resume" => {
                self.paused = false;
                Ok(json!({ "paused": false }))
            }
            "set_speed" => {
                let Speed { ticks_per_second } = fields(p)?;
                self.set_speed(ticks_per_second).map_err(bad)?;
                Ok(json!({ "ticks_per_second": ticks_per_second }))
            }
            "spawn" => {
                let s: Spawn = fields(p)?;
                let at = match s.at {
                    None => Placement::Random,
                    Some(At::Cell { x, y }) => Placement::At { x, y },
                    Some(At::Word(w)) if w == "random" => Placement::Random,
                    Some(At::Word(w)) => return Err(bad(format!("`at` must be {{x, y}} or \"random\", found \"{w}\""))),
                };
                self.submit(Command::Spawn {
                    name: s.name,
                    class: s.class,
                    at,
                    overrides: s.overrides,
                })
            }
            "set_property" => {
                let s: SetProperty = fields(p)?;
                self.submit(Command::Edit {
                    target: Target::Agent(s.agent),
                    edit: Edit::SetProperty { property: s.property, value: s.value },
                })
            }
            "assert_clause" => {
                let ClauseText { clause } = fields(p)?;
                self.edit(p, Edit::AssertClause { clause })
            }
            "retract_clause" => {
                let ClauseText { clause } = fields(p)?;
                self.edit(p, Edit::RetractClause { clause })
            }
            "add_effect" => {
                let edits = match fields::<AddEffect>(p)? {
                    AddEffect { text: Some(text), action: None, tendency: None, property: None } => {
                        let (action, effects) = parse_effect_decl(&text).map_err(|e| runtime_failure(e.into()))?;
                        effects
                            .into_iter()
                            .map(|e| Edit::AddEffect { action: action.clone(), tendency: e.tendency, property: e.property })
                            .collect::<Vec<_>>()
                    }
                    AddEffect { text: None, action: Some(action), tendency: Some(tendency), property: Some(property) } => {
                        vec![Edit::AddEffect { action, tendency, property }]
                    }
                    _ => return Err(bad("give either `text` or all of `action`, `tendency` and `property`")),
                };
                let target = target(p)?;
                let mut acks = Vec::new();
                // Validate everything before queueing anything.
                for edit in &edits {
                    self.sim.validate_edit(&target, edit).map_err(runtime_failure)?;
                }
                for edit in edits {
                    acks.push(self.submit(Command::Edit { target: target.clone(), edit })?);
                }
                Ok(if acks.len() == 1 { acks.remove(0) } else { json!(acks) })
            }
            "remove_effect" => {
                let RemoveEffect { action, property } = fields(p)?;
                self.edit(p, Edit::RemoveEffect { action, property })
            }
            "explain" => {
                let AgentName { agent } = fields(p)?;
                self.sim.explain(&agent).map(|e| json!(e)).map_err(runtime_failure)
            }
            "list_agents" => {
                let agents: Vec<Json> = self
                    .sim
                    .agents()
                    .iter()
                    .map(|a| {
                        let pos = self.sim.world().entity(&a.name).map(|e| (e.x, e.y));
                        json!({ "id": a.id, "name": a.name, "class": a.class, "x": pos.map(|p| p.0), "y": pos.map(|p| p.1) })
                    })
                    .collect();
                Ok(json!(agents))
            }
            "get_source" => {
                let ClassName { class } = fields(p)?;
                let source = self.sim.class_source(&class).map_err(runtime_failure)?;
                Ok(json!({ "class": class, "source": source }))
            }
            other => Err((ErrorCode::BadVerb, format!("unknown verb `{other}`"), None)),
        }
    }
}

fn pushes_for(report: TickReport) -> Vec<Push> {
    let tick = report.tick;
    let mut out = Vec::new();
    for a in &report.agents {
        if !a.edits_applied.is_empty() {
            out.push(Push::EditApplied {
                tick,
                agent: a.agent.clone(),
                edits: a.edits_applied.clone(),
                deltas: a.deltas.iter().filter(|d| d.by == "set").cloned().collect(),
            });
        }
        for e in &a.errors {
            out.push(Push::Log { tick, agent: a.agent.clone(), message: e.clone() });
        }
    }
    out.push(Push::TickReport { tick, dropped: 0, report });
    out
}
