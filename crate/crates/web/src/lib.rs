//! A single-page browser demo over the simulation runtime. [`DemoSession`]
//! holds the logic and is plain Rust; [`Demo`] is its JavaScript face.

use std::fmt;

use iag_core::dsl::{parse_effect_decl, parse_program, parse_value, ParseError};
use iag_core::runtime::{AgentReport, Command, Config, Edit, Simulation, Target, TickReport};
use wasm_bindgen::prelude::*;

/// The scenario the page starts with.
pub const DEFAULT_SOURCE: &str = include_str!("../../../scenarios/cat.iag");

/// A rejected input. `line`/`col` are 1-based positions in the text that
/// was submitted (the scenario source or the edit line).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoError {
    pub message: String,
    pub position: Option<(u32, u32)>,
}

impl DemoError {
    fn plain(message: impl fmt::Display) -> DemoError {
        DemoError { message: message.to_string(), position: None }
    }

    fn parse(e: &ParseError, col_offset: u32) -> DemoError {
        DemoError { message: e.to_string(), position: Some((e.span.line, e.span.col + col_offset)) }
    }
}

impl fmt::Display for DemoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            Some((line, col)) => write!(f, "{line}:{col}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

pub struct DemoSession {
    sim: Simulation,
}

impl DemoSession {
    pub fn new(source: &str, seed: Option<u64>) -> Result<DemoSession, DemoError> {
        let program = parse_program(source).map_err(|e| DemoError::parse(&e, 0))?;
        let sim = Simulation::load(&program, Config { seed, ..Config::default() }).map_err(DemoError::plain)?;
        Ok(DemoSession { sim })
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    /// Advances `n` ticks and returns one summary line per agent per tick.
    pub fn step(&mut self, n: u32) -> Vec<String> {
        (0..n).flat_map(|_| summary(&self.sim.tick())).collect()
    }

    /// Queues an edit for `agent` and returns the tick it takes effect at.
    /// Accepted lines: `assert <clause>`, `retract <clause>`,
    /// `effect <action> ensure: <tendency> <property>, ...` and
    /// `set <property> = <value>`.
    pub fn edit(&mut self, agent: &str, line: &str) -> Result<u64, DemoError> {
        let target = Target::Agent(agent.to_string());
        let edits = parse_edit(line)?;
        for edit in &edits {
            self.sim.validate_edit(&target, edit).map_err(DemoError::plain)?;
        }
        let mut tick = self.sim.tick_count() + 1;
        for edit in edits {
            tick = self.sim.submit(Command::Edit { target: target.clone(), edit }).map_err(DemoError::plain)?.tick;
        }
        Ok(tick)
    }

    pub fn explain(&self, agent: &str) -> Result<String, DemoError> {
        self.sim.explain(agent).map(|e| e.render()).map_err(DemoError::plain)
    }

    pub fn agents(&self) -> Vec<String> {
        self.sim.agents().iter().map(|a| a.name.clone()).collect()
    }

    pub fn snapshot_json(&self) -> String {
        serde_json::to_string(&self.sim.snapshot()).expect("snapshots serialize")
    }
}

fn parse_edit(line: &str) -> Result<Vec<Edit>, DemoError> {
    let trimmed = line.trim_start();
    let lead = (line.len() - trimmed.len()) as u32;
    let (verb, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
    let offset = lead + verb.len() as u32 + 1;
    let fail = |e: ParseError| DemoError::parse(&e, offset);
    match verb {
        "assert" | "retract" => {
            let clause = iag_core::dsl::parse_clause(rest).map_err(fail)?.to_string();
            Ok(vec![if verb == "assert" { Edit::AssertClause { clause } } else { Edit::RetractClause { clause } }])
        }
        "effect" => {
            let (action, effects) = parse_effect_decl(rest).map_err(fail)?;
            Ok(effects
                .into_iter()
                .map(|e| Edit::AddEffect { action: action.clone(), tendency: e.tendency, property: e.property })
                .collect())
        }
        "set" => {
            let (property, value) =
                rest.split_once('=').ok_or_else(|| DemoError::plain("expected `set <property> = <value>`"))?;
            let value_offset = offset + property.len() as u32 + 1;
            let value = parse_value(value).map_err(|e| DemoError::parse(&e, value_offset))?;
            Ok(vec![Edit::SetProperty { property: property.trim().to_string(), value }])
        }
        "" => Err(DemoError::plain("empty edit")),
        other => Err(DemoError::plain(format!("unknown edit `{other}`; use assert, retract, effect or set"))),
    }
}

fn agent_line(tick: u64, a: &AgentReport) -> String {
    let mut parts = Vec::new();
    if !a.edits_applied.is_empty() {
        parts.push(format!("applied {}", a.edits_applied.join("; ")));
    }
    if !a.actions_run.is_empty() {
        parts.push(a.actions_run.join(", "));
    } else if a.completed.is_some() {
        parts.push("idle".to_string());
    } else {
        parts.push(format!("deciding ({} steps)", a.cycle.steps));
    }
    parts.extend(a.errors.iter().map(|e| format!("error: {e}")));
    format!("tick {tick} {}: {}", a.agent, parts.join("; "))
}

fn summary(report: &TickReport) -> Vec<String> {
    report.agents.iter().map(|a| agent_line(report.tick, a)).collect()
}

fn js(e: DemoError) -> JsError {
    JsError::new(&e.to_string())
}

/// Errors surface as exceptions whose message starts with `line:col: `
/// when the input had a position.
#[wasm_bindgen]
pub struct Demo(DemoSession);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(source: &str, seed: Option<u32>) -> Result<Demo, JsError> {
        DemoSession::new(source, seed.map(u64::from)).map(Demo).map_err(js)
    }

    #[wasm_bindgen(js_name = defaultSource)]
    pub fn default_source() -> String {
        DEFAULT_SOURCE.to_string()
    }

    pub fn tick(&self) -> u32 {
        self.0.sim.tick_count() as u32
    }

    /// Summary lines joined with newlines.
    pub fn step(&mut self, n: u32) -> String {
        self.0.step(n).join("\n")
    }

    pub fn edit(&mut self, agent: &str, line: &str) -> Result<u32, JsError> {
        self.0.edit(agent, line).map(|t| t as u32).map_err(js)
    }

    pub fn explain(&self, agent: &str) -> Result<String, JsError> {
        self.0.explain(agent).map_err(js)
    }

    pub fn agents(&self) -> Vec<String> {
        self.0.agents()
    }

    /// The state snapshot as JSON.
    pub fn snapshot(&self) -> String {
        self.0.snapshot_json()
    }
}
