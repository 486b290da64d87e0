use serde_json::Value as Json;

use iag_core::runtime::{Phase, TickReport};
use iag_service::{Push, Response};

/// One line per agent, plus one per error.
pub fn tick_summary(report: &TickReport) -> String {
    let mut out = Vec::new();
    for a in &report.agents {
        let mut line = format!("tick {} {}: ", report.tick, a.agent);
        match &a.completed {
            Some(c) => {
                line += &if a.actions_run.is_empty() { "idle".to_string() } else { a.actions_run.join(", ") };
                if !c.intentions.is_empty() {
                    let wants: Vec<String> = c.intentions.iter().map(|i| i.describe()).collect();
                    line += &format!(" [{}]", wants.join("; "));
                }
            }
            None => {
                let phase = match a.cycle.phase {
                    Phase::Main => "main",
                    Phase::Intend => "intend",
                    Phase::Completed => "done",
                };
                line += &format!("deciding ({phase}, {} steps)", a.cycle.steps);
            }
        }
        out.push(line);
        out.extend(a.errors.iter().map(|e| format!("  ! {e}")));
    }
    if report.agents.is_empty() {
        out.push(format!("tick {}: no agents", report.tick));
    }
    out.join("\n")
}

pub fn push(p: &Push) -> String {
    match p {
        Push::TickReport { report, .. } => tick_summary(report),
        Push::EditApplied { tick, agent, edits, .. } => format!("tick {tick} {agent}: applied {}", edits.join("; ")),
        // Errors are part of the tick summary.
        Push::Log { .. } => String::new(),
    }
}

/// Human form of a response to a REPL command.
pub fn response(verb: &str, r: &Response) -> String {
    if let Some(e) = &r.error {
        let code = serde_json::to_value(e.code).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        return match e.span {
            Some(s) => format!("error ({code}) at column {}: {}", s.col, e.message),
            None => format!("error ({code}): {}", e.message),
        };
    }
    let payload = r.payload.clone().unwrap_or(Json::Null);
    match verb {
        "explain" => payload["text"].as_array().map(|l| l.iter().filter_map(Json::as_str).collect::<Vec<_>>().join("\n")).unwrap_or_default(),
        "get_source" => payload["source"].as_str().unwrap_or_default().trim_end().to_string(),
        "list_agents" => payload
            .as_array()
            .map(|a| {
                a.iter()
                    .map(|x| format!("{} {} ({}) at {}, {}", x["id"], x["name"].as_str().unwrap_or(""), x["class"].as_str().unwrap_or(""), x["x"], x["y"]))
                    .collect::<Vec<_>>()
                    .join("\n")
            })
            .unwrap_or_default(),
        "step" => String::new(),
        "assert_clause" | "retract_clause" | "add_effect" | "remove_effect" | "set_property" | "spawn" => {
            let acks = if payload.is_array() { payload.as_array().cloned().unwrap_or_default() } else { vec![payload] };
            let ack = &acks[0];
            let agents: Vec<&str> = ack["agents"].as_array().map(|a| a.iter().filter_map(Json::as_str).collect()).unwrap_or_default();
            format!("queued for tick {} ({})", ack["tick"], if agents.is_empty() { "no agents".into() } else { agents.join(", ") })
        }
        _ => serde_json::to_string_pretty(&payload).unwrap_or_default(),
    }
}
