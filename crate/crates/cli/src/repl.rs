//! Line syntax for the REPL. Every line becomes one service request, so
//! the REPL and a socket client have exactly the same powers.
//!
//! ```text
//! step [n]                         advance n ticks (default 1)
//! assert <target> <clause>         assert_clause, e.g. `assert cat1 eat :- not(danger).`
//! retract <target> <clause>        retract_clause
//! effect <target> <declaration>    add_effect, e.g. `effect cat1 mew ensure: reduce danger`
//! add_effect <target> <action> <tendency> <property>
//! remove_effect <target> <action> <property>
//! set <agent> <property> = <value>
//! spawn <name> <class> [at <x> <y>]
//! explain <agent> | agents | source <class> | snapshot | hello
//! ```
//!
//! A target is an agent name, or `class <name>` for every instance of a class.

use serde_json::{json, Map, Value as Json};

use iag_core::dsl::parse_value;
use iag_service::Request;

pub const HELP: &str = "\
step [n]                          advance n ticks
assert <target> <clause>          add a clause, e.g. assert cat1 eat :- not(danger).
retract <target> <clause>         remove the first matching clause
effect <target> <decl>            add effects, e.g. effect cat1 mew ensure: reduce danger
add_effect <target> <action> <tendency> <property>
remove_effect <target> <action> <property>
set <agent> <property> = <value>  overwrite a property
spawn <name> <class> [at <x> <y>] add an agent
explain <agent>                   why the agent did what it did
agents | source <class> | snapshot | hello | help | quit
targets are agent names or `class <name>`";

/// What a REPL line asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum Line {
    Empty,
    Help,
    Quit,
    Request(Request),
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim_start()),
        None => (s, ""),
    }
}

fn target(rest: &str) -> Result<(Map<String, Json>, &str), String> {
    let (first, rest) = split_word(rest);
    if first.is_empty() {
        return Err("missing target".into());
    }
    let mut m = Map::new();
    if first == "class" {
        let (class, rest) = split_word(rest);
        if class.is_empty() {
            return Err("missing class name".into());
        }
        m.insert("class".into(), class.into());
        Ok((m, rest))
    } else {
        m.insert("agent".into(), first.into());
        Ok((m, rest))
    }
}

fn words(rest: &str, n: usize, usage: &str) -> Result<Vec<String>, String> {
    let w: Vec<String> = rest.split_whitespace().map(String::from).collect();
    if w.len() == n {
        Ok(w)
    } else {
        Err(format!("usage: {usage}"))
    }
}

pub fn parse_line(line: &str, id: u64) -> Result<Line, String> {
    let (verb, rest) = split_word(line.trim());
    let request = |verb: &str, payload: Json| Ok(Line::Request(Request { id: json!(id), verb: verb.into(), payload }));
    match verb {
        "" => Ok(Line::Empty),
        "help" | "?" => Ok(Line::Help),
        "quit" | "exit" => Ok(Line::Quit),
        "step" | "tick" => {
            let n = if rest.is_empty() { 1 } else { rest.parse::<u64>().map_err(|_| format!("not a tick count: {rest}"))? };
            request("step", json!({ "n": n }))
        }
        "assert" | "assert_clause" | "retract" | "retract_clause" => {
            let (mut m, clause) = target(rest)?;
            if clause.is_empty() {
                return Err(format!("usage: {verb} <target> <clause>"));
            }
            m.insert("clause".into(), clause.into());
            request(if verb.starts_with("assert") { "assert_clause" } else { "retract_clause" }, Json::Object(m))
        }
        "effect" => {
            let (mut m, decl) = target(rest)?;
            m.insert("text".into(), decl.into());
            request("add_effect", Json::Object(m))
        }
        "add_effect" => {
            let (mut m, rest) = target(rest)?;
            let w = words(rest, 3, "add_effect <target> <action> <tendency> <property>")?;
            m.insert("action".into(), w[0].clone().into());
            m.insert("tendency".into(), w[1].clone().into());
            m.insert("property".into(), w[2].clone().into());
            request("add_effect", Json::Object(m))
        }
        "remove_effect" => {
            let (mut m, rest) = target(rest)?;
            let w = words(rest, 2, "remove_effect <target> <action> <property>")?;
            m.insert("action".into(), w[0].clone().into());
            m.insert("property".into(), w[1].clone().into());
            request("remove_effect", Json::Object(m))
        }
        "set" | "set_property" => {
            let (agent, rest) = split_word(rest);
            let (property, value) = rest.split_once('=').ok_or("usage: set <agent> <property> = <value>")?;
            let value = parse_value(value.trim()).map_err(|e| e.to_string())?;
            request("set_property", json!({ "agent": agent, "property": property.trim(), "value": value }))
        }
        "spawn" => {
            let w: Vec<&str> = rest.split_whitespace().collect();
            match w.as_slice() {
                [name, class] => request("spawn", json!({ "name": name, "class": class })),
                [name, class, "at", x, y] => {
                    let coord = |s: &str| s.parse::<u32>().map_err(|_| format!("not a coordinate: {s}"));
                    request("spawn", json!({ "name": name, "class": class, "at": { "x": coord(x)?, "y": coord(y)? } }))
                }
                _ => Err("usage: spawn <name> <class> [at <x> <y>]".into()),
            }
        }
        "explain" => request("explain", json!({ "agent": words(rest, 1, "explain <agent>")?[0] })),
        "source" | "get_source" => request("get_source", json!({ "class": words(rest, 1, "source <class>")?[0] })),
        "agents" | "list_agents" => request("list_agents", json!({})),
        "snapshot" | "hello" | "pause" | "resume" => request(verb, json!({})),
        other => Err(format!("unknown command `{other}` (try `help`)")),
    }
}
