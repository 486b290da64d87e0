use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value as Json};
use tungstenite::Message;

fn iag() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iag"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn scratch(test: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("iag-cli-{}-{test}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    iag().args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_one_trace_line_per_tick_deterministically() {
    let dir = scratch("trace");
    let (a, b) = (dir.join("a.jsonl"), dir.join("b.jsonl"));
    let cat = scenario("cat.iag");
    for out in [&a, &b] {
        let o = run(&["run", path(&cat), "--ticks", "20", "--seed", "42", "--trace", path(out), "--quiet"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    let trace = std::fs::read(&a).unwrap();
    assert_eq!(trace, std::fs::read(&b).unwrap());
    let lines: Vec<Json> = String::from_utf8(trace).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 20);
    assert_eq!(lines.iter().map(|l| l["tick"].as_u64().unwrap()).collect::<Vec<_>>(), (1..=20).collect::<Vec<_>>());

    // A different seed moves the dog.
    let c = dir.join("c.jsonl");
    run(&["run", path(&cat), "--ticks", "20", "--seed", "7", "--trace", path(&c), "--quiet"]);
    assert_ne!(std::fs::read(&c).unwrap(), std::fs::read(&a).unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn trace_to_stdout_and_summaries() {
    let o = run(&["run", path(&scenario("fig4.iag")), "--ticks", "2", "--trace", "-"]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().all(|l| l.starts_with('{')));
    let o = run(&["run", path(&scenario("fig4.iag")), "--ticks", "2"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "tick 1 cat1: eat\ntick 2 cat1: eat\n");
}

#[test]
fn rejections_exit_1_with_a_position() {
    let dir = scratch("reject");
    let bad = dir.join("bad.iag");
    std::fs::write(&bad, "agent cat {\n    rules { eat :- not(danger. }\n}\n").unwrap();
    let o = run(&["run", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with(&format!("{}:2:30:", bad.display())), "{err}");

    std::fs::write(&bad, "agent cat { }\nscenario {\n    spawn u: unicorn;\n}\n").unwrap();
    let o = run(&["check", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("bad.iag:3:14: validation error: unknown class `unicorn`"));

    assert_eq!(run(&["run", path(&dir.join("missing.iag"))]).status.code(), Some(1));
    assert_eq!(run(&["run", path(&scenario("cat.iag")), "--budget", "0"]).status.code(), Some(1));
    let o = run(&["run", path(&scenario("cat.iag")), "--serve", "--replay", "x"]);
    assert_eq!(o.status.code(), Some(1));

    let schedule = dir.join("s.jsonl");
    std::fs::write(&schedule, "not json\n").unwrap();
    assert_eq!(run(&["run", path(&scenario("cat.iag")), "--replay", path(&schedule)]).status.code(), Some(1));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn replay_failures_exit_2() {
    let dir = scratch("exit2");
    let schedule = dir.join("s.jsonl");
    std::fs::write(&schedule, r#"{"tick":1,"command":"edit","target":{"agent":"ghost"},"edit":{"op":"assert_clause","clause":"x."}}"#).unwrap();
    let o = run(&["run", path(&scenario("cat.iag")), "--ticks", "3", "--replay", path(&schedule), "--quiet"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("ghost"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn check_reports_ok() {
    let o = run(&["check", path(&scenario("chase.iag"))]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("ok (2 classes, 2 agents)"));
}

fn repl(file: &Path, extra: &[&str], input: &str) -> String {
    let mut child = iag().arg("repl").arg(file).args(extra).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn repl_session_replays_through_run() {
    let dir = scratch("repl");
    let (trace, record, replayed) = (dir.join("live.jsonl"), dir.join("edits.jsonl"), dir.join("replay.jsonl"));
    let out = repl(
        &scenario("cat.iag"),
        &["--trace", path(&trace), "--record", path(&record)],
        "step 3\neffect cat1 mew ensure: reduce danger\nassert cat1 eat :- not(danger).\nstep 4\nset cat1 energy = 5\nstep 3\nexplain cat1\n",
    );
    assert!(out.contains("queued for tick 4 (cat1)"), "{out}");
    assert!(out.contains("tick 4 cat1: applied add_effect mew reduce danger; assert eat :- not(danger)."), "{out}");
    let o = run(&["run", path(&scenario("cat.iag")), "--ticks", "10", "--replay", path(&record), "--trace", path(&replayed), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let live = std::fs::read(&trace).unwrap();
    assert_eq!(String::from_utf8_lossy(&live).lines().count(), 10);
    assert_eq!(std::fs::read(&replayed).unwrap(), live);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn repl_reports_errors_and_keeps_going() {
    let out = repl(&scenario("fig4.iag"), &[], "assert cat1 eat :- not(danger\nfly\nexplain cat1\nexplain dog\nstep\nhelp\nquit\nstep\n");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "error (bad_payload) at column 18: syntax error: expected `)`, found end of input");
    assert_eq!(lines[1], "error: unknown command `fly` (try `help`)");
    assert_eq!(lines[2], "error (no_cycle_yet): agent `cat1` has not completed a decision cycle yet");
    assert_eq!(lines[3], "error (target_not_found): unknown target agent dog");
    assert_eq!(lines[4], "tick 1 cat1: eat");
    assert!(out.contains("targets are agent names"));
    assert!(!out.contains("tick 2"));
}

struct Served(std::process::Child);

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn call(ws: &mut tungstenite::WebSocket<tungstenite::stream::MaybeTlsStream<std::net::TcpStream>>, id: u64, verb: &str, payload: Json) -> Json {
    ws.send(Message::text(json!({"id": id, "verb": verb, "payload": payload}).to_string())).unwrap();
    loop {
        let Message::Text(t) = ws.read().unwrap() else { continue };
        let m: Json = serde_json::from_str(&t).unwrap();
        if m["type"] == "response" && m["id"] == id {
            return m;
        }
    }
}

#[test]
fn scripted_socket_session_replays_byte_for_byte() {
    let dir = scratch("serve");
    let (trace, record, replayed) = (dir.join("ui.jsonl"), dir.join("ui-edits.jsonl"), dir.join("replay.jsonl"));
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let fig4 = scenario("fig4.iag");
    let child = iag()
        .args(["run", path(&fig4), "--serve", "--port", &port.to_string(), "--trace", path(&trace), "--record", path(&record)])
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let server = Served(child);
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut ws = loop {
        match tungstenite::connect(format!("ws://127.0.0.1:{port}")) {
            Ok((ws, _)) => break ws,
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => panic!("{e}"),
        }
    };
    assert_eq!(call(&mut ws, 1, "hello", json!({}))["payload"]["protocol"], "iag/1");
    call(&mut ws, 2, "set_property", json!({"agent": "cat1", "property": "danger", "value": true}));
    call(&mut ws, 3, "step", json!({"n": 2}));
    assert_eq!(call(&mut ws, 4, "add_effect", json!({"agent": "cat1", "text": "mew ensure: reduce danger"}))["ok"], true);
    call(&mut ws, 5, "step", json!({"n": 2}));
    let explanation = call(&mut ws, 6, "explain", json!({"agent": "cat1"}));
    let text = explanation["payload"]["text"].as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect::<Vec<_>>().join("\n");
    for token in ["danger", "run", "reduce", "mew"] {
        assert!(text.contains(token), "{token} missing from\n{text}");
    }
    let shown = call(&mut ws, 7, "snapshot", json!({}));
    assert_eq!(shown["payload"]["tick"], 4);
    drop(ws);
    drop(server);

    let o = run(&["run", path(&fig4), "--ticks", "4", "--replay", path(&record), "--trace", path(&replayed), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let live = std::fs::read(&trace).unwrap();
    assert_eq!(String::from_utf8_lossy(&live).lines().count(), 4);
    assert_eq!(std::fs::read(&replayed).unwrap(), live);
    std::fs::remove_dir_all(dir).unwrap();
}
