use super::*;
use crate::dsl::{parse_program, Tendency};
use crate::inference::Polarity;

const CAT: &str = r#"
agent cat {
    property danger = false;
    property sexAppeal = 0;
    property energy = 100;

    perception lookAround provide: danger { }

    action run ensure: reduce danger { }
    action mew ensure: increase sexAppeal { }
    action eat { }

    rules {
        main :- eat.
        eat :- not(danger).
    }
}
"#;

fn sim_with(src: &str, config: Config) -> Simulation {
    Simulation::load(&parse_program(src).unwrap(), config).unwrap()
}

fn cat_sim(danger: bool) -> Simulation {
    let mut sim = sim_with(CAT, Config::default());
    let overrides = [("danger".to_string(), Value::Bool(danger))].into_iter().collect();
    sim.spawn_agent("cat1", "cat", &overrides, &Placement::At { x: 0, y: 0 }).unwrap();
    sim
}

fn completed(report: &TickReport, agent: &str) -> CycleSummary {
    report.agent(agent).unwrap().completed.clone().expect("cycle completed this tick")
}

fn mew_reduces_danger() -> Edit {
    Edit::AddEffect { action: "mew".into(), tendency: Tendency::Reduce, property: "danger".into() }
}

#[test]
fn spawn_uses_declared_values_and_overrides() {
    let mut sim = cat_sim(false);
    let cat = sim.agent("cat1").unwrap();
    assert_eq!(cat.id, 1);
    assert_eq!(cat.props.get("danger"), Some(&Value::Bool(false)));
    assert_eq!(cat.props.get("sexAppeal"), Some(&Value::Number(0.0)));
    assert_eq!(cat.props.get("energy"), Some(&Value::Number(100.0)));
    assert_eq!(cat.db.listing(), "main :- eat.\neat :- not(danger).\n");

    let low = [("energy".to_string(), Value::Number(5.0))].into_iter().collect();
    let id = sim.spawn_agent("cat2", "cat", &low, &Placement::Random).unwrap();
    assert_eq!(id, 2);
    assert_eq!(sim.agent("cat2").unwrap().props.get("energy"), Some(&Value::Number(5.0)));

    let none = BTreeMap::new();
    assert_eq!(
        sim.spawn_agent("u", "unicorn", &none, &Placement::Random),
        Err(RuntimeError::UnknownClass("unicorn".into()))
    );
    let bad = [("wings".to_string(), Value::Bool(true))].into_iter().collect();
    assert!(matches!(sim.spawn_agent("c3", "cat", &bad, &Placement::Random), Err(RuntimeError::UnknownProperty { .. })));
    assert!(matches!(sim.spawn_agent("cat1", "cat", &none, &Placement::Random), Err(RuntimeError::DuplicateName(_))));
}

#[test]
fn calm_cat_eats() {
    let mut sim = cat_sim(false);
    let report = sim.tick();
    assert_eq!(report.tick, 1);
    let c = completed(&report, "cat1");
    assert_eq!(c.main, MainStatus::Succeeded);
    assert_eq!(c.selection.direct, vec!["eat"]);
    assert!(c.selection.solved.is_empty());
    assert!(c.intentions.is_empty());
    assert_eq!(report.agent("cat1").unwrap().actions_run, vec!["eat"]);
}

#[test]
fn endangered_cat_runs() {
    let mut sim = cat_sim(true);
    let report = sim.tick();
    let c = completed(&report, "cat1");
    assert_eq!(c.main, MainStatus::Failed);
    assert!(c.selection.direct.is_empty());
    assert_eq!(c.intentions.len(), 1);
    assert_eq!((c.intentions[0].tendency, c.intentions[0].property.as_str()), (Tendency::Reduce, "danger"));
    assert_eq!(c.blocked[0].polarity, Polarity::RequiredFalse);
    assert_eq!(c.selection.solved, vec!["run"]);
    assert_eq!(report.agent("cat1").unwrap().actions_run, vec!["run"]);
}

#[test]
fn identical_runs_have_identical_traces() {
    let trace = || {
        let mut sim = cat_sim(true);
        sim.spawn_agent("cat2", "cat", &BTreeMap::new(), &Placement::Random).unwrap();
        sim.run(10).iter().map(TickReport::to_json_line).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(trace(), trace());
}

#[test]
fn on_demand_perception_runs_once_per_tick() {
    let mut sim = cat_sim(false);
    for _ in 0..7 {
        sim.tick();
    }
    assert_eq!(sim.agent("cat1").unwrap().perception_runs["lookAround"], 7);
    let i = sim.agent_index("cat1").unwrap();
    sim.agents[i].props.write("danger", Value::Bool(false), 3).unwrap();
    // Tick 7's slice already ran the perception; a later tick runs it again.
    sim.tick = 8;
    sim.read_property("cat1", "danger").unwrap();
    sim.read_property("cat1", "danger").unwrap();
    assert_eq!(sim.agent("cat1").unwrap().perception_runs["lookAround"], 8);
    // Nothing provides energy.
    assert_eq!(sim.read_property("cat1", "energy"), Ok(Value::Number(100.0)));
    assert_eq!(sim.agent("cat1").unwrap().perception_runs.len(), 1);
    assert!(matches!(sim.read_property("cat1", "wings"), Err(RuntimeError::UnknownProperty { .. })));
}

#[test]
fn fresh_writes_suppress_perception() {
    let mut sim = cat_sim(false);
    sim.tick = 4;
    let i = sim.agent_index("cat1").unwrap();
    sim.agents[i].props.write("danger", Value::Bool(true), 4).unwrap();
    assert_eq!(sim.read_property("cat1", "danger"), Ok(Value::Bool(true)));
    assert!(sim.agent("cat1").unwrap().perception_runs.is_empty());
}

#[test]
fn adding_an_effect_mid_run_makes_mew_selectable() {
    let mut sim = cat_sim(true);
    assert_eq!(completed(&sim.tick(), "cat1").selection.solved, vec!["run"]);
    let ack = sim.edit_agent("cat1", mew_reduces_danger()).unwrap();
    assert_eq!(ack.tick, 2);
    let report = sim.tick();
    assert_eq!(report.agent("cat1").unwrap().edits_applied, vec!["add_effect mew reduce danger"]);
    let c = completed(&report, "cat1");
    assert_eq!(c.selection.solved, vec!["mew", "run"]);
    assert_eq!(report.agent("cat1").unwrap().actions_run, vec!["mew", "run"]);
}

#[test]
fn retracting_main_removes_direct_actions() {
    let mut sim = cat_sim(false);
    assert_eq!(completed(&sim.tick(), "cat1").selection.direct, vec!["eat"]);
    sim.edit_agent("cat1", Edit::RetractClause { clause: "main :- eat.".into() }).unwrap();
    for report in sim.run(3) {
        let c = completed(&report, "cat1");
        assert!(c.selection.direct.is_empty());
        assert_eq!(c.main, MainStatus::Failed);
    }
}

#[test]
fn set_property_is_seen_by_the_next_consultation() {
    let mut sim = cat_sim(false);
    sim.tick();
    sim.edit_agent("cat1", Edit::SetProperty { property: "danger".into(), value: Value::Bool(true) }).unwrap();
    let report = sim.tick();
    let a = report.agent("cat1").unwrap();
    assert_eq!(a.deltas[0].by, "set");
    assert!(a.perceptions_run.is_empty());
    assert_eq!(completed(&report, "cat1").selection.solved, vec!["run"]);
    // The stub perception never overwrites it.
    assert_eq!(completed(&sim.tick(), "cat1").selection.solved, vec!["run"]);
}

#[test]
fn invalid_edits_are_rejected_up_front() {
    let mut sim = cat_sim(false);
    let bad_target = sim.edit_agent("dog9", mew_reduces_danger());
    assert!(matches!(bad_target, Err(RuntimeError::UnknownTarget(_))));
    let bad_prop = Edit::AddEffect { action: "mew".into(), tendency: Tendency::Reduce, property: "wings".into() };
    assert!(matches!(sim.edit_agent("cat1", bad_prop), Err(RuntimeError::UnknownProperty { .. })));
    let bad_action = Edit::RemoveEffect { action: "fly".into(), property: "danger".into() };
    assert!(matches!(sim.edit_agent("cat1", bad_action), Err(RuntimeError::Validation(_))));
    let bad_clause = Edit::AssertClause { clause: "eat :- not(danger".into() };
    match sim.edit_agent("cat1", bad_clause) {
        Err(RuntimeError::Parse(e)) => assert_eq!(e.span.line, 1),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let bad_type = Edit::SetProperty { property: "energy".into(), value: Value::Bool(true) };
    assert!(matches!(sim.edit_agent("cat1", bad_type), Err(RuntimeError::Validation(_))));
    assert!(sim.command_log().is_empty());
}

#[test]
fn failed_retract_is_logged_at_apply_time() {
    let mut sim = cat_sim(false);
    sim.edit_agent("cat1", Edit::RetractClause { clause: "sleep.".into() }).unwrap();
    let report = sim.tick();
    let a = report.agent("cat1").unwrap();
    assert!(a.edits_applied.is_empty());
    assert!(a.errors[0].contains("no clause matches"));
    assert_eq!(completed(&report, "cat1").selection.direct, vec!["eat"]);
}

#[test]
fn edits_are_isolated_per_agent() {
    let mut sim = cat_sim(true);
    sim.spawn_agent("cat2", "cat", &[("danger".to_string(), Value::Bool(true))].into_iter().collect(), &Placement::Random)
        .unwrap();
    sim.edit_agent("cat1", mew_reduces_danger()).unwrap();
    sim.edit_agent("cat1", Edit::AssertClause { clause: "hungry.".into() }).unwrap();
    let report = sim.tick();
    assert_eq!(completed(&report, "cat1").selection.solved, vec!["mew", "run"]);
    assert_eq!(completed(&report, "cat2").selection.solved, vec!["run"]);
    let cat2 = sim.agent("cat2").unwrap();
    assert_eq!(cat2.db.len(), 2);
    assert_eq!(cat2.actions, sim.class("cat").unwrap().actions);
}

#[test]
fn class_edits_fan_out_to_instances_that_have_not_diverged() {
    let mut sim = cat_sim(true);
    let danger = [("danger".to_string(), Value::Bool(true))].into_iter().collect();
    sim.spawn_agent("cat2", "cat", &danger, &Placement::Random).unwrap();
    // cat2 makes its own decision about mew first.
    sim.edit_agent("cat2", Edit::RemoveEffect { action: "mew".into(), property: "sexAppeal".into() }).unwrap();
    let ack = sim.submit(Command::Edit { target: Target::Class("cat".into()), edit: mew_reduces_danger() }).unwrap();
    assert_eq!(ack.agents, vec!["cat1"]);
    let report = sim.tick();
    assert_eq!(completed(&report, "cat1").selection.solved, vec!["mew", "run"]);
    assert_eq!(completed(&report, "cat2").selection.solved, vec!["run"]);
    assert!(sim.class_source("cat").unwrap().contains("action mew ensure: increase sexAppeal, reduce danger"));
    // Instances spawned later start from the edited class.
    sim.spawn_agent("cat3", "cat", &danger, &Placement::Random).unwrap();
    assert_eq!(completed(&sim.tick(), "cat3").selection.solved, vec!["mew", "run"]);
}

#[test]
fn small_budgets_spread_a_cycle_over_ticks() {
    let mut sim = sim_with(CAT, Config { budget: 1, ..Config::default() });
    sim.spawn_agent("cat1", "cat", &BTreeMap::new(), &Placement::Random).unwrap();
    // The proof takes 3 steps: ceil(3 / 1) ticks.
    let reports = sim.run(4);
    assert!(reports[0].agents[0].completed.is_none());
    assert_eq!(reports[0].agents[0].cycle.steps, 1);
    assert!(reports[1].agents[0].completed.is_none());
    let c = reports[2].agents[0].completed.as_ref().unwrap();
    assert_eq!(c.selection.direct, vec!["eat"]);
    assert_eq!(c.steps, 3);
    // The next cycle starts on the following tick.
    assert_eq!(reports[3].agents[0].cycle.started_tick, 4);
    // The perception ran once per tick in which danger was consulted.
    assert_eq!(sim.agent("cat1").unwrap().perception_runs["lookAround"], 1);
}

#[test]
fn edits_restart_an_in_flight_cycle() {
    let mut sim = sim_with(CAT, Config { budget: 1, ..Config::default() });
    sim.spawn_agent("cat1", "cat", &BTreeMap::new(), &Placement::Random).unwrap();
    sim.tick();
    sim.edit_agent("cat1", Edit::AssertClause { clause: "hungry.".into() }).unwrap();
    let r = sim.tick();
    assert_eq!(r.agents[0].cycle.started_tick, 2);
    assert_eq!(r.agents[0].cycle.steps, 1);
}

#[test]
fn read_only_decision_is_audited() {
    let mut sim = cat_sim(false);
    sim.run(20);
    let audit = sim.audit();
    assert!(audit.calls >= 20);
    assert_eq!(audit.violations, 0);
}

const WORLD_CAT: &str = r#"
agent cat {
    property danger = false;
    property sexAppeal = 1;
    property energy = 10;
    property ticks = 0;

    perception lookAround provide: danger { self.danger = nearest("dog") <= 3; }
    perception clock provide: ticks @every(5) { self.ticks = self.ticks + 5; }

    action run ensure: reduce danger { move_away("dog"); }
    action eat ensure: increase energy { self.energy = self.energy + 1; self.ticks = self.ticks / (self.energy - 12); }
    action hunt ensure: increase energy { move_toward("mouse"); }

    rules {
        main :- eat.
        eat :- not(danger).
        intend(increase, energy) :- getProperty(energy, E), lt(E, 50).
        intend(independent, sexAppeal) :- getProperty(sexAppeal, S), gt(S, 0).
    }
}
scenario {
    world 10 x 10;
    seed 42;
    spawn tom: cat at (0, 0);
    entity rex: dog at (2, 2);
    entity m1: mouse at (9, 9);
}
"#;

#[test]
fn world_scenario_runs_perceptions_and_builtins() {
    let mut sim = sim_with(WORLD_CAT, Config::default());
    assert_eq!(sim.world().len(), 3);
    let r = sim.tick();
    let c = completed(&r, "tom");
    assert_eq!(r.agents[0].perceptions_run, vec!["lookAround"]);
    assert_eq!(c.main, MainStatus::Failed);
    let pairs: Vec<(Tendency, &str)> = c.intentions.iter().map(|i| (i.tendency, i.property.as_str())).collect();
    assert_eq!(pairs, vec![(Tendency::Increase, "energy"), (Tendency::Reduce, "danger")]);
    assert!(matches!(&c.intentions[0].origin, solver::Origin::Explicit { rule: Some(r) } if r.starts_with("intend(increase, energy)")));
    // eat and hunt both increase energy, run reduces danger, none conflict.
    assert_eq!(c.selection.solved, vec!["eat", "hunt", "run"]);
    // `eat` divides by zero only once energy reaches 12.
    assert!(r.agents[0].errors.iter().all(|e| !e.starts_with("action")), "{:?}", r.agents[0].errors);
    let tom = r.world.iter().find(|e| e.id == "tom").unwrap();
    assert_eq!((tom.x, tom.y), (0, 0), "clamped at the corner");
}

#[test]
fn scheduled_perceptions_and_body_errors() {
    let mut sim = sim_with(WORLD_CAT, Config::default());
    let reports = sim.run(5);
    assert_eq!(reports[4].agents[0].perceptions_run, vec!["clock", "lookAround"]);
    assert_eq!(sim.agent("tom").unwrap().perception_runs["clock"], 1);
    // Energy climbs from 10; at 12 the eat body divides by zero.
    let errors: Vec<&String> = reports.iter().flat_map(|r| &r.agents[0].errors).collect();
    assert!(errors.iter().any(|e| e.contains("action eat: division by zero")), "{errors:?}");
    assert!(errors.iter().any(|e| e.contains("`independent`")), "{errors:?}");
    assert_eq!(reports.len(), 5);
}

#[test]
fn scenario_validation() {
    // The parser catches these with a position; load repeats the checks for
    // programs assembled in code.
    let unicorn = "agent cat { } scenario { spawn u: unicorn; }";
    let e = parse_program(unicorn).unwrap_err();
    assert_eq!((e.message.as_str(), e.span.col), ("unknown class `unicorn`", 35));
    let mut program = parse_program("agent cat { } scenario { spawn u: cat; }").unwrap();
    program.scenario.as_mut().unwrap().spawns[0].class = "unicorn".into();
    assert_eq!(Simulation::load(&program, Config::default()).err(), Some(RuntimeError::UnknownClass("unicorn".into())));

    let outside = "agent cat { } scenario { world 5 x 5; spawn c: cat at (5, 0); }";
    assert_eq!(parse_program(outside).unwrap_err().span.col, 55);
    let mut program = parse_program("agent cat { } scenario { world 5 x 5; spawn c: cat at (4, 0); }").unwrap();
    program.scenario.as_mut().unwrap().spawns[0].at = Placement::At { x: 5, y: 0 };
    assert!(matches!(Simulation::load(&program, Config::default()), Err(RuntimeError::Validation(_))));

    let e = parse_program("agent cat { property e = 1; } scenario { spawn c: cat with { e = true }; }").unwrap_err();
    assert!(e.message.contains("holds a number"), "{}", e.message);
    let e = parse_program("agent cat { } scenario { spawn c: cat with { wings = 2 }; }").unwrap_err();
    assert_eq!(e.message, "class `cat` has no property `wings`");
    let e = parse_program("scenario { entity d: dog at (10, 0); }").unwrap_err();
    assert!(e.message.contains("outside the 10x10 world"));
    let empty = Simulation::load(&parse_program("scenario { }").unwrap(), Config::default()).unwrap();
    assert!(empty.agents().is_empty());
    assert!(empty.world().is_empty());
    assert_eq!((empty.world().width, empty.world().height), (DEFAULT_SIZE, DEFAULT_SIZE));
}

#[test]
fn random_placement_is_fixed_by_seed() {
    let src = "agent cat { } scenario { world 10 x 10; seed 42; spawn c: cat; entity d: dog; }";
    let place = |seed: Option<u64>| {
        let sim = Simulation::load(&parse_program(src).unwrap(), Config { seed, ..Config::default() }).unwrap();
        sim.world().entities().map(|e| (e.x, e.y)).collect::<Vec<_>>()
    };
    assert_eq!(place(None), place(Some(42)));
    assert_eq!(place(None).len(), 2);
}

#[test]
fn explanation_for_the_endangered_cat() {
    let mut sim = cat_sim(true);
    assert_eq!(sim.explain("cat1").err(), Some(RuntimeError::NoCycleYet("cat1".into())));
    sim.tick();
    let e = sim.explain("cat1").unwrap();
    assert!(e.text.contains(
        &"run selected because intention reduce danger (from blocked not(danger) in rule eat :- not(danger).)"
            .to_string()
    ));
    assert_eq!(e.actions.len(), 1);
    assert_eq!(e.actions[0].serves[0].intention, "reduce danger");

    sim.edit_agent("cat1", mew_reduces_danger()).unwrap();
    sim.tick();
    let e = sim.explain("cat1").unwrap();
    let served: Vec<(&str, &str)> =
        e.actions.iter().map(|a| (a.action.as_str(), a.serves[0].intention.as_str())).collect();
    assert_eq!(served, vec![("mew", "reduce danger"), ("run", "reduce danger")]);
}

#[test]
fn explanation_for_an_empty_rule_set() {
    let mut sim = sim_with("agent blank { property p = false; }", Config::default());
    sim.spawn_agent("b", "blank", &BTreeMap::new(), &Placement::Random).unwrap();
    sim.tick();
    let e = sim.explain("b").unwrap();
    assert_eq!(e.main, MainStatus::Failed);
    assert_eq!(e.text, vec!["main unprovable, no intentions"]);
}

#[test]
fn explanation_for_the_calm_cat_shows_the_proof() {
    let mut sim = cat_sim(false);
    sim.tick();
    let text = sim.explain("cat1").unwrap().render();
    assert!(text.contains("main  [by main :- eat.]"), "{text}");
    assert!(text.contains("eat selected directly"), "{text}");
}

#[test]
fn schedule_replay_reproduces_a_live_session() {
    let mut live = cat_sim(true);
    let mut trace = Vec::new();
    trace.extend(live.run(3));
    live.edit_agent("cat1", mew_reduces_danger()).unwrap();
    live.submit(Command::Spawn {
        name: "cat2".into(),
        class: "cat".into(),
        at: Placement::Random,
        overrides: BTreeMap::new(),
    })
    .unwrap();
    trace.extend(live.run(2));
    live.edit_agent("cat1", Edit::SetProperty { property: "danger".into(), value: Value::Bool(false) }).unwrap();
    trace.extend(live.run(3));
    let schedule = parse_schedule(&write_schedule(live.command_log())).unwrap();
    assert_eq!(schedule.iter().map(|c| c.tick).collect::<Vec<_>>(), vec![4, 4, 6]);

    let mut replay = cat_sim(true);
    let (replayed, errors) = replay.run_schedule(&schedule, 8);
    assert!(errors.is_empty());
    let a: Vec<String> = trace.iter().map(TickReport::to_json_line).collect();
    let b: Vec<String> = replayed.iter().map(TickReport::to_json_line).collect();
    assert_eq!(a, b);
}

#[test]
fn snapshot_lists_live_state() {
    let mut sim = cat_sim(true);
    sim.tick();
    let snap = sim.snapshot();
    assert_eq!(snap.tick, 1);
    assert_eq!(snap.agents[0].clauses, vec!["main :- eat.", "eat :- not(danger)."]);
    assert_eq!(snap.agents[0].last_selection.as_ref().unwrap().solved, vec!["run"]);
    assert_eq!(snap.entities.len(), 1);
}
