//! The deterministic simulation core.
//!
//! Each tick visits agents in ascending id order. An agent's slice first
//! applies its queued edits, then runs any scheduled perceptions, then
//! advances its decision cycle by at most `budget` resolution steps. A cycle
//! proves `main`, enumerates `intend(T, P)`, and on completion selects and
//! executes actions. Property reads made by the proof go through a read-only
//! view; when a consulted property is stale the proof pauses, the providing
//! perception runs, and the proof resumes.

mod command;
mod explain;
mod interp;
mod report;
mod store;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

pub use command::{parse_schedule, write_schedule, Command, Edit, LoggedCommand, Target};
pub use interp::{BodyError, Delta, Exec};
pub use report::{
    ActionInfo, ActionReason, AgentReport, AgentSnapshot, CycleProgress, CycleSummary, Explanation, MainStatus,
    Phase, ServedIntention, Snapshot, TickReport,
};
pub use store::{PropertyStore, Slot, StoreError};

use crate::dsl::{
    self, parse_clause, parse_query, ActionDecl, AgentClass, EffectAnnotation, Goal, ParseError, PerceptionDecl,
    Placement, Program, Value,
};
use crate::inference::{BlockedLiteral, ClauseDb, ProofTree, PropertyRead, PropertyView, Resolver, Status};
use crate::solver::{self, derive_intentions, ActionSelection, IntendSolution, Intention};
use crate::world::{WorldState, DEFAULT_SIZE};

pub type AgentId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    /// Resolution steps per agent per tick.
    pub budget: u64,
    /// A decision cycle that reaches this many steps is cut off and
    /// completed with the evidence gathered so far.
    pub max_cycle_steps: u64,
    /// Cap on `intend(T, P)` answers collected per cycle.
    pub max_intentions: usize,
    /// Largest candidate set searched exhaustively by the solver.
    pub exact_limit: usize,
    /// Overrides the scenario seed when set.
    pub seed: Option<u64>,
}

impl Default for Config {
    fn default() -> Config {
        Config { budget: 200, max_cycle_steps: 100_000, max_intentions: 64, exact_limit: solver::DEFAULT_EXACT_LIMIT, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuntimeError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("class `{class}` has no property `{property}`")]
    UnknownProperty { class: String, property: String },
    #[error("unknown target {0}")]
    UnknownTarget(Target),
    #[error("name `{0}` is already taken")]
    DuplicateName(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Parse(ParseError),
    #[error("agent `{0}` has not completed a decision cycle yet")]
    NoCycleYet(String),
    #[error("budget must be at least 1")]
    ZeroBudget,
}

impl From<ParseError> for RuntimeError {
    fn from(e: ParseError) -> Self {
        RuntimeError::Parse(e)
    }
}

/// Answer to an accepted command.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Ack {
    /// Tick at whose start the command takes effect.
    pub tick: u64,
    /// Agents the command reaches, by name.
    pub agents: Vec<String>,
}

/// Items an agent-level edit can make diverge from the class template.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Predicate(String, usize),
    Action(String),
    Property(String),
}

fn edit_item(edit: &Edit) -> Item {
    match edit {
        Edit::AssertClause { clause } | Edit::RetractClause { clause } => {
            let (name, arity) = parse_clause(clause).map(|c| c.key()).unwrap_or_default();
            Item::Predicate(name, arity)
        }
        Edit::AddEffect { action, .. } | Edit::RemoveEffect { action, .. } => Item::Action(action.clone()),
        Edit::SetProperty { property, .. } => Item::Property(property.clone()),
    }
}

struct MainOutcome {
    status: MainStatus,
    proof: Vec<ProofTree>,
    blocked: Vec<BlockedLiteral>,
    direct: Vec<String>,
}

enum Stage {
    /// Waiting to start at the agent's next slice.
    Fresh,
    Main(Resolver),
    Intend(Resolver, MainOutcome, Vec<IntendSolution>),
    /// Completed this tick; the next cycle starts next tick.
    Done,
}

struct Cycle {
    stage: Stage,
    started_tick: u64,
    steps: u64,
    warnings: Vec<String>,
}

impl Cycle {
    fn new(tick: u64) -> Cycle {
        Cycle { stage: Stage::Fresh, started_tick: tick, steps: 0, warnings: Vec::new() }
    }

    fn phase(&self) -> Phase {
        match self.stage {
            Stage::Fresh | Stage::Main(_) => Phase::Main,
            Stage::Intend(..) => Phase::Intend,
            Stage::Done => Phase::Completed,
        }
    }
}

/// Everything kept about an agent's last completed cycle.
#[derive(Debug, Clone)]
pub struct CompletedCycle {
    pub tick: u64,
    pub main: MainStatus,
    pub proof: Vec<ProofTree>,
    pub blocked: Vec<BlockedLiteral>,
    pub intentions: Vec<Intention>,
    pub selection: ActionSelection,
}

pub struct Agent {
    pub id: AgentId,
    pub name: String,
    pub class: String,
    pub props: PropertyStore,
    pub db: ClauseDb,
    /// Live copy of the class's actions with their effect annotations.
    pub actions: Vec<ActionDecl>,
    perceptions: Vec<PerceptionDecl>,
    cycle: Cycle,
    last: Option<CompletedCycle>,
    diverged: BTreeSet<Item>,
    pending: VecDeque<Edit>,
    perceived: BTreeMap<String, u64>,
    /// Executions per perception over the whole run.
    pub perception_runs: BTreeMap<String, u64>,
    /// Executions per action over the whole run.
    pub action_runs: BTreeMap<String, u64>,
}

impl Agent {
    pub fn last_cycle(&self) -> Option<&CompletedCycle> {
        self.last.as_ref()
    }

    pub fn perceptions(&self) -> &[PerceptionDecl] {
        &self.perceptions
    }

    /// True if reading `name` in `tick` must first run a perception.
    fn is_stale(&self, name: &str, tick: u64) -> bool {
        let Some(slot) = self.props.slot(name) else { return false };
        slot.last_write_tick < tick
            && self
                .perceptions
                .iter()
                .any(|p| p.provides.iter().any(|q| q == name) && self.perceived.get(&p.name) != Some(&tick))
    }
}

/// Read-only window on an agent's properties used during resolution.
struct View<'a> {
    agent: &'a Agent,
    tick: u64,
}

impl PropertyView for View<'_> {
    fn read(&self, name: &str) -> PropertyRead {
        match self.agent.props.get(name) {
            None => PropertyRead::Unknown,
            Some(_) if self.agent.is_stale(name, self.tick) => PropertyRead::Stale,
            Some(v) => PropertyRead::Value(v.clone()),
        }
    }
}

/// Counters for the read-only decision check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecisionAudit {
    /// `solve_step` calls observed.
    pub calls: u64,
    /// Calls across which an agent's property version changed.
    pub violations: u64,
}

pub struct Simulation {
    classes: BTreeMap<String, AgentClass>,
    agents: Vec<Agent>,
    world: WorldState,
    tick: u64,
    config: Config,
    next_id: AgentId,
    class_edits: Vec<(String, Edit)>,
    log: Vec<LoggedCommand>,
    audit: DecisionAudit,
    main_goal: Goal,
    intend_goal: Goal,
}

impl Simulation {
    /// An empty world holding `classes`, with no agents.
    pub fn new(classes: Vec<AgentClass>, config: Config) -> Simulation {
        let seed = config.seed.unwrap_or(0);
        Simulation::build(classes, WorldState::new(DEFAULT_SIZE, DEFAULT_SIZE, seed), config)
    }

    fn build(classes: Vec<AgentClass>, world: WorldState, config: Config) -> Simulation {
        Simulation {
            classes: classes.into_iter().map(|c| (c.name.clone(), c)).collect(),
            agents: Vec::new(),
            world,
            tick: 0,
            config,
            next_id: 1,
            class_edits: Vec::new(),
            log: Vec::new(),
            audit: DecisionAudit::default(),
            main_goal: parse_query("main").expect("static goal"),
            intend_goal: parse_query("intend(T, P)").expect("static goal"),
        }
    }

    /// Size the world, place entities and spawn the agents of the
    /// program's scenario block. Spawns are placed before entities, each in
    /// declaration order.
    pub fn load(program: &Program, config: Config) -> Result<Simulation, RuntimeError> {
        if config.budget == 0 {
            return Err(RuntimeError::ZeroBudget);
        }
        let scenario = program.scenario.clone().unwrap_or_default();
        let width = scenario.width.unwrap_or(DEFAULT_SIZE);
        let height = scenario.height.unwrap_or(DEFAULT_SIZE);
        if width == 0 || height == 0 {
            return Err(RuntimeError::Validation(format!("world must be at least 1x1, found {width}x{height}")));
        }
        let seed = config.seed.or(scenario.seed).unwrap_or(0);
        let mut sim = Simulation::build(program.classes.clone(), WorldState::new(width, height, seed), config);
        let in_bounds = |at: &Placement, name: &str| match at {
            Placement::At { x, y } if *x >= width || *y >= height => Err(RuntimeError::Validation(format!(
                "`{name}` placed at ({x}, {y}) outside the {width}x{height} world"
            ))),
            _ => Ok(()),
        };
        for s in &scenario.spawns {
            in_bounds(&s.at, &s.name)?;
            let overrides: BTreeMap<String, Value> = s.overrides.iter().cloned().collect();
            sim.spawn_agent(&s.name, &s.class, &overrides, &s.at)?;
        }
        for e in &scenario.entities {
            in_bounds(&e.at, &e.name)?;
            if sim.world.entity(&e.name).is_some() {
                return Err(RuntimeError::DuplicateName(e.name.clone()));
            }
            sim.world.place(&e.name, &e.kind, &e.at);
        }
        Ok(sim)
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn set_budget(&mut self, budget: u64) -> Result<(), RuntimeError> {
        if budget == 0 {
            return Err(RuntimeError::ZeroBudget);
        }
        self.config.budget = budget;
        Ok(())
    }

    /// Number of the last completed tick; 0 before the first.
    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn classes(&self) -> impl Iterator<Item = &AgentClass> {
        self.classes.values()
    }

    pub fn class(&self, name: &str) -> Option<&AgentClass> {
        self.classes.get(name)
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, name: &str) -> Option<&Agent> {
        self.agents.iter().find(|a| a.name == name)
    }

    fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.name == name)
    }

    pub fn audit(&self) -> DecisionAudit {
        self.audit
    }

    /// Accepted commands in receipt order, stamped with their tick.
    pub fn command_log(&self) -> &[LoggedCommand] {
        &self.log
    }

    /// Register a new instance of `class`. Its clause database starts as
    /// the class rules in textual order.
    pub fn spawn_agent(
        &mut self,
        name: &str,
        class: &str,
        overrides: &BTreeMap<String, Value>,
        at: &Placement,
    ) -> Result<AgentId, RuntimeError> {
        let template = self.classes.get(class).ok_or_else(|| RuntimeError::UnknownClass(class.to_string()))?;
        if self.world.entity(name).is_some() {
            return Err(RuntimeError::DuplicateName(name.to_string()));
        }
        let mut props = PropertyStore::from_decls(&template.properties);
        for (p, v) in overrides {
            match props.check(p, v) {
                Ok(()) => {}
                Err(StoreError::UnknownProperty(_)) => {
                    return Err(RuntimeError::UnknownProperty { class: class.to_string(), property: p.clone() })
                }
                Err(e) => return Err(RuntimeError::Validation(e.to_string())),
            }
        }
        for (p, v) in overrides {
            props.write(p, v.clone(), 0).expect("checked");
        }
        let mut db = ClauseDb::with_properties(&template.property_names());
        for rule in &template.rules {
            db.assert_clause(rule.clone());
        }
        let id = self.next_id;
        self.next_id += 1;
        self.agents.push(Agent {
            id,
            name: name.to_string(),
            class: class.to_string(),
            props,
            db,
            actions: template.actions.clone(),
            perceptions: template.perceptions.clone(),
            cycle: Cycle::new(self.tick + 1),
            last: None,
            diverged: BTreeSet::new(),
            pending: VecDeque::new(),
            perceived: BTreeMap::new(),
            perception_runs: BTreeMap::new(),
            action_runs: BTreeMap::new(),
        });
        self.world.place(name, class, at);
        Ok(id)
    }

    /// Validate and accept a command. Edits are queued for the target's
    /// next safe point; spawns take effect immediately. Accepted commands
    /// are logged with the tick they take effect in.
    pub fn submit(&mut self, command: Command) -> Result<Ack, RuntimeError> {
        let tick = self.tick + 1;
        let agents = match &command {
            Command::Spawn { name, class, at, overrides } => {
                if let Placement::At { x, y } = at {
                    if *x >= self.world.width || *y >= self.world.height {
                        return Err(RuntimeError::Validation(format!("({x}, {y}) is outside the world")));
                    }
                }
                self.spawn_agent(name, class, overrides, at)?;
                vec![name.clone()]
            }
            Command::Edit { target, edit } => {
                self.validate_edit(target, edit)?;
                match target {
                    Target::Agent(a) => {
                        let i = self.agent_index(a).expect("checked");
                        let agent = &mut self.agents[i];
                        agent.diverged.insert(edit_item(edit));
                        agent.pending.push_back(edit.clone());
                        vec![a.clone()]
                    }
                    Target::Class(c) => {
                        self.class_edits.push((c.clone(), edit.clone()));
                        let item = edit_item(edit);
                        self.agents
                            .iter()
                            .filter(|a| &a.class == c && !a.diverged.contains(&item))
                            .map(|a| a.name.clone())
                            .collect()
                    }
                }
            }
        };
        self.log.push(LoggedCommand { tick, command });
        Ok(Ack { tick, agents })
    }

    /// Check an edit against its target without queueing it.
    pub fn validate_edit(&self, target: &Target, edit: &Edit) -> Result<(), RuntimeError> {
        let class = match target {
            Target::Agent(a) => &self.agent(a).ok_or_else(|| RuntimeError::UnknownTarget(target.clone()))?.class,
            Target::Class(c) => c,
        };
        let class = self.classes.get(class).ok_or_else(|| RuntimeError::UnknownTarget(target.clone()))?;
        validate_edit(class, edit)
    }

    /// Convenience for agent-level edits.
    pub fn edit_agent(&mut self, agent: &str, edit: Edit) -> Result<Ack, RuntimeError> {
        self.submit(Command::Edit { target: Target::Agent(agent.to_string()), edit })
    }

    /// Advance every agent by one slice.
    pub fn tick(&mut self) -> TickReport {
        self.tick += 1;
        let tick = self.tick;
        self.apply_class_edits();
        let mut reports = Vec::with_capacity(self.agents.len());
        for i in 0..self.agents.len() {
            reports.push(self.advance_agent(i, tick));
        }
        TickReport { tick, agents: reports, world: self.world.entities().cloned().collect() }
    }

    pub fn run(&mut self, ticks: u64) -> Vec<TickReport> {
        (0..ticks).map(|_| self.tick()).collect()
    }

    /// Run `ticks` ticks, submitting each scheduled command just before
    /// the tick it is stamped with. Commands that fail validation are
    /// reported in order.
    pub fn run_schedule(&mut self, schedule: &[LoggedCommand], ticks: u64) -> (Vec<TickReport>, Vec<String>) {
        let mut errors = Vec::new();
        let mut reports = Vec::new();
        let mut pending = schedule.iter().peekable();
        for _ in 0..ticks {
            let next = self.tick + 1;
            while let Some(c) = pending.next_if(|c| c.tick <= next) {
                if let Err(e) = self.submit(c.command.clone()) {
                    errors.push(format!("tick {}: {e}", c.tick));
                }
            }
            reports.push(self.tick());
        }
        (reports, errors)
    }

    fn apply_class_edits(&mut self) {
        for (class, edit) in std::mem::take(&mut self.class_edits) {
            let item = edit_item(&edit);
            if let Some(template) = self.classes.get_mut(&class) {
                apply_to_class(template, &edit);
            }
            for agent in self.agents.iter_mut().filter(|a| a.class == class && !a.diverged.contains(&item)) {
                agent.pending.push_back(edit.clone());
            }
        }
    }

    /// Current value of `name`, running a providing perception first when
    /// the value was not written during the current tick.
    pub fn read_property(&mut self, agent: &str, name: &str) -> Result<Value, RuntimeError> {
        let i = self.agent_index(agent).ok_or_else(|| RuntimeError::UnknownTarget(Target::Agent(agent.to_string())))?;
        let a = &self.agents[i];
        if !a.props.contains(name) {
            return Err(RuntimeError::UnknownProperty { class: a.class.clone(), property: name.to_string() });
        }
        let tick = self.tick;
        let mut scratch = AgentReport::empty(a);
        self.run_stale_perceptions(i, name, tick, &mut scratch);
        Ok(self.agents[i].props.get(name).cloned().expect("declared"))
    }

    fn run_stale_perceptions(&mut self, i: usize, property: &str, tick: u64, report: &mut AgentReport) {
        let due: Vec<usize> = {
            let a = &self.agents[i];
            if !a.is_stale(property, tick) {
                return;
            }
            a.perceptions
                .iter()
                .enumerate()
                .filter(|(_, p)| p.provides.iter().any(|q| q == property) && a.perceived.get(&p.name) != Some(&tick))
                .map(|(k, _)| k)
                .collect()
        };
        for k in due {
            self.run_perception(i, k, tick, report);
        }
    }

    fn run_perception(&mut self, i: usize, k: usize, tick: u64, report: &mut AgentReport) {
        let agent = &mut self.agents[i];
        let p = &agent.perceptions[k];
        agent.perceived.insert(p.name.clone(), tick);
        *agent.perception_runs.entry(p.name.clone()).or_default() += 1;
        report.perceptions_run.push(p.name.clone());
        let mut exec = Exec {
            store: &mut agent.props,
            world: &mut self.world,
            caller: &agent.name,
            tick,
            by: format!("perception {}", p.name),
            deltas: &mut report.deltas,
        };
        if let Err(e) = exec.run(&p.body) {
            report.errors.push(format!("perception {}: {e}", p.name));
        }
    }

    fn run_action(&mut self, i: usize, name: &str, tick: u64, report: &mut AgentReport) {
        let agent = &mut self.agents[i];
        let Some(action) = agent.actions.iter().find(|a| a.name == name) else { return };
        *agent.action_runs.entry(name.to_string()).or_default() += 1;
        report.actions_run.push(name.to_string());
        let mut exec = Exec {
            store: &mut agent.props,
            world: &mut self.world,
            caller: &agent.name,
            tick,
            by: format!("action {name}"),
            deltas: &mut report.deltas,
        };
        if let Err(e) = exec.run(&action.body) {
            report.errors.push(format!("action {name}: {e}"));
        }
    }

    fn advance_agent(&mut self, i: usize, tick: u64) -> AgentReport {
        let mut report = AgentReport::empty(&self.agents[i]);

        // Safe point: queued edits.
        let edits: Vec<Edit> = self.agents[i].pending.drain(..).collect();
        let mut applied = false;
        for edit in edits {
            match self.apply_edit(i, &edit, tick, &mut report) {
                Ok(()) => {
                    applied = true;
                    report.edits_applied.push(edit.describe());
                }
                Err(e) => report.errors.push(format!("{}: {e}", edit.describe())),
            }
        }
        let agent = &mut self.agents[i];
        if applied || matches!(agent.cycle.stage, Stage::Done) {
            agent.cycle = Cycle::new(tick);
        }

        // Scheduled perceptions.
        let scheduled: Vec<usize> = agent
            .perceptions
            .iter()
            .enumerate()
            .filter(|(_, p)| p.every.is_some_and(|n| tick.is_multiple_of(n)))
            .map(|(k, _)| k)
            .collect();
        for k in scheduled {
            self.run_perception(i, k, tick, &mut report);
        }

        self.advance_cycle(i, tick, &mut report);
        let c = &self.agents[i].cycle;
        report.cycle = CycleProgress { started_tick: c.started_tick, phase: c.phase(), steps: c.steps };
        report
    }

    fn advance_cycle(&mut self, i: usize, tick: u64, report: &mut AgentReport) {
        let mut budget = self.config.budget;
        loop {
            let mut paused = false;
            let stage = std::mem::replace(&mut self.agents[i].cycle.stage, Stage::Done);
            let stage = match stage {
                Stage::Done => Stage::Done,
                Stage::Fresh => Stage::Main(Resolver::start(&self.agents[i].db, &self.main_goal)),
                Stage::Main(mut r) => match self.step_resolver(i, &mut r, &mut budget, tick, report) {
                    Step::Paused => {
                        paused = true;
                        Stage::Main(r)
                    }
                    Step::Again => Stage::Main(r),
                    Step::Finished(status) => {
                        let main = MainOutcome {
                            status: if status == Status::Succeeded { MainStatus::Succeeded } else { MainStatus::Failed },
                            proof: r.proof(),
                            blocked: r.blocked().to_vec(),
                            direct: self.direct_actions(i, &r),
                        };
                        self.agents[i].cycle.warnings.extend(r.warnings().iter().cloned());
                        if self.agents[i].db.has_predicate("intend", 2) {
                            Stage::Intend(Resolver::start(&self.agents[i].db, &self.intend_goal), main, Vec::new())
                        } else {
                            self.complete(i, main, Vec::new(), false, tick, report);
                            Stage::Done
                        }
                    }
                },
                Stage::Intend(mut r, main, mut found) => {
                    match self.step_resolver(i, &mut r, &mut budget, tick, report) {
                        Step::Paused => {
                            paused = true;
                            Stage::Intend(r, main, found)
                        }
                        Step::Again => Stage::Intend(r, main, found),
                        Step::Finished(Status::Succeeded) => {
                            let answer = r.answer();
                            found.push(IntendSolution {
                                tendency: answer["T"].clone(),
                                property: answer["P"].clone(),
                                rule: r.root_clause(),
                            });
                            r.next_solution().expect("after success");
                            let exhausted = r.status() == &Status::Failed;
                            if exhausted || found.len() >= self.config.max_intentions {
                                self.agents[i].cycle.warnings.extend(r.warnings().iter().cloned());
                                self.complete(i, main, found, !exhausted, tick, report);
                                Stage::Done
                            } else {
                                Stage::Intend(r, main, found)
                            }
                        }
                        Step::Finished(_) => {
                            self.agents[i].cycle.warnings.extend(r.warnings().iter().cloned());
                            self.complete(i, main, found, false, tick, report);
                            Stage::Done
                        }
                    }
                }
            };
            let stop = paused || budget == 0 || matches!(stage, Stage::Done);
            self.agents[i].cycle.stage = stage;
            if stop {
                return;
            }
        }
    }

    /// Run one `solve_step` call for agent `i`, auditing the property
    /// version across it and serving perception requests.
    fn step_resolver(&mut self, i: usize, r: &mut Resolver, budget: &mut u64, tick: u64, report: &mut AgentReport) -> Step {
        if *budget == 0 {
            return Step::Paused;
        }
        let agent = &self.agents[i];
        let limit = self.config.max_cycle_steps.saturating_sub(agent.cycle.steps);
        if limit == 0 {
            report.errors.push(format!("decision cycle cut off after {} steps", agent.cycle.steps));
            return Step::Finished(Status::Failed);
        }
        let before_version = agent.props.version();
        let before_steps = r.steps_used();
        let view = View { agent, tick };
        let status = match r.solve_step(&agent.db, &view, (*budget).min(limit)) {
            Ok(s) => s.clone(),
            Err(e) => {
                // Edits only land at safe points, so this is a defect.
                report.errors.push(format!("decision cycle aborted: {e}"));
                return Step::Finished(Status::Failed);
            }
        };
        self.audit.calls += 1;
        if self.agents[i].props.version() != before_version {
            self.audit.violations += 1;
        }
        let used = r.steps_used() - before_steps;
        *budget -= used;
        self.agents[i].cycle.steps += used;
        match status {
            Status::NeedsPerception { property } => {
                self.run_stale_perceptions(i, &property, tick, report);
                Step::Again
            }
            Status::Running | Status::Suspended => Step::Paused,
            done => Step::Finished(done),
        }
    }

    /// Declared actions proven as subgoals of `main`, in proof order.
    fn direct_actions(&self, i: usize, r: &Resolver) -> Vec<String> {
        let agent = &self.agents[i];
        let mut out: Vec<String> = Vec::new();
        for (name, arity) in r.proven_atoms() {
            if arity == 0 && agent.actions.iter().any(|a| a.name == name) && !out.contains(&name) {
                out.push(name);
            }
        }
        out
    }

    fn complete(
        &mut self,
        i: usize,
        main: MainOutcome,
        explicit: Vec<IntendSolution>,
        intend_truncated: bool,
        tick: u64,
        report: &mut AgentReport,
    ) {
        let mut valid = Vec::new();
        for s in explicit {
            match derive_intentions(std::slice::from_ref(&s), &[]) {
                Ok(_) => valid.push(s),
                Err(e) => report.errors.push(e.to_string()),
            }
        }
        let intentions = derive_intentions(&valid, &main.blocked).expect("validated");
        let agent = &self.agents[i];
        let mut selection = solver::select_action_set_with_limit(&agent.actions, &intentions, self.config.exact_limit);
        selection.direct = main.direct.clone();
        let mut to_run = selection.direct.clone();
        for a in &selection.solved {
            if !to_run.contains(a) {
                to_run.push(a.clone());
            }
        }
        for a in &to_run {
            self.run_action(i, a, tick, report);
        }
        let agent = &mut self.agents[i];
        let summary = CycleSummary {
            main: main.status,
            steps: agent.cycle.steps,
            intentions: intentions.clone(),
            blocked: main.blocked.clone(),
            selection: selection.clone(),
            intend_truncated,
            warnings: std::mem::take(&mut agent.cycle.warnings),
        };
        agent.last = Some(CompletedCycle {
            tick,
            main: main.status,
            proof: main.proof,
            blocked: main.blocked,
            intentions,
            selection,
        });
        report.completed = Some(summary);
    }

    fn apply_edit(&mut self, i: usize, edit: &Edit, tick: u64, report: &mut AgentReport) -> Result<(), String> {
        let agent = &mut self.agents[i];
        match edit {
            Edit::AssertClause { clause } => {
                agent.db.assert_clause(parse_clause(clause).map_err(|e| e.to_string())?);
            }
            Edit::RetractClause { clause } => {
                agent.db.retract_clause(&parse_clause(clause).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            }
            Edit::AddEffect { action, tendency, property } => {
                let a = agent.actions.iter_mut().find(|a| &a.name == action).ok_or(format!("no action `{action}`"))?;
                set_effect(a, *tendency, property);
            }
            Edit::RemoveEffect { action, property } => {
                let a = agent.actions.iter_mut().find(|a| &a.name == action).ok_or(format!("no action `{action}`"))?;
                remove_effect(a, property)?;
            }
            Edit::SetProperty { property, value } => {
                let old = agent.props.write(property, value.clone(), tick).map_err(|e| e.to_string())?;
                report.deltas.push(Delta { property: property.clone(), old, new: value.clone(), by: "set".into() });
            }
        }
        Ok(())
    }

    pub fn explain(&self, agent: &str) -> Result<Explanation, RuntimeError> {
        let a = self.agent(agent).ok_or_else(|| RuntimeError::UnknownTarget(Target::Agent(agent.to_string())))?;
        let last = a.last.as_ref().ok_or_else(|| RuntimeError::NoCycleYet(agent.to_string()))?;
        Ok(explain::explain(&a.name, last))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            tick: self.tick,
            width: self.world.width,
            height: self.world.height,
            entities: self.world.entities().cloned().collect(),
            agents: self
                .agents
                .iter()
                .map(|a| AgentSnapshot {
                    id: a.id,
                    name: a.name.clone(),
                    class: a.class.clone(),
                    properties: a.props.values(),
                    actions: a
                        .actions
                        .iter()
                        .map(|x| ActionInfo { name: x.name.clone(), effects: x.effects.clone() })
                        .collect(),
                    clauses: a.db.clauses().iter().map(|c| c.to_string()).collect(),
                    last_selection: a.last.as_ref().map(|l| l.selection.clone()),
                    last_intentions: a.last.as_ref().map(|l| l.intentions.clone()).unwrap_or_default(),
                    pending_edits: a.pending.len(),
                })
                .collect(),
        }
    }

    /// Source text of a class as currently defined, class-level edits
    /// included.
    pub fn class_source(&self, class: &str) -> Result<String, RuntimeError> {
        self.classes
            .get(class)
            .map(|c| c.to_string())
            .ok_or_else(|| RuntimeError::UnknownTarget(Target::Class(class.to_string())))
    }
}

enum Step {
    Paused,
    Again,
    Finished(Status),
}

impl AgentReport {
    fn empty(a: &Agent) -> AgentReport {
        AgentReport {
            agent: a.name.clone(),
            class: a.class.clone(),
            edits_applied: Vec::new(),
            perceptions_run: Vec::new(),
            cycle: CycleProgress { started_tick: a.cycle.started_tick, phase: a.cycle.phase(), steps: a.cycle.steps },
            completed: None,
            actions_run: Vec::new(),
            deltas: Vec::new(),
            errors: Vec::new(),
        }
    }
}

fn set_effect(action: &mut ActionDecl, tendency: dsl::Tendency, property: &str) {
    match action.effects.iter_mut().find(|e| e.property == property) {
        Some(e) => e.tendency = tendency,
        None => action.effects.push(EffectAnnotation { tendency, property: property.to_string() }),
    }
}

fn remove_effect(action: &mut ActionDecl, property: &str) -> Result<(), String> {
    let before = action.effects.len();
    action.effects.retain(|e| e.property != property);
    if action.effects.len() == before {
        return Err(format!("action `{}` declares no effect on `{property}`", action.name));
    }
    Ok(())
}

fn apply_to_class(class: &mut AgentClass, edit: &Edit) {
    match edit {
        Edit::AssertClause { clause } => {
            if let Ok(mut c) = parse_clause(clause) {
                c.mark_property_atoms(&class.property_names());
                class.rules.push(c);
            }
        }
        Edit::RetractClause { clause } => {
            if let Ok(pattern) = parse_clause(clause) {
                let mut db = ClauseDb::with_properties(&class.property_names());
                for r in &class.rules {
                    db.assert_clause(r.clone());
                }
                if db.retract_clause(&pattern).is_ok() {
                    class.rules = db.clauses().into_iter().cloned().collect();
                }
            }
        }
        Edit::AddEffect { action, tendency, property } => {
            if let Some(a) = class.actions.iter_mut().find(|a| &a.name == action) {
                set_effect(a, *tendency, property);
            }
        }
        Edit::RemoveEffect { action, property } => {
            if let Some(a) = class.actions.iter_mut().find(|a| &a.name == action) {
                let _ = remove_effect(a, property);
            }
        }
        Edit::SetProperty { property, value } => {
            if let Some(p) = class.properties.iter_mut().find(|p| &p.name == property) {
                p.initial = value.clone();
            }
        }
    }
}

fn validate_edit(class: &AgentClass, edit: &Edit) -> Result<(), RuntimeError> {
    let unknown_property =
        |p: &str| RuntimeError::UnknownProperty { class: class.name.clone(), property: p.to_string() };
    match edit {
        Edit::AssertClause { clause } | Edit::RetractClause { clause } => {
            parse_clause(clause)?;
        }
        Edit::AddEffect { action, property, .. } | Edit::RemoveEffect { action, property } => {
            if class.action(action).is_none() {
                return Err(RuntimeError::Validation(format!("class `{}` has no action `{action}`", class.name)));
            }
            if class.property(property).is_none() {
                return Err(unknown_property(property));
            }
        }
        Edit::SetProperty { property, value } => {
            let decl = class.property(property).ok_or_else(|| unknown_property(property))?;
            if !decl.initial.same_type(value) {
                return Err(RuntimeError::Validation(format!(
                    "property `{property}` holds a {}, cannot assign {value}",
                    decl.initial.type_name()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
