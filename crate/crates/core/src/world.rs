//! A small bounded grid shared by all agents, plus the builtin functions
//! that action and perception bodies may call.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{Placement, Value};

pub const DEFAULT_SIZE: u32 = 10;

/// Attempts at finding a free cell before a random placement settles for
/// an occupied one.
const PLACEMENT_TRIES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub kind: String,
    pub x: u32,
    pub y: u32,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuiltinError {
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("`{name}` takes {expected} argument(s), {found} given")]
    ArityError { name: String, expected: usize, found: usize },
    #[error("`{name}` expects a {expected} argument, found {found}")]
    ArgumentType { name: String, expected: &'static str, found: String },
}

/// The builtin catalog as `(name, arity)`.
pub const BUILTINS: &[(&str, usize)] = &[
    ("nearest", 1),
    ("move_toward", 1),
    ("move_away", 1),
    ("random", 0),
    ("consume", 1),
    ("distance_to", 1),
];

#[derive(Debug, Clone)]
pub struct WorldState {
    pub width: u32,
    pub height: u32,
    entities: BTreeMap<String, Entity>,
    rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(width: u32, height: u32, seed: u64) -> WorldState {
        WorldState {
            width: width.max(1),
            height: height.max(1),
            entities: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Place an entity. Random placement prefers unoccupied cells and draws
    /// from the world generator, so placement order matters.
    pub fn place(&mut self, id: &str, kind: &str, at: &Placement) -> &Entity {
        let (x, y) = match at {
            Placement::At { x, y } => ((*x).min(self.width - 1), (*y).min(self.height - 1)),
            Placement::Random => {
                let mut cell = self.random_cell();
                for _ in 0..PLACEMENT_TRIES {
                    if !self.occupied(cell) {
                        break;
                    }
                    cell = self.random_cell();
                }
                cell
            }
        };
        let e = Entity { id: id.to_string(), kind: kind.to_string(), x, y, alive: true };
        self.entities.insert(id.to_string(), e);
        &self.entities[id]
    }

    fn random_cell(&mut self) -> (u32, u32) {
        (self.rng.random_range(0..self.width), self.rng.random_range(0..self.height))
    }

    fn occupied(&self, (x, y): (u32, u32)) -> bool {
        self.entities.values().any(|e| e.alive && e.x == x && e.y == y)
    }

    pub fn distance(a: &Entity, b: &Entity) -> u32 {
        a.x.abs_diff(b.x).max(a.y.abs_diff(b.y))
    }

    /// Nearest living entity of `kind` other than `from`; ties go to the
    /// smaller id.
    pub fn nearest(&self, from: &str, kind: &str) -> Option<(&Entity, u32)> {
        let me = self.entities.get(from)?;
        self.entities
            .values()
            .filter(|e| e.alive && e.kind == kind && e.id != from)
            .map(|e| (e, Self::distance(me, e)))
            .min_by_key(|(_, d)| *d)
    }

    fn step(&mut self, who: &str, kind: &str, toward: bool) -> bool {
        let Some((target, _)) = self.nearest(who, kind) else { return false };
        let (tx, ty) = (target.x as i64, target.y as i64);
        let (w, h) = (self.width as i64, self.height as i64);
        let me = self.entities.get_mut(who).expect("caller exists");
        let sign = if toward { 1 } else { -1 };
        let dx = (tx - me.x as i64).signum() * sign;
        let dy = (ty - me.y as i64).signum() * sign;
        let nx = (me.x as i64 + dx).clamp(0, w - 1) as u32;
        let ny = (me.y as i64 + dy).clamp(0, h - 1) as u32;
        let moved = (nx, ny) != (me.x, me.y);
        me.x = nx;
        me.y = ny;
        moved
    }

    /// Evaluate builtin `name` on behalf of the entity `caller`.
    pub fn eval_builtin(&mut self, name: &str, args: &[Value], caller: &str) -> Result<Value, BuiltinError> {
        let arity = BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, a)| *a)
            .ok_or_else(|| BuiltinError::UnknownBuiltin(name.to_string()))?;
        if args.len() != arity {
            return Err(BuiltinError::ArityError { name: name.to_string(), expected: arity, found: args.len() });
        }
        let text_arg = |i: usize| -> Result<&str, BuiltinError> {
            match &args[i] {
                Value::Symbol(s) => Ok(s.as_str()),
                other => Err(BuiltinError::ArgumentType {
                    name: name.to_string(),
                    expected: "symbol",
                    found: other.to_string(),
                }),
            }
        };
        Ok(match name {
            "nearest" => {
                let kind = text_arg(0)?;
                Value::Number(self.nearest(caller, kind).map_or(f64::INFINITY, |(_, d)| d as f64))
            }
            "move_toward" => Value::Bool(self.step(caller, text_arg(0)?, true)),
            "move_away" => Value::Bool(self.step(caller, text_arg(0)?, false)),
            "random" => Value::Number(self.rng.random::<f64>()),
            "consume" => {
                let kind = text_arg(0)?;
                match self.nearest(caller, kind) {
                    Some((e, d)) if d <= 1 => {
                        let id = e.id.clone();
                        self.entities.get_mut(&id).expect("found above").alive = false;
                        Value::Bool(true)
                    }
                    _ => Value::Bool(false),
                }
            }
            "distance_to" => {
                let id = text_arg(0)?;
                let d = match (self.entities.get(caller), self.entities.get(id)) {
                    (Some(a), Some(b)) if b.alive => Self::distance(a, b) as f64,
                    _ => f64::INFINITY,
                };
                Value::Number(d)
            }
            _ => unreachable!("catalog checked above"),
        })
    }
}
