//! Qualitative action selection.
//!
//! Intentions come from two places: explicit `intend(T, P)` conclusions and
//! property-atoms that blocked the proof of `main`. Actions declare their
//! effects with the same four tendencies. An action earns +1 for every
//! intention it serves, -1 for every intention it works against, and the
//! selected set is the best-scoring group of mutually compatible actions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::{self, ActionDecl, Tendency};
use crate::inference::{BlockedLiteral, Polarity};

/// Exact subset search is used up to this many candidate actions.
pub const DEFAULT_EXACT_LIMIT: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "snake_case")]
pub enum Origin {
    /// Concluded by `intend/2`, through the given rule.
    Explicit { rule: Option<String> },
    /// Derived from a property-atom that blocked the decision proof.
    Blocked { literal: String, rule: Option<String> },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Explicit { rule: Some(r) } => write!(f, "concluded by rule {r}"),
            Origin::Explicit { rule: None } => write!(f, "concluded by intend/2"),
            Origin::Blocked { literal, rule: Some(r) } => write!(f, "from blocked {literal} in rule {r}"),
            Origin::Blocked { literal, rule: None } => write!(f, "from blocked {literal} in the goal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intention {
    pub tendency: Tendency,
    pub property: String,
    pub origin: Origin,
}

impl Intention {
    pub fn describe(&self) -> String {
        format!("{} {}", self.tendency, self.property)
    }
}

/// One answer to `intend(T, P)`, with the rule that concluded it.
#[derive(Debug, Clone, PartialEq)]
pub struct IntendSolution {
    pub tendency: dsl::Term,
    pub property: dsl::Term,
    pub rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("`intend/2` concluded tendency `{0}`; only increase, reduce and maintain can be intended")]
    InvalidTendency(String),
    #[error("`intend/2` concluded `{0}` which is not a property name")]
    InvalidProperty(String),
}

/// Turn one decision cycle's evidence into a duplicate-free intention list.
/// Explicit intentions come first; a blocked-literal intention equal to an
/// explicit one is dropped.
pub fn derive_intentions(
    explicit: &[IntendSolution],
    blocked: &[BlockedLiteral],
) -> Result<Vec<Intention>, SolverError> {
    let mut out: Vec<Intention> = Vec::new();
    for s in explicit {
        let tendency = match &s.tendency {
            dsl::Term::Atom(a) => match Tendency::from_keyword(a) {
                Some(Tendency::Independent) | None => return Err(SolverError::InvalidTendency(a.clone())),
                Some(t) => t,
            },
            other => return Err(SolverError::InvalidTendency(other.to_string())),
        };
        let property = match &s.property {
            dsl::Term::Atom(p) => p.clone(),
            other => return Err(SolverError::InvalidProperty(other.to_string())),
        };
        push_unique(&mut out, Intention { tendency, property, origin: Origin::Explicit { rule: s.rule.clone() } });
    }
    for b in blocked {
        let tendency = match b.polarity {
            Polarity::RequiredFalse => Tendency::Reduce,
            Polarity::RequiredTrue => Tendency::Increase,
        };
        push_unique(
            &mut out,
            Intention {
                tendency,
                property: b.property.clone(),
                origin: Origin::Blocked { literal: b.literal(), rule: b.clause.clone() },
            },
        );
    }
    Ok(out)
}

fn push_unique(out: &mut Vec<Intention>, i: Intention) {
    if !out.iter().any(|o| o.tendency == i.tendency && o.property == i.property) {
        out.push(i);
    }
}

/// +1 when the declared effect is the intended tendency, -1 when it works
/// against it, 0 otherwise.
pub fn match_tendency(declared: Tendency, intended: Tendency) -> i64 {
    use Tendency::*;
    match (declared, intended) {
        (Independent, _) | (_, Independent) => 0,
        (a, b) if a == b => 1,
        _ => -1,
    }
}

/// Two declared effects on the same property that cannot hold together.
pub fn tendencies_conflict(a: Tendency, b: Tendency) -> bool {
    use Tendency::*;
    matches!(
        (a, b),
        (Increase, Reduce) | (Reduce, Increase) | (Maintain, Increase | Reduce) | (Increase | Reduce, Maintain)
    )
}

pub fn score_action(action: &ActionDecl, intentions: &[Intention]) -> i64 {
    intentions
        .iter()
        .filter_map(|i| action.effect_on(&i.property).map(|t| match_tendency(t, i.tendency)))
        .sum()
}

pub fn actions_conflict(a: &ActionDecl, b: &ActionDecl) -> bool {
    a.effects
        .iter()
        .any(|e| b.effect_on(&e.property).is_some_and(|t| tendencies_conflict(e.tendency, t)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSelection {
    /// Actions proven directly as subgoals of `main`.
    pub direct: Vec<String>,
    /// Actions chosen by scoring, sorted by name.
    pub solved: Vec<String>,
    pub scores: BTreeMap<String, i64>,
    /// Intentions each solved action serves.
    pub explanation: BTreeMap<String, Vec<String>>,
    /// Set when the candidate count exceeded the exact-search limit and
    /// a greedy pass was used instead.
    pub greedy: bool,
}

impl ActionSelection {
    pub fn total_score(&self) -> i64 {
        self.solved.iter().map(|a| self.scores[a]).sum()
    }
}

pub fn select_action_set(actions: &[ActionDecl], intentions: &[Intention]) -> ActionSelection {
    select_action_set_with_limit(actions, intentions, DEFAULT_EXACT_LIMIT)
}

/// Best-scoring set of pairwise compatible actions with positive scores.
/// Ties go to the lexicographically smallest sorted name list.
pub fn select_action_set_with_limit(
    actions: &[ActionDecl],
    intentions: &[Intention],
    exact_limit: usize,
) -> ActionSelection {
    let scores: BTreeMap<String, i64> = actions.iter().map(|a| (a.name.clone(), score_action(a, intentions))).collect();
    let mut candidates: Vec<&ActionDecl> = actions.iter().filter(|a| scores[&a.name] > 0).collect();
    candidates.sort_by(|a, b| a.name.cmp(&b.name));
    candidates.dedup_by(|a, b| a.name == b.name);

    let n = candidates.len();
    let mut conflicts = vec![0u64; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && actions_conflict(candidates[i], candidates[j]) {
                conflicts[i] |= 1 << j;
            }
        }
    }
    let weights: Vec<i64> = candidates.iter().map(|a| scores[&a.name]).collect();

    let (chosen, greedy) = if n <= exact_limit && n < 64 {
        let mut search = Search { conflicts: &conflicts, weights: &weights, best: 0, best_set: Vec::new() };
        let mut suffix = vec![0i64; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + weights[i];
        }
        search.run(0, 0, 0, &mut Vec::new(), &suffix);
        (search.best_set, false)
    } else {
        // Highest score first, then name.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
        let mut taken = 0u64;
        let mut set = Vec::new();
        for i in order {
            if conflicts[i] & taken == 0 {
                taken |= 1 << i;
                set.push(i);
            }
        }
        set.sort_unstable();
        (set, true)
    };

    let solved: Vec<String> = chosen.iter().map(|&i| candidates[i].name.clone()).collect();
    let explanation = chosen
        .iter()
        .map(|&i| {
            let a = candidates[i];
            let served: Vec<String> = intentions
                .iter()
                .filter(|it| a.effect_on(&it.property).is_some_and(|t| match_tendency(t, it.tendency) > 0))
                .map(Intention::describe)
                .collect();
            (a.name.clone(), served)
        })
        .collect();
    ActionSelection { direct: Vec::new(), solved, scores, explanation, greedy }
}

struct Search<'a> {
    conflicts: &'a [u64],
    weights: &'a [i64],
    best: i64,
    best_set: Vec<usize>,
}

impl Search<'_> {
    // Candidates are in name order, so index order is name order and the
    // first set reaching a score, in this include-first enumeration, is not
    // necessarily the smallest; ties are compared explicitly.
    fn run(&mut self, i: usize, taken: u64, score: i64, set: &mut Vec<usize>, suffix: &[i64]) {
        if i == self.weights.len() {
            if score > self.best || (score == self.best && score > 0 && set.as_slice() < self.best_set.as_slice()) {
                self.best = score;
                self.best_set = set.clone();
            }
            return;
        }
        if score + suffix[i] < self.best {
            return;
        }
        if self.conflicts[i] & taken == 0 {
            set.push(i);
            self.run(i + 1, taken | (1 << i), score + self.weights[i], set, suffix);
            set.pop();
        }
        self.run(i + 1, taken, score, set, suffix);
    }
}
