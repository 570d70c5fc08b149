//! Bounded breadth-first exploration of every interleaving.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::generators::EnumCaps;
use crate::model::Configuration;
use crate::predicates::{is_correct, monitor_step};
use crate::semantics::{
    apply_step, enabled_steps, enabled_steps_all_choices, SelectStrategy, Step,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    /// Every reached state is correct.
    AllCorrect,
    /// No transition violates a monitor and no state is stuck.
    NoViolation,
    /// Some reached state is correct.
    ReachCorrect,
}

impl std::str::FromStr for Goal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all_correct" | "all-correct" => Ok(Goal::AllCorrect),
            "no_violation" | "no-violation" => Ok(Goal::NoViolation),
            "reach_correct" | "reach-correct" => Ok(Goal::ReachCorrect),
            _ => Err(format!("unknown goal {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branching {
    /// One successor per possible linearization pair.
    AllChoices,
    Strategy(SelectStrategy),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreConfig {
    pub branching: Branching,
    pub caps: EnumCaps,
    pub depth: usize,
    pub goal: Goal,
    pub max_states: usize,
}

impl ExploreConfig {
    pub fn new(goal: Goal, depth: usize, multiplicity: u32) -> Self {
        Self {
            branching: Branching::AllChoices,
            caps: EnumCaps {
                multiplicity,
                total: u32::MAX,
            },
            depth,
            goal,
            max_states: 5_000_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationResult {
    pub states: usize,
    pub transitions: u64,
    /// States over the caps: goal-checked, not expanded.
    pub boundary: usize,
    pub max_depth: usize,
    /// States first reached at the depth bound.
    pub depth_frontier: usize,
    /// The state budget ran out before the depth bound.
    pub partial: bool,
    pub correct_states: usize,
    pub stuck_states: usize,
    pub violations: Vec<String>,
    pub goal_holds: bool,
}

fn over_caps(c: &Configuration, caps: EnumCaps) -> bool {
    c.total_msgs() > caps.total as u64 || c.messages().any(|(_, _, k)| k > caps.multiplicity)
}

pub fn explore(init: &Configuration, cfg: &ExploreConfig) -> ExplorationResult {
    let mut res = ExplorationResult::default();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut frontier = vec![init.clone()];
    seen.insert(init.canonical_key());
    let mut depth = 0;
    let visit = |c: &Configuration, res: &mut ExplorationResult| {
        res.states += 1;
        if is_correct(c) {
            res.correct_states += 1;
        }
    };
    visit(init, &mut res);

    while !frontier.is_empty() {
        res.max_depth = depth;
        if depth >= cfg.depth {
            break;
        }
        let mut next = Vec::new();
        for c in &frontier {
            if over_caps(c, cfg.caps) {
                res.boundary += 1;
                continue;
            }
            let succ: Vec<Step> = match cfg.branching {
                Branching::AllChoices => enabled_steps_all_choices(c),
                Branching::Strategy(s) => enabled_steps(c, s),
            };
            if succ.is_empty() {
                res.stuck_states += 1;
            }
            for s in succ {
                let after = apply_step(c, &s).expect("enabled step applies");
                res.transitions += 1;
                let m = monitor_step(c, &s, &after);
                if !m.is_clean() && res.violations.len() < 20 {
                    res.violations.extend(
                        m.violations
                            .iter()
                            .map(|v| format!("depth {depth}: {}: {}", v.property, v.detail)),
                    );
                }
                if seen.insert(after.canonical_key()) {
                    visit(&after, &mut res);
                    next.push(after);
                    if seen.len() >= cfg.max_states {
                        res.partial = true;
                        break;
                    }
                }
            }
            if res.partial {
                break;
            }
        }
        frontier = next;
        depth += 1;
        if res.partial {
            res.max_depth = depth;
            break;
        }
    }
    if !res.partial && depth >= cfg.depth {
        res.depth_frontier = frontier.len();
    }

    let clean = res.violations.is_empty() && res.stuck_states == 0;
    res.goal_holds = match cfg.goal {
        Goal::AllCorrect => clean && res.correct_states == res.states,
        Goal::NoViolation => clean,
        Goal::ReachCorrect => res.correct_states > 0,
    };
    res
}
