//! Fair schedulers and the perfect-oracle keep-alive filter.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Configuration, ProcSet, ProcessId};
use crate::predicates::{directed_lin_pattern, undirected_lin_pattern};
use crate::semantics::Step;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerPolicy {
    /// Weighted random choice; a skipped class gains `aging` weight per round.
    FairRandom { seed: u64, aging: u64 },
    /// Random choice, except that a message older than `delay_bound` rounds or
    /// a process without a match step for `match_bound` rounds is served first.
    BoundedDelay {
        seed: u64,
        delay_bound: u64,
        match_bound: u64,
    },
}

impl SchedulerPolicy {
    pub fn fair(seed: u64) -> Self {
        SchedulerPolicy::FairRandom { seed, aging: 1 }
    }

    pub fn bounded(seed: u64, n: usize) -> Self {
        SchedulerPolicy::BoundedDelay {
            seed,
            delay_bound: 4 * n as u64,
            match_bound: 2 * n as u64,
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            SchedulerPolicy::FairRandom { seed, .. }
            | SchedulerPolicy::BoundedDelay { seed, .. } => seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Match,
    Rec,
    Add,
}

fn class_of(s: &Step) -> Class {
    match s {
        Step::Receive { .. } => Class::Rec,
        Step::Add { .. } => Class::Add,
        _ => Class::Match,
    }
}

/// Per-run scheduler state. Deterministic given policy and the sequence of
/// (configuration, enabled) inputs.
#[derive(Clone, Debug)]
pub struct Scheduler {
    policy: SchedulerPolicy,
    rng: ChaCha8Rng,
    round: u64,
    /// Rounds a class has been enabled without being chosen, indexed
    /// `3 * p + class`.
    age: Vec<u64>,
    /// Round of the last match step (or last round the match was blocked).
    last_match: Vec<u64>,
    /// Birth rounds of in-transit messages per (receiver, payload), oldest
    /// first. Only maintained for bounded delay.
    births: Vec<VecDeque<u64>>,
    enabled_class: Vec<bool>,
    weights: Vec<u64>,
}

impl Scheduler {
    pub fn new(policy: SchedulerPolicy, n: usize) -> Self {
        Self {
            policy,
            rng: ChaCha8Rng::seed_from_u64(policy.seed()),
            round: 0,
            age: vec![0; 3 * n],
            last_match: vec![0; n],
            births: match policy {
                SchedulerPolicy::BoundedDelay { .. } => vec![VecDeque::new(); n * n],
                SchedulerPolicy::FairRandom { .. } => Vec::new(),
            },
            enabled_class: vec![false; 3 * n],
            weights: vec![0; 3 * n],
        }
    }

    pub fn policy(&self) -> SchedulerPolicy {
        self.policy
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Picks one of `enabled`. Panics if `enabled` is empty.
    pub fn next_step(&mut self, c: &Configuration, enabled: &[Step]) -> Step {
        assert!(!enabled.is_empty(), "scheduler called with no enabled step");
        let n = c.n();
        if !self.births.is_empty() {
            self.sync_births(c);
        }

        let mut enabled_class = std::mem::take(&mut self.enabled_class);
        enabled_class.clear();
        enabled_class.resize(3 * n, false);
        for s in enabled {
            enabled_class[3 * s.actor().index() + class_of(s) as usize] = true;
        }

        let chosen = match self.policy {
            SchedulerPolicy::BoundedDelay {
                delay_bound,
                match_bound,
                ..
            } => {
                for p in 0..n {
                    if !enabled_class[3 * p] {
                        self.last_match[p] = self.round;
                    }
                }
                self.overdue(c, enabled, delay_bound, match_bound)
            }
            SchedulerPolicy::FairRandom { .. } => None,
        };
        let chosen = chosen.unwrap_or_else(|| self.weighted(c, enabled, &enabled_class));

        let ci = 3 * chosen.actor().index() + class_of(&chosen) as usize;
        for (i, a) in self.age.iter_mut().enumerate() {
            *a = if enabled_class[i] && i != ci {
                *a + 1
            } else {
                0
            };
        }
        if chosen.is_match() {
            self.last_match[chosen.actor().index()] = self.round;
        }
        self.round += 1;
        self.enabled_class = enabled_class;
        chosen
    }

    fn sync_births(&mut self, c: &Configuration) {
        let n = c.n();
        for r in 0..n {
            for q in 0..n {
                let want = c.msg_count(ProcessId(r as u32), ProcessId(q as u32)) as usize;
                let d = &mut self.births[r * n + q];
                while d.len() > want {
                    d.pop_front();
                }
                while d.len() < want {
                    d.push_back(self.round);
                }
            }
        }
    }

    /// Earliest-deadline-first among overdue obligations.
    fn overdue(
        &self,
        c: &Configuration,
        enabled: &[Step],
        delay_bound: u64,
        match_bound: u64,
    ) -> Option<Step> {
        let n = c.n();
        let mut best: Option<(u64, Step)> = None;
        let mut consider = |deadline: u64, s: Step| {
            if deadline <= self.round && best.is_none_or(|(d, _)| deadline < d) {
                best = Some((deadline, s));
            }
        };
        for s in enabled {
            if s.is_match() {
                let p = s.actor().index();
                consider(self.last_match[p] + match_bound, *s);
            }
        }
        for r in c.processes() {
            for (q, _) in c.inbox(r) {
                let Some(&born) = self.births[r.index() * n + q.index()].front() else {
                    continue;
                };
                let serve = match c.add(r) {
                    Some(a) => Step::Add {
                        actor: r,
                        payload: a,
                    },
                    None => Step::Receive {
                        actor: r,
                        payload: q,
                    },
                };
                if enabled.contains(&serve) {
                    consider(born + delay_bound, serve);
                }
            }
        }
        best.map(|(_, s)| s)
    }

    fn weighted(&mut self, c: &Configuration, enabled: &[Step], enabled_class: &[bool]) -> Step {
        let aging = match self.policy {
            SchedulerPolicy::FairRandom { aging, .. } => aging,
            SchedulerPolicy::BoundedDelay { .. } => 0,
        };
        let n = c.n();
        let mut weights = std::mem::take(&mut self.weights);
        weights.clear();
        weights.resize(3 * n, 0);
        for (i, w) in weights.iter_mut().enumerate() {
            if !enabled_class[i] {
                continue;
            }
            let inbox = c.inbox_len(ProcessId((i / 3) as u32));
            let base = match i % 3 {
                0 => 1,
                1 => inbox,
                _ => 1 + inbox,
            };
            *w = base.max(1) + aging * self.age[i];
        }
        let total: u64 = weights.iter().sum();
        let mut x = self.rng.random_range(0..total);
        let mut ci = 0;
        for (i, &w) in weights.iter().enumerate() {
            if x < w {
                ci = i;
                break;
            }
            x -= w;
        }
        self.weights = weights;
        let p = ProcessId((ci / 3) as u32);
        let in_class = |s: &&Step| s.actor() == p && class_of(s) as usize == ci % 3;
        let mult = |s: &Step| match *s {
            Step::Receive { actor, payload } => c.msg_count(actor, payload).max(1) as u64,
            _ => 1,
        };
        let mut members = enabled.iter().filter(in_class);
        let first = *members.next().expect("chosen class is enabled");
        if members.next().is_none() {
            return first;
        }
        let total: u64 = enabled.iter().filter(in_class).map(mult).sum();
        let mut x = self.rng.random_range(0..total);
        for s in enabled.iter().filter(in_class) {
            let w = mult(s);
            if x < w {
                return *s;
            }
            x -= w;
        }
        unreachable!("weighted pick out of range")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Suppress,
    Grant,
    Free,
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMode::Suppress => "suppress",
            OracleMode::Grant => "grant",
            OracleMode::Free => "free",
        })
    }
}

/// Neighborhood condition under which a grant may fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// `r ∈ nb(p)` and `p ∈ nb(q)`.
    OneSender {
        p: ProcessId,
        q: ProcessId,
        r: ProcessId,
    },
    /// `p ∈ nb(q)` and `p ∈ nb(r)`.
    TwoSender {
        p: ProcessId,
        q: ProcessId,
        r: ProcessId,
    },
}

impl Activation {
    pub fn holds(&self, c: &Configuration) -> bool {
        match *self {
            Activation::OneSender { p, q, r } => c.nb(p).contains(r) && c.nb(q).contains(p),
            Activation::TwoSender { p, q, r } => c.nb(q).contains(p) && c.nb(r).contains(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grant {
    pub grantee: ProcessId,
    pub activation: Activation,
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleState {
    pub mode: OracleMode,
    pub grants: Vec<Grant>,
}

impl Default for OracleState {
    fn default() -> Self {
        Self {
            mode: OracleMode::Free,
            grants: Vec::new(),
        }
    }
}

/// What the oracle did in one call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleDecision {
    pub mode: OracleMode,
    /// Holders of unused grants.
    pub grantees: Vec<ProcessId>,
}

fn out_edges(c: &Configuration) -> Vec<ProcSet> {
    c.processes().map(|p| *c.connections(p)).collect()
}

fn same_side(p: ProcessId, q: ProcessId, r: ProcessId) -> bool {
    (q < p && r < p) || (q > p && r > p)
}

/// Smallest `(p, q, r)` with `q`, `r` on one side of `p`, `(p, r)` and
/// `(q, p)` in NTM.
pub fn one_sender_triple(c: &Configuration) -> Option<(ProcessId, ProcessId, ProcessId)> {
    let out = out_edges(c);
    for p in c.processes() {
        for q in c.processes() {
            if q == p || !out[q.index()].contains(p) {
                continue;
            }
            if let Some(r) = out[p.index()]
                .iter()
                .find(|&r| r != q && same_side(p, q, r))
            {
                return Some((p, q, r));
            }
        }
    }
    None
}

/// Smallest `(p, q, r)` with `q < r` on one side of `p`, both pointing to `p`.
pub fn two_sender_triple(c: &Configuration) -> Option<(ProcessId, ProcessId, ProcessId)> {
    let out = out_edges(c);
    for p in c.processes() {
        for q in c.processes() {
            if q == p || !out[q.index()].contains(p) {
                continue;
            }
            if let Some(r) = c
                .processes()
                .find(|&r| r > q && same_side(p, q, r) && out[r.index()].contains(p))
            {
                return Some((p, q, r));
            }
        }
    }
    None
}

impl OracleState {
    pub fn new() -> Self {
        Self::default()
    }

    fn live_grantees(&self) -> Vec<ProcessId> {
        self.grants
            .iter()
            .filter(|g| !g.used)
            .map(|g| g.grantee)
            .collect()
    }

    /// Filters `enabled` for configuration `c`, updating mode and grants.
    pub fn filter(&mut self, c: &Configuration, enabled: &[Step]) -> (Vec<Step>, OracleDecision) {
        let mode = if directed_lin_pattern(c) {
            OracleMode::Suppress
        } else if undirected_lin_pattern(c) {
            OracleMode::Grant
        } else {
            OracleMode::Free
        };
        if mode != OracleMode::Grant {
            self.grants.clear();
        } else if self.mode != OracleMode::Grant || self.grants.is_empty() {
            self.grants.clear();
            if let Some((p, q, r)) = one_sender_triple(c) {
                self.grants.push(Grant {
                    grantee: q,
                    activation: Activation::OneSender { p, q, r },
                    used: false,
                });
            } else if let Some((p, q, r)) = two_sender_triple(c) {
                let activation = Activation::TwoSender { p, q, r };
                for grantee in [q, r] {
                    self.grants.push(Grant {
                        grantee,
                        activation,
                        used: false,
                    });
                }
            }
        }
        self.mode = mode;

        let allowed = match mode {
            OracleMode::Free => enabled.to_vec(),
            OracleMode::Suppress => enabled
                .iter()
                .filter(|s| !matches!(s, Step::KeepAlive { .. }))
                .copied()
                .collect(),
            OracleMode::Grant => enabled
                .iter()
                .filter(|s| match s {
                    Step::KeepAlive { actor } => self
                        .grants
                        .iter()
                        .any(|g| g.grantee == *actor && !g.used && g.activation.holds(c)),
                    _ => true,
                })
                .copied()
                .collect(),
        };
        (
            allowed,
            OracleDecision {
                mode,
                grantees: self.live_grantees(),
            },
        )
    }

    /// Records that `s` was executed after the last [`filter`](Self::filter).
    /// Returns true if `s` consumed a grant.
    pub fn observe(&mut self, s: &Step) -> bool {
        if let Step::KeepAlive { actor } = s {
            if let Some(g) = self
                .grants
                .iter_mut()
                .find(|g| g.grantee == *actor && !g.used)
            {
                g.used = true;
                return true;
            }
        }
        false
    }
}

/// Functional form of [`OracleState::filter`].
pub fn oracle_filter(
    o: &OracleState,
    c: &Configuration,
    enabled: &[Step],
) -> (Vec<Step>, OracleState) {
    let mut next = o.clone();
    let (allowed, _) = next.filter(c, enabled);
    (allowed, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{apply_step, apply_step_in_place, enabled_steps, SelectStrategy};

    fn pid(id: u32) -> ProcessId {
        ProcessId(id - 1)
    }

    fn correct(n: usize) -> Configuration {
        let mut c = Configuration::empty(n);
        for i in 1..n as u32 {
            c.insert_nb(ProcessId(i - 1), ProcessId(i));
            c.insert_nb(ProcessId(i), ProcessId(i - 1));
        }
        c
    }

    #[test]
    fn single_enabled_step_is_chosen() {
        let c = Configuration::empty(1);
        let only = [Step::KeepAlive { actor: pid(1) }];
        for policy in [SchedulerPolicy::fair(3), SchedulerPolicy::bounded(3, 1)] {
            let mut s = Scheduler::new(policy, 1);
            assert_eq!(s.next_step(&c, &only), only[0]);
        }
    }

    #[test]
    fn same_seed_same_choices() {
        let mut c = correct(5);
        c.push_msg(pid(2), pid(4));
        c.push_msg(pid(2), pid(4));
        let run = |seed| {
            let mut s = Scheduler::new(SchedulerPolicy::fair(seed), 5);
            let mut cc = c.clone();
            let mut out = Vec::new();
            for _ in 0..200 {
                let e = enabled_steps(&cc, SelectStrategy::AllMin);
                let st = s.next_step(&cc, &e);
                apply_step_in_place(&mut cc, &st).unwrap();
                out.push(st);
            }
            out
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn bounded_delay_forces_old_receive() {
        // D = 5; 2 holds a message to 1 that the scheduler can only ignore
        // for 5 rounds
        let mut c = Configuration::empty(2);
        c.push_msg(pid(1), pid(2));
        let policy = SchedulerPolicy::BoundedDelay {
            seed: 0,
            delay_bound: 5,
            match_bound: 1000,
        };
        let mut s = Scheduler::new(policy, 2);
        let mut delivered_at = None;
        for round in 0..=5 {
            let e = enabled_steps(&c, SelectStrategy::AllMin);
            let forced = s.overdue(&c, &e, 5, 1000);
            let st = s.next_step(&c, &e);
            if round == 5 && delivered_at.is_none() {
                assert_eq!(
                    forced,
                    Some(Step::Receive {
                        actor: pid(1),
                        payload: pid(2)
                    })
                );
            }
            if matches!(st, Step::Receive { .. }) {
                delivered_at = Some(round);
                break;
            }
            // keep the configuration fixed: only empty keep-alives fire here
            assert!(matches!(st, Step::KeepAlive { .. }));
        }
        assert!(delivered_at.is_some_and(|r| r <= 5));
    }

    #[test]
    fn bounded_delay_keeps_message_ages_bounded() {
        let mut c = correct(6);
        c.insert_nb(pid(1), pid(6));
        let n = 6;
        let policy = SchedulerPolicy::bounded(11, n);
        let mut s = Scheduler::new(policy, n);
        for _ in 0..2000 {
            let e = enabled_steps(&c, SelectStrategy::AllMin);
            let st = s.next_step(&c, &e);
            apply_step_in_place(&mut c, &st).unwrap();
        }
        // oldest in-flight message is within a small multiple of the bound
        let oldest = s.births.iter().filter_map(|d| d.front()).min().copied();
        if let Some(b) = oldest {
            assert!(s.round() - b <= 4 * 4 * n as u64, "age {}", s.round() - b);
        }
    }

    #[test]
    fn fair_random_eventually_picks_every_class() {
        let mut c = correct(4);
        c.push_msg(pid(3), pid(2));
        let e = enabled_steps(&c, SelectStrategy::AllMin);
        let mut s = Scheduler::new(SchedulerPolicy::fair(1), 4);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..500 {
            seen.insert(s.next_step(&c, &e));
        }
        assert_eq!(seen.len(), e.len());
    }

    #[test]
    fn oracle_two_sender_grants() {
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(2), pid(1));
        c.insert_nb(pid(3), pid(1));
        let mut o = OracleState::new();
        let e = enabled_steps(&c, SelectStrategy::AllMin);
        let (allowed, d) = o.filter(&c, &e);
        assert_eq!(d.mode, OracleMode::Grant);
        assert_eq!(d.grantees, vec![pid(2), pid(3)]);
        assert!(allowed.contains(&Step::KeepAlive { actor: pid(2) }));
        assert!(allowed.contains(&Step::KeepAlive { actor: pid(3) }));
        assert!(!allowed.contains(&Step::KeepAlive { actor: pid(1) }));
        assert!(o.observe(&Step::KeepAlive { actor: pid(2) }));
        let c2 = apply_step(&c, &Step::KeepAlive { actor: pid(2) }).unwrap();
        let e2 = enabled_steps(&c2, SelectStrategy::AllMin);
        let (allowed2, d2) = o.filter(&c2, &e2);
        // the message 1 <- 2 now forms a directed pattern? no: only (1,2)
        assert_eq!(d2.mode, OracleMode::Grant);
        assert!(!allowed2.contains(&Step::KeepAlive { actor: pid(2) }));
        assert!(allowed2.contains(&Step::KeepAlive { actor: pid(3) }));
    }

    #[test]
    fn oracle_one_sender_grant_leads_to_linearization() {
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(1), pid(3));
        c.insert_nb(pid(2), pid(1));
        let mut o = OracleState::new();
        let e = enabled_steps(&c, SelectStrategy::AllMin);
        let (allowed, d) = o.filter(&c, &e);
        assert_eq!(d.mode, OracleMode::Grant);
        assert_eq!(d.grantees, vec![pid(2)]);
        let ka = Step::KeepAlive { actor: pid(2) };
        assert!(allowed.contains(&ka));
        assert!(!allowed.contains(&Step::KeepAlive { actor: pid(1) }));
        o.observe(&ka);
        let mut c = apply_step(&c, &ka).unwrap();
        for s in [
            Step::Receive {
                actor: pid(1),
                payload: pid(2),
            },
            Step::Add {
                actor: pid(1),
                payload: pid(2),
            },
        ] {
            apply_step_in_place(&mut c, &s).unwrap();
        }
        let lin = Step::LinRight {
            actor: pid(1),
            j: pid(2),
            k: pid(3),
        };
        assert!(enabled_steps(&c, SelectStrategy::AllMin).contains(&lin));
        let e = enabled_steps(&c, SelectStrategy::AllMin);
        let (allowed, d) = o.filter(&c, &e);
        assert_eq!(d.mode, OracleMode::Suppress);
        assert!(allowed.contains(&lin));
        assert!(!allowed.iter().any(|s| matches!(s, Step::KeepAlive { .. })));
        assert!(o.grants.is_empty());
    }

    #[test]
    fn oracle_free_on_correct() {
        let c = correct(4);
        let e = enabled_steps(&c, SelectStrategy::AllMin);
        let mut o = OracleState::new();
        let (allowed, d) = o.filter(&c, &e);
        assert_eq!(d.mode, OracleMode::Free);
        assert_eq!(allowed, e);
    }

    #[test]
    fn functional_filter_leaves_input_untouched() {
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(2), pid(1));
        c.insert_nb(pid(3), pid(1));
        let o = OracleState::new();
        let e = enabled_steps(&c, SelectStrategy::AllMin);
        let (_, o2) = oracle_filter(&o, &c, &e);
        assert_eq!(o, OracleState::new());
        assert_eq!(o2.grants.len(), 2);
    }
}
