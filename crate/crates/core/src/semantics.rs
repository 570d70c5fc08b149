//! Linearization-step discovery and the six step kinds of the protocol.
//!
//! Every process always has a match step (it inspects its neighborhood and
//! either linearizes or sends keep-alives). A process that is not busy adding
//! an id can receive any message addressed to it; a process that is busy
//! adding can only complete that addition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::model::{Configuration, IdUniverse, ProcSet, ProcessId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    /// No linearization possible: send own id to every neighbor.
    KeepAlive { actor: ProcessId },
    /// `j < k < actor`: tell `j` about `k`, drop `j`.
    LinLeft {
        actor: ProcessId,
        j: ProcessId,
        k: ProcessId,
    },
    /// `actor < j < k`: tell `k` about `j`, drop `k`.
    LinRight {
        actor: ProcessId,
        j: ProcessId,
        k: ProcessId,
    },
    /// Match step whose selection is neither empty nor a valid pair.
    MatchNoOp { actor: ProcessId },
    Receive {
        actor: ProcessId,
        payload: ProcessId,
    },
    Add {
        actor: ProcessId,
        payload: ProcessId,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepKind {
    KeepAlive,
    LinLeft,
    LinRight,
    NoOp,
    Receive,
    Add,
}

impl StepKind {
    pub const ALL: [StepKind; 6] = [
        StepKind::KeepAlive,
        StepKind::LinLeft,
        StepKind::LinRight,
        StepKind::NoOp,
        StepKind::Receive,
        StepKind::Add,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StepKind::KeepAlive => "keepalive",
            StepKind::LinLeft => "lin_left",
            StepKind::LinRight => "lin_right",
            StepKind::NoOp => "noop",
            StepKind::Receive => "receive",
            StepKind::Add => "add",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl Step {
    pub fn actor(&self) -> ProcessId {
        match *self {
            Step::KeepAlive { actor }
            | Step::LinLeft { actor, .. }
            | Step::LinRight { actor, .. }
            | Step::MatchNoOp { actor }
            | Step::Receive { actor, .. }
            | Step::Add { actor, .. } => actor,
        }
    }

    pub fn kind(&self) -> StepKind {
        match self {
            Step::KeepAlive { .. } => StepKind::KeepAlive,
            Step::LinLeft { .. } => StepKind::LinLeft,
            Step::LinRight { .. } => StepKind::LinRight,
            Step::MatchNoOp { .. } => StepKind::NoOp,
            Step::Receive { .. } => StepKind::Receive,
            Step::Add { .. } => StepKind::Add,
        }
    }

    /// Steps of the match subprocess.
    pub fn is_match(&self) -> bool {
        matches!(
            self,
            Step::KeepAlive { .. }
                | Step::LinLeft { .. }
                | Step::LinRight { .. }
                | Step::MatchNoOp { .. }
        )
    }

    pub fn is_linearization(&self) -> bool {
        matches!(self, Step::LinLeft { .. } | Step::LinRight { .. })
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Step::KeepAlive { actor } => write!(f, "keepalive({actor})"),
            Step::LinLeft { actor, j, k } => write!(f, "lin_left({actor}, {j}, {k})"),
            Step::LinRight { actor, j, k } => write!(f, "lin_right({actor}, {j}, {k})"),
            Step::MatchNoOp { actor } => write!(f, "noop({actor})"),
            Step::Receive { actor, payload } => write!(f, "receive({actor}, {payload})"),
            Step::Add { actor, payload } => write!(f, "add({actor}, {payload})"),
        }
    }
}

/// How a process picks one linearization pair when several exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SelectStrategy {
    /// Lexicographically smallest pair.
    AllMin,
    /// Uniform pick, a fixed pseudo-random function of seed, process and
    /// neighborhood.
    AllRandom { seed: u64 },
    /// The pair that removes the longest edge on one side.
    MaxRule,
}

impl fmt::Display for SelectStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectStrategy::AllMin => f.write_str("all-min"),
            SelectStrategy::AllRandom { .. } => f.write_str("all-random"),
            SelectStrategy::MaxRule => f.write_str("max"),
        }
    }
}

impl FromStr for SelectStrategy {
    type Err = String;

    /// `all-random` parses with seed 0; use [`SelectStrategy::with_seed`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-min" => Ok(SelectStrategy::AllMin),
            "all-random" => Ok(SelectStrategy::AllRandom { seed: 0 }),
            "max" => Ok(SelectStrategy::MaxRule),
            other => Err(format!("unknown select strategy {other:?}")),
        }
    }
}

impl SelectStrategy {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            SelectStrategy::AllRandom { .. } => SelectStrategy::AllRandom { seed },
            s => s,
        }
    }
}

pub fn left_n(p: ProcessId, y: &ProcSet) -> ProcSet {
    let mut s = ProcSet::default();
    for q in y.below(p) {
        s.insert(q);
    }
    s
}

pub fn right_n(p: ProcessId, y: &ProcSet) -> ProcSet {
    let mut s = ProcSet::default();
    for q in y.above(p) {
        s.insert(q);
    }
    s
}

/// All pairs `(q, r)`, `q < r`, with both on the same side of `p`, in
/// lexicographic order.
pub fn find_lin(p: ProcessId, y: &ProcSet) -> Vec<(ProcessId, ProcessId)> {
    let mut out = Vec::new();
    for side in [
        y.below(p).collect::<SmallVec<[ProcessId; 8]>>(),
        y.above(p).collect::<SmallVec<[ProcessId; 8]>>(),
    ] {
        for (i, &q) in side.iter().enumerate() {
            for &r in &side[i + 1..] {
                out.push((q, r));
            }
        }
    }
    out
}

/// `find_lin(p, y)` is nonempty.
pub fn has_lin(p: ProcessId, y: &ProcSet) -> bool {
    y.below(p).nth(1).is_some() || y.above(p).nth(1).is_some()
}

fn mix(mut h: u64, v: u64) -> u64 {
    h ^= v.wrapping_add(0x9e37_79b9_7f4a_7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn pair_at(side: &[ProcessId], mut idx: usize) -> (ProcessId, ProcessId) {
    let m = side.len();
    for i in 0..m {
        let row = m - 1 - i;
        if idx < row {
            return (side[i], side[i + 1 + idx]);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}

/// One member of `find_lin(p, y)`, or `None` when it is empty.
pub fn select_pair(
    strategy: SelectStrategy,
    p: ProcessId,
    y: &ProcSet,
) -> Option<(ProcessId, ProcessId)> {
    if !has_lin(p, y) {
        return None;
    }
    if strategy == SelectStrategy::AllMin {
        let mut lo = y.below(p);
        return Some(match (lo.next(), lo.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                let mut hi = y.above(p);
                (hi.next()?, hi.next()?)
            }
        });
    }
    let left: SmallVec<[ProcessId; 8]> = y.below(p).collect();
    let right: SmallVec<[ProcessId; 8]> = y.above(p).collect();
    let left_ok = left.len() >= 2;
    let right_ok = right.len() >= 2;
    if !left_ok && !right_ok {
        return None;
    }
    match strategy {
        SelectStrategy::AllMin => Some(if left_ok {
            (left[0], left[1])
        } else {
            (right[0], right[1])
        }),
        SelectStrategy::MaxRule => {
            let l = left_ok.then(|| (left[0], left[1]));
            let r = right_ok.then(|| (right[right.len() - 2], right[right.len() - 1]));
            match (l, r) {
                (Some(l), Some(r)) => {
                    if p.dist(l.0) >= p.dist(r.1) {
                        Some(l)
                    } else {
                        Some(r)
                    }
                }
                (l, r) => l.or(r),
            }
        }
        SelectStrategy::AllRandom { seed } => {
            let choose2 = |m: usize| m * m.saturating_sub(1) / 2;
            let nl = choose2(left.len());
            let total = nl + choose2(right.len());
            let mut h = mix(seed, u64::from(p.0));
            for q in y.iter() {
                h = mix(h, u64::from(q.0));
            }
            let idx = (h % total as u64) as usize;
            Some(if idx < nl {
                pair_at(&left, idx)
            } else {
                pair_at(&right, idx - nl)
            })
        }
    }
}

/// Outcome of the match subprocess of `p` under `strategy`.
pub fn match_outcome(c: &Configuration, p: ProcessId, strategy: SelectStrategy) -> Step {
    match select_pair(strategy, p, c.nb(p)) {
        None => Step::KeepAlive { actor: p },
        Some((j, k)) if j < k && k < p => Step::LinLeft { actor: p, j, k },
        Some((j, k)) if j < k && p < j => Step::LinRight { actor: p, j, k },
        Some(_) => Step::MatchNoOp { actor: p },
    }
}

fn push_message_steps(c: &Configuration, p: ProcessId, out: &mut Vec<Step>) {
    match c.add(p) {
        Some(q) => out.push(Step::Add {
            actor: p,
            payload: q,
        }),
        None => out.extend(c.inbox(p).map(|(q, _)| Step::Receive {
            actor: p,
            payload: q,
        })),
    }
}

/// Every step enabled in `c`: one match step per process, one receive per
/// distinct deliverable message, one add per pending addition. Ordered by
/// actor, then kind, then payload.
pub fn enabled_steps(c: &Configuration, strategy: SelectStrategy) -> Vec<Step> {
    let mut out = Vec::new();
    enabled_steps_into(c, strategy, &mut out);
    out
}

/// [`enabled_steps`] into a reused buffer.
pub fn enabled_steps_into(c: &Configuration, strategy: SelectStrategy, out: &mut Vec<Step>) {
    out.clear();
    for p in c.processes() {
        out.push(match_outcome(c, p, strategy));
        push_message_steps(c, p, out);
    }
}

/// Like [`enabled_steps`] but with one match step per possible linearization
/// pair, covering every choice a selection function could make.
pub fn enabled_steps_all_choices(c: &Configuration) -> Vec<Step> {
    let mut out = Vec::with_capacity(c.n() * 2);
    for p in c.processes() {
        let pairs = find_lin(p, c.nb(p));
        if pairs.is_empty() {
            out.push(Step::KeepAlive { actor: p });
        }
        for (j, k) in pairs {
            out.push(if k < p {
                Step::LinLeft { actor: p, j, k }
            } else {
                Step::LinRight { actor: p, j, k }
            });
        }
        push_message_steps(c, p, &mut out);
    }
    out
}

fn not_enabled(s: &Step, reason: impl Into<String>) -> Error {
    Error::StepNotEnabled {
        step: s.to_string(),
        reason: reason.into(),
    }
}

/// Checks that `s` can fire in `c` under some selection function.
pub fn check_enabled(c: &Configuration, s: &Step) -> Result<()> {
    let n = c.n();
    let actor = s.actor();
    if actor.index() >= n {
        return Err(not_enabled(s, "actor outside universe"));
    }
    match *s {
        Step::KeepAlive { actor } => {
            if has_lin(actor, c.nb(actor)) {
                return Err(not_enabled(s, "a linearization step is possible"));
            }
        }
        Step::LinLeft { actor, j, k } => {
            if !(j < k && k < actor) {
                return Err(not_enabled(s, "requires j < k < actor"));
            }
            if !(c.nb(actor).contains(j) && c.nb(actor).contains(k)) {
                return Err(not_enabled(s, "j and k must be neighbors"));
            }
        }
        Step::LinRight { actor, j, k } => {
            if !(actor < j && j < k) {
                return Err(not_enabled(s, "requires actor < j < k"));
            }
            if !(c.nb(actor).contains(j) && c.nb(actor).contains(k)) {
                return Err(not_enabled(s, "j and k must be neighbors"));
            }
        }
        Step::MatchNoOp { .. } => {}
        Step::Receive { actor, payload } => {
            if payload.index() >= n || c.msg_count(actor, payload) == 0 {
                return Err(not_enabled(s, "no such message in transit"));
            }
            if c.add(actor).is_some() {
                return Err(not_enabled(s, "receiver is busy adding"));
            }
        }
        Step::Add { actor, payload } => {
            if c.add(actor) != Some(payload) {
                return Err(not_enabled(s, "no matching pending addition"));
            }
        }
    }
    Ok(())
}

/// Applies `s` to `c` in place.
pub fn apply_step_in_place(c: &mut Configuration, s: &Step) -> Result<()> {
    check_enabled(c, s)?;
    match *s {
        Step::KeepAlive { actor } => {
            let targets = *c.nb(actor);
            for j in targets.iter() {
                c.push_msg(j, actor);
            }
        }
        Step::LinLeft { actor, j, k } => {
            c.remove_nb(actor, j);
            c.push_msg(j, k);
        }
        Step::LinRight { actor, j, k } => {
            c.remove_nb(actor, k);
            c.push_msg(k, j);
        }
        Step::MatchNoOp { .. } => {}
        Step::Receive { actor, payload } => {
            c.take_msg(actor, payload);
            c.set_add(actor, Some(payload));
        }
        Step::Add { actor, payload } => {
            c.insert_nb(actor, payload);
            c.set_add(actor, None);
        }
    }
    Ok(())
}

/// Pure step application: returns the successor, `c` is untouched.
pub fn apply_step(c: &Configuration, s: &Step) -> Result<Configuration> {
    let mut next = c.clone();
    apply_step_in_place(&mut next, s)?;
    Ok(next)
}

/// Trace serialisation of a step, using external ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub kind: String,
    pub actor: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<u64>,
}

impl StepRecord {
    pub fn from_step(u: &IdUniverse, s: &Step) -> Self {
        let mut r = StepRecord {
            kind: s.kind().name().to_string(),
            actor: u.id(s.actor()),
            j: None,
            k: None,
            payload: None,
        };
        match *s {
            Step::LinLeft { j, k, .. } | Step::LinRight { j, k, .. } => {
                r.j = Some(u.id(j));
                r.k = Some(u.id(k));
            }
            Step::Receive { payload, .. } | Step::Add { payload, .. } => {
                r.payload = Some(u.id(payload));
            }
            _ => {}
        }
        r
    }

    pub fn to_step(&self, u: &IdUniverse) -> Result<Step> {
        let actor = u.process(self.actor)?;
        let field = |v: Option<u64>, name: &str| -> Result<ProcessId> {
            let id = v.ok_or_else(|| Error::StepNotEnabled {
                step: self.kind.clone(),
                reason: format!("missing field {name}"),
            })?;
            u.process(id)
        };
        let kind = StepKind::from_name(&self.kind).ok_or_else(|| Error::StepNotEnabled {
            step: self.kind.clone(),
            reason: "unknown step kind".into(),
        })?;
        Ok(match kind {
            StepKind::KeepAlive => Step::KeepAlive { actor },
            StepKind::NoOp => Step::MatchNoOp { actor },
            StepKind::LinLeft => Step::LinLeft {
                actor,
                j: field(self.j, "j")?,
                k: field(self.k, "k")?,
            },
            StepKind::LinRight => Step::LinRight {
                actor,
                j: field(self.j, "j")?,
                k: field(self.k, "k")?,
            },
            StepKind::Receive => Step::Receive {
                actor,
                payload: field(self.payload, "payload")?,
            },
            StepKind::Add => Step::Add {
                actor,
                payload: field(self.payload, "payload")?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pid(id: u32) -> ProcessId {
        ProcessId(id - 1)
    }

    fn set(ids: &[u32]) -> ProcSet {
        ProcSet::from_iter_n(8, ids.iter().map(|&i| pid(i)))
    }

    fn pairs(v: &[(u32, u32)]) -> Vec<(ProcessId, ProcessId)> {
        v.iter().map(|&(a, b)| (pid(a), pid(b))).collect()
    }

    fn c_lin3() -> Configuration {
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(1), pid(2));
        c.insert_nb(pid(2), pid(1));
        c.insert_nb(pid(2), pid(3));
        c.insert_nb(pid(3), pid(2));
        c
    }

    #[test]
    fn sides() {
        let y = set(&[1, 2, 5]);
        assert_eq!(left_n(pid(3), &y), set(&[1, 2]));
        assert_eq!(right_n(pid(3), &y), set(&[5]));
        assert!(left_n(pid(1), &ProcSet::default()).is_empty());
    }

    #[test]
    fn find_lin_examples() {
        assert_eq!(
            find_lin(pid(4), &set(&[1, 2, 3])),
            pairs(&[(1, 2), (1, 3), (2, 3)])
        );
        assert!(find_lin(pid(3), &set(&[2, 4])).is_empty());
        assert_eq!(find_lin(pid(2), &set(&[1, 3, 5])), pairs(&[(3, 5)]));
    }

    #[test]
    fn select_examples() {
        assert_eq!(
            select_pair(SelectStrategy::AllMin, pid(4), &set(&[1, 2, 3])),
            Some((pid(1), pid(2)))
        );
        for s in [
            SelectStrategy::AllMin,
            SelectStrategy::MaxRule,
            SelectStrategy::AllRandom { seed: 9 },
        ] {
            assert_eq!(select_pair(s, pid(3), &set(&[2, 4])), None);
        }
        assert_eq!(
            select_pair(SelectStrategy::MaxRule, pid(5), &set(&[1, 2, 4])),
            Some((pid(1), pid(2)))
        );
    }

    #[test]
    fn max_rule_prefers_longer_removed_edge() {
        // left removes 4->1 (3), right removes 4->8 (4)
        assert_eq!(
            select_pair(SelectStrategy::MaxRule, pid(4), &set(&[1, 2, 6, 8])),
            Some((pid(6), pid(8)))
        );
        // tie goes left
        assert_eq!(
            select_pair(SelectStrategy::MaxRule, pid(4), &set(&[1, 2, 6, 7])),
            Some((pid(1), pid(2)))
        );
    }

    #[test]
    fn random_select_is_a_function_of_its_input() {
        let y = set(&[1, 2, 3, 5, 7, 8]);
        let s = SelectStrategy::AllRandom { seed: 42 };
        let a = select_pair(s, pid(4), &y).unwrap();
        assert_eq!(select_pair(s, pid(4), &y), Some(a));
        assert!(find_lin(pid(4), &y).contains(&a));
        let picks: std::collections::BTreeSet<_> = (0..200)
            .map(|seed| select_pair(SelectStrategy::AllRandom { seed }, pid(4), &y).unwrap())
            .collect();
        assert_eq!(picks.len(), find_lin(pid(4), &y).len());
    }

    #[test]
    fn match_outcomes() {
        let mut c = Configuration::empty(5);
        for q in [1, 3, 5] {
            c.insert_nb(pid(2), pid(q));
        }
        c.insert_nb(pid(3), pid(1));
        c.insert_nb(pid(4), pid(1));
        c.insert_nb(pid(4), pid(2));
        let s = SelectStrategy::AllMin;
        assert_eq!(
            match_outcome(&c, pid(2), s),
            Step::LinRight {
                actor: pid(2),
                j: pid(3),
                k: pid(5)
            }
        );
        assert_eq!(
            match_outcome(&c, pid(3), s),
            Step::KeepAlive { actor: pid(3) }
        );
        assert_eq!(
            match_outcome(&c, pid(4), s),
            Step::LinLeft {
                actor: pid(4),
                j: pid(1),
                k: pid(2)
            }
        );
    }

    #[test]
    fn enabled_step_lists() {
        let s = SelectStrategy::AllMin;
        let ka = |i| Step::KeepAlive { actor: pid(i) };
        assert_eq!(enabled_steps(&c_lin3(), s), vec![ka(1), ka(2), ka(3)]);

        let mut c = c_lin3();
        c.push_msg(pid(1), pid(2));
        assert_eq!(
            enabled_steps(&c, s),
            vec![
                ka(1),
                Step::Receive {
                    actor: pid(1),
                    payload: pid(2)
                },
                ka(2),
                ka(3)
            ]
        );

        let mut c = Configuration::empty(3);
        c.set_add(pid(3), Some(pid(1)));
        c.push_msg(pid(3), pid(2));
        let steps = enabled_steps(&c, s);
        assert!(steps.contains(&Step::Add {
            actor: pid(3),
            payload: pid(1)
        }));
        assert!(!steps.contains(&Step::Receive {
            actor: pid(3),
            payload: pid(2)
        }));
        assert!(check_enabled(
            &c,
            &Step::Receive {
                actor: pid(3),
                payload: pid(2)
            }
        )
        .is_err());
    }

    #[test]
    fn duplicate_messages_give_one_receive() {
        let mut c = Configuration::empty(3);
        c.push_msg(pid(1), pid(3));
        c.push_msg(pid(1), pid(3));
        let receives = enabled_steps(&c, SelectStrategy::AllMin)
            .into_iter()
            .filter(|s| s.kind() == StepKind::Receive)
            .count();
        assert_eq!(receives, 1);
    }

    #[test]
    fn step_application() {
        let mut c = Configuration::empty(5);
        for q in [1, 3, 5] {
            c.insert_nb(pid(2), pid(q));
        }
        let after = apply_step(
            &c,
            &Step::LinRight {
                actor: pid(2),
                j: pid(3),
                k: pid(5),
            },
        )
        .unwrap();
        assert_eq!(after.nb(pid(2)), &set(&[1, 3]));
        assert_eq!(after.msg_count(pid(5), pid(3)), 1);
        assert_eq!(c.nb(pid(2)), &set(&[1, 3, 5]), "input untouched");

        let mut c = Configuration::empty(5);
        c.insert_nb(pid(3), pid(1));
        let after = apply_step(&c, &Step::KeepAlive { actor: pid(3) }).unwrap();
        assert_eq!(after.msg_count(pid(1), pid(3)), 1);
        assert_eq!(after.total_msgs(), 1);

        let mut c = Configuration::empty(3);
        c.set_add(pid(3), Some(pid(1)));
        let after = apply_step(
            &c,
            &Step::Add {
                actor: pid(3),
                payload: pid(1),
            },
        )
        .unwrap();
        assert!(after.nb(pid(3)).contains(pid(1)));
        assert_eq!(after.add(pid(3)), None);
    }

    #[test]
    fn receive_then_add_learns_payload() {
        let mut c = Configuration::empty(4);
        c.push_msg(pid(2), pid(4));
        let r = apply_step(
            &c,
            &Step::Receive {
                actor: pid(2),
                payload: pid(4),
            },
        )
        .unwrap();
        assert_eq!(r.add(pid(2)), Some(pid(4)));
        assert_eq!(r.total_msgs(), 0);
        let a = apply_step(
            &r,
            &Step::Add {
                actor: pid(2),
                payload: pid(4),
            },
        )
        .unwrap();
        assert!(a.nb(pid(2)).contains(pid(4)));
    }

    #[test]
    fn rejects_disabled_steps() {
        let c = c_lin3();
        for s in [
            Step::LinLeft {
                actor: pid(3),
                j: pid(1),
                k: pid(2),
            },
            Step::Receive {
                actor: pid(1),
                payload: pid(2),
            },
            Step::Add {
                actor: pid(1),
                payload: pid(3),
            },
        ] {
            assert!(matches!(
                apply_step(&c, &s),
                Err(Error::StepNotEnabled { .. })
            ));
        }
        let mut busy = c_lin3();
        busy.insert_nb(pid(1), pid(3));
        assert!(apply_step(&busy, &Step::KeepAlive { actor: pid(1) }).is_err());
    }

    #[test]
    fn step_record_round_trip() {
        let u = IdUniverse::new(vec![10, 20, 30]).unwrap();
        let steps = [
            Step::KeepAlive { actor: pid(2) },
            Step::LinLeft {
                actor: pid(3),
                j: pid(1),
                k: pid(2),
            },
            Step::Receive {
                actor: pid(1),
                payload: pid(3),
            },
            Step::MatchNoOp { actor: pid(1) },
        ];
        for s in steps {
            let rec = StepRecord::from_step(&u, &s);
            let json = serde_json::to_string(&rec).unwrap();
            let back: StepRecord = serde_json::from_str(&json).unwrap();
            assert_eq!(back.to_step(&u).unwrap(), s);
        }
        let json = serde_json::to_string(&StepRecord::from_step(&u, &steps[1])).unwrap();
        assert_eq!(json, r#"{"kind":"lin_left","actor":30,"j":10,"k":20}"#);
    }
}
