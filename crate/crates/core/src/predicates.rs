//! Correctness predicates, linearization-pattern detection and the runtime
//! monitors that check every preservation and progression property on each
//! executed step.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{untm_connected, Configuration, ProcessId};
use crate::potentials::{predicted_psi_delta, psi_sigma_must_drop, PotentialReport};
use crate::semantics::{apply_step_in_place, Step};

/// Every neighborhood is exactly {pred, succ} and every message and pending
/// addition carries a desired id.
pub fn is_correct(c: &Configuration) -> bool {
    let n = c.n();
    c.processes().all(|p| {
        let nb = c.nb(p);
        let want = usize::from(p.pred().is_some()) + usize::from(p.succ(n).is_some());
        nb.len() == want
            && p.pred().is_none_or(|q| nb.contains(q))
            && p.succ(n).is_none_or(|q| nb.contains(q))
            && only_desired(c, p)
    })
}

fn only_desired(c: &Configuration, p: ProcessId) -> bool {
    let out = c.connections(p);
    !out.contains(p)
        && out.first().is_none_or(|q| p.is_desired(q))
        && out.last().is_none_or(|q| p.is_desired(q))
}

/// Only desired connections exist, and every consecutive pair is connected
/// in at least one direction.
pub fn is_undirected_correct(c: &Configuration) -> bool {
    within_glin(c)
        && c.processes().all(|p| match p.succ(c.n()) {
            Some(q) => c.has_connection(p, q) || c.has_connection(q, p),
            None => true,
        })
}

/// The linear graph is contained in both NT and NTM. Since NT is a subgraph
/// of NTM this is the same as containment in NT.
pub fn contains_glin(c: &Configuration) -> bool {
    c.processes().all(|p| {
        p.pred().is_none_or(|q| c.nb(p).contains(q))
            && p.succ(c.n()).is_none_or(|q| c.nb(p).contains(q))
    })
}

/// NTM is a subgraph of the linear graph.
pub fn within_glin(c: &Configuration) -> bool {
    c.processes().all(|p| only_desired(c, p))
}

/// Some process has two outgoing NTM edges on the same side.
pub fn directed_lin_pattern(c: &Configuration) -> bool {
    c.processes().any(|p| {
        let conn = c.connections(p);
        conn.below(p).nth(1).is_some() || conn.above(p).nth(1).is_some()
    })
}

/// Some process has two UNTM edges on the same side.
pub fn undirected_lin_pattern(c: &Configuration) -> bool {
    let mut undirected = vec![crate::model::ProcSet::with_capacity(c.n()); c.n()];
    for p in c.processes() {
        for q in c.connections(p).iter() {
            undirected[p.index()].insert(q);
            undirected[q.index()].insert(p);
        }
    }
    c.processes().any(|p| {
        let s = &undirected[p.index()];
        s.below(p).nth(1).is_some() || s.above(p).nth(1).is_some()
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub correct: bool,
    pub undirected_correct: bool,
    pub contains_glin: bool,
    pub within_glin: bool,
}

impl Flags {
    pub fn of(c: &Configuration) -> Self {
        Self {
            correct: is_correct(c),
            undirected_correct: is_undirected_correct(c),
            contains_glin: contains_glin(c),
            within_glin: within_glin(c),
        }
    }
}

/// Derived facts about one configuration, computed once and reused as the
/// "after" of one step and the "before" of the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Observation {
    pub potentials: PotentialReport,
    pub flags: Flags,
    pub connected: bool,
}

impl Observation {
    pub fn of(c: &Configuration) -> Self {
        Self {
            potentials: PotentialReport::of(c),
            flags: Flags::of(c),
            connected: untm_connected(c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    ValidConfiguration,
    NeighborhoodGrowth,
    DesiredNeighborKept,
    CorrectEdgeKept,
    Connectivity,
    EdgeLengthBound,
    NearestNeighbor,
    PsiDelta,
    PsiEMonotone,
    PsiSigmaDrop,
    ClosureCorrect,
    ClosureUndirectedCorrect,
    ClosureContainsGlin,
    OraclePsiIncrease,
    OracleStall,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::ValidConfiguration => "valid_configuration",
            Property::NeighborhoodGrowth => "neighborhood_growth",
            Property::DesiredNeighborKept => "desired_neighbor_kept",
            Property::CorrectEdgeKept => "correct_edge_kept",
            Property::Connectivity => "connectivity",
            Property::EdgeLengthBound => "edge_length_bound",
            Property::NearestNeighbor => "nearest_neighbor",
            Property::PsiDelta => "psi_delta",
            Property::PsiEMonotone => "psi_e_monotone",
            Property::PsiSigmaDrop => "psi_sigma_drop",
            Property::ClosureCorrect => "closure_correct",
            Property::ClosureUndirectedCorrect => "closure_undirected_correct",
            Property::ClosureContainsGlin => "closure_contains_glin",
            Property::OraclePsiIncrease => "oracle_psi_increase",
            Property::OracleStall => "oracle_stall",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub property: Property,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MonitorReport {
    pub step_index: u64,
    pub violations: Vec<Violation>,
}

impl MonitorReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.violations
            .iter()
            .map(|v| v.property.name().to_string())
            .collect()
    }

    fn fail(&mut self, property: Property, detail: String) {
        self.violations.push(Violation { property, detail });
    }
}

/// Checks every per-step property for `before --s--> after`.
pub fn monitor_step(before: &Configuration, s: &Step, after: &Configuration) -> MonitorReport {
    monitor_observed(
        before,
        &Observation::of(before),
        s,
        after,
        &Observation::of(after),
        0,
    )
}

/// [`monitor_step`] with precomputed observations.
pub fn monitor_observed(
    before: &Configuration,
    ob: &Observation,
    s: &Step,
    after: &Configuration,
    oa: &Observation,
    step_index: u64,
) -> MonitorReport {
    let mut r = MonitorReport {
        step_index,
        violations: Vec::new(),
    };
    let n = before.n();

    let invalid = after.validate();
    if !invalid.is_empty() {
        r.fail(
            Property::ValidConfiguration,
            format!("{} after {s}", invalid[0]),
        );
    }

    for p in before.processes() {
        let nb_b = before.nb(p);
        let nb_a = after.nb(p);
        let linearized_by_p = s.is_linearization() && s.actor() == p;
        if !linearized_by_p && !nb_b.is_subset(nb_a) {
            r.fail(
                Property::NeighborhoodGrowth,
                format!("nb({p}) shrank under {s}"),
            );
        }
        for q in [p.pred(), p.succ(n)].into_iter().flatten() {
            if nb_b.contains(q) && !nb_a.contains(q) {
                r.fail(
                    Property::DesiredNeighborKept,
                    format!("{p} dropped desired neighbor {q} under {s}"),
                );
            }
            if before.has_connection(p, q) && !after.has_connection(p, q) {
                r.fail(
                    Property::CorrectEdgeKept,
                    format!("NTM lost ({p},{q}) under {s}"),
                );
            }
        }
        if let Some(l) = nb_b.max_below(p) {
            if nb_a.max_below(p).is_none_or(|l2| l2 < l) {
                r.fail(
                    Property::NearestNeighbor,
                    format!("left nearest of {p} worsened from {l} under {s}"),
                );
            }
        }
        if let Some(h) = nb_b.min_above(p) {
            if nb_a.min_above(p).is_none_or(|h2| h2 > h) {
                r.fail(
                    Property::NearestNeighbor,
                    format!("right nearest of {p} worsened from {h} under {s}"),
                );
            }
        }
    }

    if ob.connected && !oa.connected {
        r.fail(Property::Connectivity, format!("UNTM disconnected by {s}"));
    }

    let (pb, pa) = (&ob.potentials, &oa.potentials);
    if pa.lenmax > pb.lenmax {
        r.fail(
            Property::EdgeLengthBound,
            format!("longest edge grew {} -> {} under {s}", pb.lenmax, pa.lenmax),
        );
    }
    let (mut ntm_b, mut ntm_a, mut nt_b, mut nt_a) = (0i64, 0i64, 0i64, 0i64);
    for p in before.processes() {
        let cb = before.connections(p);
        let ca = after.connections(p);
        ntm_b += cb.len() as i64;
        ntm_a += ca.len() as i64;
        nt_b += before.nb(p).len() as i64;
        nt_a += after.nb(p).len() as i64;
        let fresh = ca.difference(cb);
        for q in [fresh.first(), fresh.last()].into_iter().flatten() {
            if p.dist(q) > pb.lenmax {
                r.fail(
                    Property::EdgeLengthBound,
                    format!("new edge ({p},{q}) longer than every old edge under {s}"),
                );
                break;
            }
        }
    }
    if !(-1..=2).contains(&(ntm_a - ntm_b)) || !(-1..=1).contains(&(nt_a - nt_b)) {
        r.fail(
            Property::EdgeLengthBound,
            format!(
                "edge count changed by NTM {} / NT {} under {s}",
                ntm_a - ntm_b,
                nt_a - nt_b
            ),
        );
    }

    let observed = pa.psi as i64 - pb.psi as i64;
    let predicted = predicted_psi_delta(before, s);
    if observed != predicted {
        r.fail(
            Property::PsiDelta,
            format!("psi changed by {observed}, formula gives {predicted} for {s}"),
        );
    }
    if pa.psi_e > pb.psi_e {
        r.fail(
            Property::PsiEMonotone,
            format!("psi_e grew {} -> {} under {s}", pb.psi_e, pa.psi_e),
        );
    }
    if psi_sigma_must_drop(before, s) && pa.psi_sigma >= pb.psi_sigma {
        r.fail(
            Property::PsiSigmaDrop,
            format!(
                "psi_sigma did not drop ({} -> {}) under {s}",
                pb.psi_sigma, pa.psi_sigma
            ),
        );
    }

    let (fb, fa) = (&ob.flags, &oa.flags);
    if fb.correct && !fa.correct {
        r.fail(
            Property::ClosureCorrect,
            format!("left correct set under {s}"),
        );
    }
    if fb.undirected_correct && !fa.undirected_correct {
        r.fail(
            Property::ClosureUndirectedCorrect,
            format!("left undirected-correct set under {s}"),
        );
    }
    if fb.contains_glin && !fa.contains_glin {
        r.fail(
            Property::ClosureContainsGlin,
            format!("lost a linear-graph edge under {s}"),
        );
    }
    r
}

/// Outcome of a trace-level monitor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum MonitorStatus {
    /// Exact property, checked on the whole trace.
    Holds,
    /// Eventuality property, no counterexample within the trace.
    Unfalsified,
    /// Nothing in the trace exercised the property.
    NotExercised,
    Violated(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonReport {
    /// Once a process knows both desired neighbors it never sends an
    /// undesired keep-alive.
    pub no_undesired_keepalive: MonitorStatus,
    /// Keep-alive targets never move farther away on either side.
    pub keepalive_targets_closer: MonitorStatus,
    /// After a linearization drops `r`, and `r` has learned the forwarded id,
    /// `r` never sends a keep-alive back.
    pub no_keepalive_back: MonitorStatus,
}

impl HorizonReport {
    pub fn is_clean(&self) -> bool {
        ![
            &self.no_undesired_keepalive,
            &self.keepalive_targets_closer,
            &self.no_keepalive_back,
        ]
        .iter()
        .any(|s| matches!(s, MonitorStatus::Violated(_)))
    }
}

fn finish(violations: Vec<String>, exercised: bool, exact: bool) -> MonitorStatus {
    if !violations.is_empty() {
        MonitorStatus::Violated(violations)
    } else if !exercised {
        MonitorStatus::NotExercised
    } else if exact {
        MonitorStatus::Holds
    } else {
        MonitorStatus::Unfalsified
    }
}

/// Incremental form of [`horizon_monitors`], fed one step at a time with the
/// configuration the step is executed in.
#[derive(Clone, Debug, Default)]
pub struct HorizonMonitor {
    knows_desired: Vec<bool>,
    last_left: Vec<Option<ProcessId>>,
    last_right: Vec<Option<ProcessId>>,
    // (dropped, linearizer, forwarded id)
    pending: BTreeSet<(ProcessId, ProcessId, ProcessId)>,
    armed: BTreeSet<(ProcessId, ProcessId)>,
    v32: Vec<String>,
    v30: Vec<String>,
    v27: Vec<String>,
    ka_seen: bool,
    armed_seen: bool,
    steps: u64,
}

impl HorizonMonitor {
    pub fn new(n: usize) -> Self {
        Self {
            knows_desired: vec![false; n],
            last_left: vec![None; n],
            last_right: vec![None; n],
            ..Self::default()
        }
    }

    /// True once any of the three monitors has a counterexample.
    pub fn violated(&self) -> bool {
        !(self.v32.is_empty() && self.v30.is_empty() && self.v27.is_empty())
    }

    /// `s` is about to be executed in `c`.
    pub fn observe(&mut self, c: &Configuration, s: &Step) {
        let n = c.n();
        let i = self.steps;
        self.steps += 1;
        let p = s.actor();
        let desired_known = |q: ProcessId| {
            q.pred().is_none_or(|x| c.nb(q).contains(x))
                && q.succ(n).is_none_or(|x| c.nb(q).contains(x))
        };
        // nb(q) only changes through q's own steps, so checking the actor
        // (and, for the first step, everyone) keeps the flags current
        if i == 0 {
            for q in c.processes() {
                if desired_known(q) {
                    self.knows_desired[q.index()] = true;
                }
            }
        } else if desired_known(p) {
            self.knows_desired[p.index()] = true;
        }
        let armed = &mut self.armed;
        let armed_seen = &mut self.armed_seen;
        self.pending.retain(|&(r, lp, q)| {
            if c.nb(r).contains(q) {
                armed.insert((r, lp));
                *armed_seen = true;
                false
            } else {
                true
            }
        });

        if let Step::KeepAlive { actor: p } = *s {
            self.ka_seen = true;
            let nb = c.nb(p);
            if self.knows_desired[p.index()] {
                if let Some(q) = nb.iter().find(|&q| !p.is_desired(q)) {
                    self.v32
                        .push(format!("step {i}: {p} sent keep-alive to undesired {q}"));
                }
            }
            let l = nb.max_below(p);
            let h = nb.min_above(p);
            if let (Some(old), Some(new)) = (self.last_left[p.index()], l) {
                if p.dist(new) > p.dist(old) {
                    self.v30
                        .push(format!("step {i}: {p} left target moved {old} -> {new}"));
                }
            }
            if let (Some(old), Some(new)) = (self.last_right[p.index()], h) {
                if p.dist(new) > p.dist(old) {
                    self.v30
                        .push(format!("step {i}: {p} right target moved {old} -> {new}"));
                }
            }
            self.last_left[p.index()] = l.or(self.last_left[p.index()]);
            self.last_right[p.index()] = h.or(self.last_right[p.index()]);
            for q in nb.iter() {
                if self.armed.contains(&(p, q)) {
                    self.v27
                        .push(format!("step {i}: {p} sent keep-alive back to {q}"));
                }
            }
        }
        match *s {
            Step::LinLeft { actor, j, k } => {
                self.pending.insert((j, actor, k));
            }
            Step::LinRight { actor, j, k } => {
                self.pending.insert((k, actor, j));
            }
            _ => {}
        }
    }

    /// Marks the trace as broken at the current step.
    pub fn replay_failed(&mut self, msg: &str) {
        let m = format!(
            "step {}: replay failed: {msg}",
            self.steps.saturating_sub(1)
        );
        self.v32.push(m.clone());
        self.v30.push(m.clone());
        self.v27.push(m);
    }

    pub fn report(&self) -> HorizonReport {
        HorizonReport {
            no_undesired_keepalive: finish(self.v32.clone(), self.ka_seen, true),
            keepalive_targets_closer: finish(self.v30.clone(), self.ka_seen, true),
            no_keepalive_back: finish(self.v27.clone(), self.armed_seen, false),
        }
    }
}

/// Replays `steps` from `init` and evaluates the trace-level monitors.
/// Steps that are not enabled end the replay and are reported as violations
/// of every monitor.
pub fn horizon_monitors(init: &Configuration, steps: &[Step]) -> HorizonReport {
    let mut c = init.clone();
    let mut h = HorizonMonitor::new(init.n());
    for s in steps {
        h.observe(&c, s);
        if let Err(e) = apply_step_in_place(&mut c, s) {
            h.replay_failed(&e.to_string());
            break;
        }
    }
    h.report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{g_lin, nt, ntm, ug_lin, untm};
    use crate::semantics::{apply_step, enabled_steps, SelectStrategy};

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
    fn correctness_examples() {
        assert!(is_correct(&correct(3)));
        let mut c = correct(3);
        c.push_msg(pid(1), pid(2));
        assert!(is_correct(&c));
        let mut c = correct(3);
        c.insert_nb(pid(1), pid(3));
        assert!(!is_correct(&c));
        assert!(is_correct(&Configuration::empty(1)));
    }

    #[test]
    fn undirected_correctness_examples() {
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(1), pid(2));
        c.insert_nb(pid(3), pid(2));
        assert!(is_undirected_correct(&c));
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(1), pid(2));
        assert!(!is_undirected_correct(&c));
        assert!(is_undirected_correct(&correct(4)));
    }

    #[test]
    fn glin_containment() {
        let c = correct(4);
        assert!(contains_glin(&c) && within_glin(&c));
        let mut mesh = Configuration::empty(4);
        for p in mesh.processes().collect::<Vec<_>>() {
            for q in mesh.processes().collect::<Vec<_>>() {
                if p != q {
                    mesh.insert_nb(p, q);
                }
            }
        }
        assert!(contains_glin(&mesh) && !within_glin(&mesh));
        let mut sparse = Configuration::empty(4);
        sparse.insert_nb(pid(1), pid(2));
        sparse.push_msg(pid(3), pid(2));
        sparse.set_add(pid(4), Some(pid(3)));
        assert!(within_glin(&sparse) && !contains_glin(&sparse));
    }

    #[test]
    fn lin_patterns() {
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(2), pid(1));
        c.insert_nb(pid(3), pid(1));
        assert!(undirected_lin_pattern(&c) && !directed_lin_pattern(&c));
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(1), pid(2));
        c.insert_nb(pid(1), pid(3));
        assert!(undirected_lin_pattern(&c) && directed_lin_pattern(&c));
        let c = correct(5);
        assert!(!undirected_lin_pattern(&c) && !directed_lin_pattern(&c));
    }

    #[test]
    fn predicate_graph_agreement_on_examples() {
        for c in [correct(4), Configuration::empty(3), {
            let mut c = correct(3);
            c.push_msg(pid(3), pid(1));
            c
        }] {
            let n = c.n();
            assert_eq!(is_correct(&c), nt(&c) == g_lin(n) && ntm(&c) == g_lin(n));
            assert_eq!(is_undirected_correct(&c), untm(&c) == ug_lin(n));
        }
    }

    #[test]
    fn correct_configuration_steps_are_clean() {
        let mut c = correct(4);
        c.push_msg(pid(2), pid(3));
        for s in enabled_steps(&c, SelectStrategy::AllMin) {
            let after = apply_step(&c, &s).unwrap();
            let r = monitor_step(&c, &s, &after);
            assert!(r.is_clean(), "{s}: {:?}", r.violations);
        }
    }

    #[test]
    fn monitor_accepts_right_linearization() {
        let mut c = Configuration::empty(5);
        for q in [1, 3, 5] {
            c.insert_nb(pid(2), pid(q));
        }
        c.insert_nb(pid(1), pid(2));
        let s = Step::LinRight {
            actor: pid(2),
            j: pid(3),
            k: pid(5),
        };
        let after = apply_step(&c, &s).unwrap();
        let r = monitor_step(&c, &s, &after);
        assert!(r.is_clean(), "{:?}", r.violations);
    }

    #[test]
    fn monitor_catches_forged_transitions() {
        let c = correct(3);
        let mut forged = c.clone();
        forged.remove_nb(pid(2), pid(3));
        let r = monitor_step(&c, &Step::KeepAlive { actor: pid(1) }, &forged);
        let names = r.names();
        assert!(names.contains(&"desired_neighbor_kept".to_string()));
        assert!(names.contains(&"closure_correct".to_string()));
        assert!(
            names.contains(&"psi_delta".to_string())
                || names.contains(&"psi_e_monotone".to_string())
        );
    }

    #[test]
    fn keep_alive_loop_in_correct_run_passes_horizon() {
        let c = correct(3);
        let steps = vec![
            Step::KeepAlive { actor: pid(2) },
            Step::KeepAlive { actor: pid(1) },
            Step::Receive {
                actor: pid(1),
                payload: pid(2),
            },
            Step::Add {
                actor: pid(1),
                payload: pid(2),
            },
            Step::KeepAlive { actor: pid(2) },
        ];
        let h = horizon_monitors(&c, &steps);
        assert_eq!(h.no_undesired_keepalive, MonitorStatus::Holds);
        assert_eq!(h.keepalive_targets_closer, MonitorStatus::Holds);
        assert_eq!(h.no_keepalive_back, MonitorStatus::NotExercised);
    }

    #[test]
    fn three_process_linearization_run() {
        // nb(1) = {2, 3}; 1 forwards 2 to 3 and drops 3; 3 learns 2.
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(1), pid(2));
        c.insert_nb(pid(1), pid(3));
        c.insert_nb(pid(3), pid(1));
        let steps = vec![
            Step::LinRight {
                actor: pid(1),
                j: pid(2),
                k: pid(3),
            },
            Step::Receive {
                actor: pid(3),
                payload: pid(2),
            },
            Step::Add {
                actor: pid(3),
                payload: pid(2),
            },
            Step::LinLeft {
                actor: pid(3),
                j: pid(1),
                k: pid(2),
            },
            Step::KeepAlive { actor: pid(3) },
            Step::KeepAlive { actor: pid(1) },
        ];
        let h = horizon_monitors(&c, &steps);
        assert!(h.is_clean(), "{h:?}");
        assert_eq!(h.no_keepalive_back, MonitorStatus::Unfalsified);
    }

    #[test]
    fn horizon_detects_undesired_keepalive_after_learning_desired() {
        // forged trace: 2 knows {1,3} and then claims a keep-alive while also
        // holding 4; replay rejects the step, which surfaces as a violation
        let mut c = Configuration::empty(4);
        c.insert_nb(pid(2), pid(1));
        c.insert_nb(pid(2), pid(3));
        c.insert_nb(pid(2), pid(4));
        let h = horizon_monitors(&c, &[Step::KeepAlive { actor: pid(2) }]);
        assert!(matches!(
            h.no_undesired_keepalive,
            MonitorStatus::Violated(_)
        ));
    }
}
