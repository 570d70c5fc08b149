//! The three potential functions and longest-edge statistics.
//!
//! * `psi` sums the lengths of all undesired outgoing connections (neighbors,
//!   pending additions and messages in transit).
//! * `psi_e` sums, over both sides of every process, the distance to the
//!   nearest known process on that side, with a penalty of `maxdist + 1` for
//!   an empty side (0 for the outer side of the minimum and maximum).
//! * `psi_sigma = psi + n * psi_e`.

use serde::{Deserialize, Serialize};

use crate::model::{Configuration, DirectedEdgeSet, ProcSet, ProcessId};
use crate::semantics::Step;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub psi: u64,
    pub psi_e: u64,
    pub psi_sigma: u64,
    pub lenmax: u64,
}

impl PotentialReport {
    pub fn of(c: &Configuration) -> Self {
        let psi = psi(c);
        let psi_e = psi_e(c);
        Self {
            psi,
            psi_e,
            psi_sigma: psi + c.n() as u64 * psi_e,
            lenmax: lenmax_edge(c),
        }
    }
}

fn undesired(p: ProcessId, q: ProcessId) -> bool {
    !p.is_desired(q)
}

/// Payloads in transit to `p` that are neither its predecessor nor successor,
/// with multiplicity, ascending.
pub fn rec_multiset(c: &Configuration, p: ProcessId) -> Vec<ProcessId> {
    let mut out = Vec::new();
    for (q, k) in c.inbox(p) {
        if undesired(p, q) {
            out.extend(std::iter::repeat_n(q, k as usize));
        }
    }
    out
}

pub fn psi_p(c: &Configuration, p: ProcessId) -> u64 {
    let nb: u64 = c
        .nb(p)
        .iter()
        .filter(|&q| undesired(p, q))
        .map(|q| p.dist(q))
        .sum();
    let rec: u64 = c
        .inbox(p)
        .filter(|&(q, _)| undesired(p, q))
        .map(|(q, k)| u64::from(k) * p.dist(q))
        .sum();
    let adding = match c.add(p) {
        Some(q) if undesired(p, q) => p.dist(q),
        _ => 0,
    };
    nb + rec + adding
}

pub fn psi(c: &Configuration) -> u64 {
    c.processes().map(|p| psi_p(c, p)).sum()
}

/// Smaller processes `p` has an outgoing connection to.
pub fn left_nm(c: &Configuration, p: ProcessId) -> ProcSet {
    let mut s = ProcSet::with_capacity(c.n());
    for q in c.connections(p).below(p) {
        s.insert(q);
    }
    s
}

/// Greater processes `p` has an outgoing connection to.
pub fn right_nm(c: &Configuration, p: ProcessId) -> ProcSet {
    let mut s = ProcSet::with_capacity(c.n());
    for q in c.connections(p).above(p) {
        s.insert(q);
    }
    s
}

/// Nearest smaller process among the outgoing connections of `p`.
pub fn shortest_left(c: &Configuration, p: ProcessId) -> Option<ProcessId> {
    c.connections(p).max_below(p)
}

/// Nearest greater process among the outgoing connections of `p`.
pub fn shortest_right(c: &Configuration, p: ProcessId) -> Option<ProcessId> {
    c.connections(p).min_above(p)
}

pub fn psi_e_left(c: &Configuration, p: ProcessId) -> u64 {
    match shortest_left(c, p) {
        Some(q) => p.dist(q),
        None if p.0 == 0 => 0,
        None => c.n() as u64,
    }
}

pub fn psi_e_right(c: &Configuration, p: ProcessId) -> u64 {
    match shortest_right(c, p) {
        Some(q) => p.dist(q),
        None if p.index() + 1 == c.n() => 0,
        None => c.n() as u64,
    }
}

pub fn psi_e_p(c: &Configuration, p: ProcessId) -> u64 {
    psi_e_left(c, p) + psi_e_right(c, p)
}

pub fn psi_e(c: &Configuration) -> u64 {
    c.processes().map(|p| psi_e_p(c, p)).sum()
}

pub fn psi_sigma(c: &Configuration) -> u64 {
    psi(c) + c.n() as u64 * psi_e(c)
}

/// Length of the longest edge of the topology with messages; 0 when it has
/// no edges.
pub fn lenmax_edge(c: &Configuration) -> u64 {
    c.processes()
        .map(|p| {
            let out = c.connections(p);
            let lo = out.first().map_or(0, |q| p.dist(q));
            let hi = out.last().map_or(0, |q| p.dist(q));
            lo.max(hi)
        })
        .max()
        .unwrap_or(0)
}

/// Edges of the topology with messages whose length is `lenmax_edge`.
pub fn max_edges(c: &Configuration) -> DirectedEdgeSet {
    let l = lenmax_edge(c);
    if l == 0 {
        return DirectedEdgeSet::default();
    }
    c.processes()
        .flat_map(|p| {
            c.connections(p)
                .iter()
                .map(move |q| (p, q))
                .collect::<Vec<_>>()
        })
        .filter(|&(p, q)| p.dist(q) == l)
        .collect()
}

/// Change of `psi` caused by `s`, from the per-kind case formula.
pub fn predicted_psi_delta(c: &Configuration, s: &Step) -> i64 {
    let d = |a: ProcessId, b: ProcessId| a.dist(b) as i64;
    match *s {
        Step::KeepAlive { actor } => c
            .nb(actor)
            .iter()
            .filter(|&j| undesired(actor, j))
            .map(|j| d(j, actor))
            .sum(),
        Step::LinLeft { actor, j, k } => -d(actor, j) + if k.is_desired(j) { 0 } else { d(j, k) },
        Step::LinRight { actor, j, k } => -d(actor, k) + if j.is_desired(k) { 0 } else { d(k, j) },
        Step::MatchNoOp { .. } | Step::Receive { .. } => 0,
        Step::Add { actor, payload } => {
            if undesired(actor, payload) && c.nb(actor).contains(payload) {
                -d(actor, payload)
            } else {
                0
            }
        }
    }
}

/// True when `s` is one of the steps for which `psi_sigma` must strictly
/// decrease: any linearization, or a keep-alive that gives at least one
/// receiver a strictly nearer process on the sender's side.
pub fn psi_sigma_must_drop(c: &Configuration, s: &Step) -> bool {
    match *s {
        Step::LinLeft { .. } | Step::LinRight { .. } => true,
        Step::KeepAlive { actor } => {
            let nb = c.nb(actor);
            nb.below(actor)
                .any(|q| shortest_right(c, q).is_none_or(|r| actor < r))
                || nb
                    .above(actor)
                    .any(|q| shortest_left(c, q).is_none_or(|l| l < actor))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ntm;

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

    /// nb: 2 -> {1}, msgs: (3,2) on three processes.
    fn sparse3() -> Configuration {
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(2), pid(1));
        c.push_msg(pid(3), pid(2));
        c
    }

    #[test]
    fn rec_multiset_filters_desired() {
        let mut c = Configuration::empty(3);
        c.push_msg(pid(3), pid(1));
        c.push_msg(pid(3), pid(1));
        c.push_msg(pid(3), pid(2));
        assert_eq!(rec_multiset(&c, pid(3)), vec![pid(1), pid(1)]);
        assert!(rec_multiset(&Configuration::empty(3), pid(3)).is_empty());
        assert!(rec_multiset(&sparse3(), pid(3)).is_empty());
    }

    #[test]
    fn psi_examples() {
        let mut c = Configuration::empty(5);
        for q in [1, 3, 5] {
            c.insert_nb(pid(2), pid(q));
        }
        assert_eq!(psi_p(&c, pid(2)), 3);
        assert_eq!(psi(&c), 3);
        assert_eq!(psi(&correct(3)), 0);
        assert_eq!(psi_p(&correct(5), pid(3)), 0);

        let mut c = Configuration::empty(3);
        c.set_add(pid(3), Some(pid(1)));
        assert_eq!(psi_p(&c, pid(3)), 2);
    }

    #[test]
    fn keep_alive_to_undesired_neighbor_raises_psi() {
        let mut c = Configuration::empty(5);
        c.insert_nb(pid(3), pid(1));
        let s = Step::KeepAlive { actor: pid(3) };
        let after = crate::semantics::apply_step(&c, &s).unwrap();
        assert_eq!(psi(&after) as i64 - psi(&c) as i64, 2);
        assert_eq!(predicted_psi_delta(&c, &s), 2);
    }

    #[test]
    fn nm_neighborhoods() {
        let mut c = Configuration::empty(3);
        c.insert_nb(pid(2), pid(1));
        c.push_msg(pid(2), pid(3));
        assert_eq!(left_nm(&c, pid(2)).iter().collect::<Vec<_>>(), vec![pid(1)]);
        assert_eq!(
            right_nm(&c, pid(2)).iter().collect::<Vec<_>>(),
            vec![pid(3)]
        );
        let e = Configuration::empty(3);
        assert!(left_nm(&e, pid(2)).is_empty() && right_nm(&e, pid(2)).is_empty());
        let mut c = Configuration::empty(3);
        c.set_add(pid(3), Some(pid(1)));
        assert_eq!(left_nm(&c, pid(3)).iter().collect::<Vec<_>>(), vec![pid(1)]);
    }

    #[test]
    fn nearest_neighbors() {
        let mut c = Configuration::empty(5);
        c.insert_nb(pid(5), pid(1));
        c.push_msg(pid(5), pid(4));
        assert_eq!(shortest_left(&c, pid(5)), Some(pid(4)));
        c.insert_nb(pid(1), pid(5));
        c.set_add(pid(1), Some(pid(2)));
        assert_eq!(shortest_right(&c, pid(1)), Some(pid(2)));
        assert_eq!(shortest_left(&c, pid(3)), None);
        assert_eq!(shortest_right(&c, pid(3)), None);
    }

    #[test]
    fn psi_e_examples() {
        // p=1: 0 + 3, p=2: 1 + 3, p=3: 1 + 0
        assert_eq!(psi_e(&sparse3()), 8);
        assert_eq!(psi_e(&correct(5)), 8);
        assert_eq!(psi_e(&Configuration::empty(1)), 0);
    }

    #[test]
    fn psi_sigma_examples() {
        assert_eq!(psi_sigma(&correct(3)), 12);
        assert_eq!(psi_sigma(&correct(5)), 40);
        assert_eq!(psi(&sparse3()), 0);
        assert_eq!(psi_sigma(&sparse3()), 24);
    }

    #[test]
    fn longest_edges() {
        assert_eq!(lenmax_edge(&correct(3)), 1);
        let mut c = correct(5);
        c.insert_nb(pid(1), pid(5));
        assert_eq!(lenmax_edge(&c), 4);
        assert_eq!(max_edges(&c), [(pid(1), pid(5))].into_iter().collect());
        assert_eq!(lenmax_edge(&Configuration::empty(4)), 0);
        assert!(max_edges(&Configuration::empty(4)).is_empty());
        let mut c = Configuration::empty(6);
        c.push_msg(pid(6), pid(2));
        assert_eq!(lenmax_edge(&c), 4);
        assert_eq!(
            lenmax_edge(&c),
            ntm(&c).iter().map(|(a, b)| a.dist(b)).max().unwrap()
        );
    }

    #[test]
    fn linearization_delta_formula() {
        let mut c = Configuration::empty(5);
        for q in [1, 3, 5] {
            c.insert_nb(pid(2), pid(q));
        }
        let s = Step::LinRight {
            actor: pid(2),
            j: pid(3),
            k: pid(5),
        };
        assert_eq!(predicted_psi_delta(&c, &s), -1);
        let after = crate::semantics::apply_step(&c, &s).unwrap();
        assert_eq!(psi(&after) as i64 - psi(&c) as i64, -1);
    }
}
