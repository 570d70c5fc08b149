//! Reference computations written straight from the definitions. They only
//! read `nb`, `msg_count` and `add`, never the cached connection sets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use linearize_core::model::{Configuration, ProcessId};

pub fn pid(i: usize) -> ProcessId {
    ProcessId(i as u32)
}

fn dist(a: usize, b: usize) -> u64 {
    a.abs_diff(b) as u64
}

fn desired(a: usize, b: usize) -> bool {
    dist(a, b) == 1
}

/// Outgoing edges of the topology with messages, with multiplicity.
pub fn edges_with_mult(c: &Configuration) -> Vec<(usize, usize, u64)> {
    let n = c.n();
    let mut out = Vec::new();
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let mut k = u64::from(c.msg_count(pid(p), pid(q)));
            if c.nb(pid(p)).contains(pid(q)) {
                k += 1;
            }
            if c.add(pid(p)) == Some(pid(q)) {
                k += 1;
            }
            if k > 0 {
                out.push((p, q, k));
            }
        }
    }
    out
}

pub fn ntm(c: &Configuration) -> BTreeSet<(usize, usize)> {
    edges_with_mult(c)
        .into_iter()
        .map(|(p, q, _)| (p, q))
        .collect()
}

pub fn nt(c: &Configuration) -> BTreeSet<(usize, usize)> {
    let mut s = BTreeSet::new();
    for p in 0..c.n() {
        for q in c.nb(pid(p)).iter() {
            s.insert((p, q.index()));
        }
    }
    s
}

pub fn g_lin(n: usize) -> BTreeSet<(usize, usize)> {
    (1..n).flat_map(|i| [(i - 1, i), (i, i - 1)]).collect()
}

pub fn psi(c: &Configuration) -> u64 {
    edges_with_mult(c)
        .into_iter()
        .filter(|&(p, q, _)| !desired(p, q))
        .map(|(p, q, k)| k * dist(p, q))
        .sum()
}

fn nearest(e: &BTreeSet<(usize, usize)>, p: usize, left: bool) -> Option<usize> {
    e.iter()
        .copied()
        .filter(|&(a, b)| a == p && if left { b < p } else { b > p })
        .map(|(_, b)| b)
        .min_by_key(|&b| dist(p, b))
}

fn nearest_nb(c: &Configuration, p: usize, left: bool) -> Option<usize> {
    c.nb(pid(p))
        .iter()
        .map(|q| q.index())
        .filter(|&b| if left { b < p } else { b > p })
        .min_by_key(|&b| dist(p, b))
}

pub fn psi_e(c: &Configuration) -> u64 {
    let n = c.n();
    let e = ntm(c);
    let mut total = 0;
    for p in 0..n {
        total += match nearest(&e, p, true) {
            Some(q) => dist(p, q),
            None if p == 0 => 0,
            None => n as u64,
        };
        total += match nearest(&e, p, false) {
            Some(q) => dist(p, q),
            None if p + 1 == n => 0,
            None => n as u64,
        };
    }
    total
}

pub fn psi_sigma(c: &Configuration) -> u64 {
    psi(c) + c.n() as u64 * psi_e(c)
}

pub fn lenmax(c: &Configuration) -> u64 {
    ntm(c)
        .into_iter()
        .map(|(p, q)| dist(p, q))
        .max()
        .unwrap_or(0)
}

pub fn is_correct(c: &Configuration) -> bool {
    let g = g_lin(c.n());
    nt(c) == g && ntm(c) == g
}

pub fn connected(c: &Configuration) -> bool {
    let n = c.n();
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (p, q) in ntm(c) {
        adj[p].push(q);
        adj[q].push(p);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|b| b)
}

/// Problems with one step for the three "never worse" properties: the longest
/// edge, desired neighbors in `nb`, and the nearest neighbor per side.
pub fn monotone_problems(before: &Configuration, after: &Configuration) -> Vec<String> {
    let mut out = Vec::new();
    if lenmax(after) > lenmax(before) {
        out.push(format!("lenmax {} -> {}", lenmax(before), lenmax(after)));
    }
    for p in 0..before.n() {
        for q in before.nb(pid(p)).iter() {
            if desired(p, q.index()) && !after.nb(pid(p)).contains(q) {
                out.push(format!("desired neighbor {} of {p} removed", q.index()));
            }
        }
        for left in [true, false] {
            if let Some(b) = nearest_nb(before, p, left) {
                match nearest_nb(after, p, left) {
                    Some(a) if dist(p, a) <= dist(p, b) => {}
                    other => out.push(format!("nearest of {p} moved from {b} to {other:?}")),
                }
            }
        }
    }
    out
}
