//! Identifier universe, global configurations and their topology graphs.
//!
//! Processes are addressed internally by [`ProcessId`], their 0-based position
//! in the totally ordered [`IdUniverse`]. Comparing two `ProcessId`s therefore
//! compares the identifiers they stand for, and the distance between two
//! processes is the difference of their positions. The external identifiers
//! (unsigned integers) only appear at the file-format boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of a process in the identifier order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId(pub u32);

impl ProcessId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Next smaller process, `None` for the minimum.
    #[inline]
    pub fn pred(self) -> Option<ProcessId> {
        self.0.checked_sub(1).map(ProcessId)
    }

    /// Next greater process in a universe of `n` processes, `None` for the maximum.
    #[inline]
    pub fn succ(self, n: usize) -> Option<ProcessId> {
        let next = self.0 + 1;
        ((next as usize) < n).then_some(ProcessId(next))
    }

    /// Number of processes `r` with `min(self, other) < r <= max(self, other)`.
    #[inline]
    pub fn dist(self, other: ProcessId) -> u64 {
        u64::from(self.0.abs_diff(other.0))
    }

    /// True when `other` is the predecessor or successor of `self`.
    #[inline]
    pub fn is_desired(self, other: ProcessId) -> bool {
        self.0.abs_diff(other.0) == 1
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// The finite, totally ordered set of process identifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdUniverse {
    ids: Vec<u64>,
}

impl IdUniverse {
    pub fn new(ids: Vec<u64>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidUniverse("empty".into()));
        }
        if let Some(w) = ids.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidUniverse(format!(
                "{} is not smaller than {}",
                w[0], w[1]
            )));
        }
        if ids.len() > MAX_PROCESSES {
            return Err(Error::InvalidUniverse(format!(
                "{} processes, at most {MAX_PROCESSES} supported",
                ids.len()
            )));
        }
        Ok(Self { ids })
    }

    /// The universe `{1, ..., n}`.
    pub fn range(n: usize) -> Self {
        assert!(n >= 1, "universe needs at least one process");
        Self {
            ids: (1..=n as u64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Longest possible edge length, `n - 1`.
    pub fn maxdist(&self) -> u64 {
        self.ids.len() as u64 - 1
    }

    pub fn process(&self, id: u64) -> Result<ProcessId> {
        self.ids
            .binary_search(&id)
            .map(|i| ProcessId(i as u32))
            .map_err(|_| Error::UnknownId(id))
    }

    pub fn id(&self, p: ProcessId) -> u64 {
        self.ids[p.index()]
    }

    /// 1-based position of `id` in the order.
    pub fn index(&self, id: u64) -> Result<usize> {
        Ok(self.process(id)?.index() + 1)
    }

    pub fn pred(&self, id: u64) -> Result<Option<u64>> {
        Ok(self.process(id)?.pred().map(|p| self.id(p)))
    }

    pub fn succ(&self, id: u64) -> Result<Option<u64>> {
        Ok(self.process(id)?.succ(self.len()).map(|p| self.id(p)))
    }

    pub fn dist(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.process(a)?.dist(self.process(b)?))
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.ids.len() as u32).map(ProcessId)
    }

    pub fn g_lin(&self) -> DirectedEdgeSet {
        g_lin(self.len())
    }

    pub fn ug_lin(&self) -> UndirectedEdgeSet {
        ug_lin(self.len())
    }
}

/// Largest supported number of processes.
pub const MAX_PROCESSES: usize = 64 * WORDS;

const WORDS: usize = 1;

/// Set of processes, stored as a fixed-width bitset.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Debug)]
pub struct ProcSet {
    words: [u64; WORDS],
}

#[inline]
fn top_bit(wi: usize, w: u64) -> ProcessId {
    ProcessId((wi * 64 + 63 - w.leading_zeros() as usize) as u32)
}

impl ProcSet {
    /// Empty set able to hold processes of a universe of size `n`.
    pub fn with_capacity(n: usize) -> Self {
        assert!(n <= MAX_PROCESSES, "at most {MAX_PROCESSES} processes");
        Self::default()
    }

    pub fn from_iter_n(n: usize, items: impl IntoIterator<Item = ProcessId>) -> Self {
        let mut s = Self::with_capacity(n);
        for p in items {
            s.insert(p);
        }
        s
    }

    #[inline]
    pub fn contains(&self, p: ProcessId) -> bool {
        let i = p.index();
        i < MAX_PROCESSES && self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    /// Returns true when `p` was not present.
    #[inline]
    pub fn insert(&mut self, p: ProcessId) -> bool {
        let i = p.index();
        let bit = 1u64 << (i % 64);
        let fresh = self.words[i / 64] & bit == 0;
        self.words[i / 64] |= bit;
        fresh
    }

    /// Returns true when `p` was present.
    #[inline]
    pub fn remove(&mut self, p: ProcessId) -> bool {
        let i = p.index();
        if i >= MAX_PROCESSES {
            return false;
        }
        let bit = 1u64 << (i % 64);
        let had = self.words[i / 64] & bit != 0;
        self.words[i / 64] &= !bit;
        had
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words == [0; WORDS]
    }

    /// Members in ascending order.
    #[inline]
    pub fn iter(&self) -> Iter {
        Iter::new(self.words, 0, MAX_PROCESSES)
    }

    #[inline]
    pub fn is_subset(&self, other: &ProcSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(&w, &o)| w & !o == 0)
    }

    #[inline]
    pub fn union(&self, other: &ProcSet) -> ProcSet {
        let mut words = self.words;
        for (w, &o) in words.iter_mut().zip(&other.words) {
            *w |= o;
        }
        ProcSet { words }
    }

    /// Members of `self` not in `other`.
    #[inline]
    pub fn difference(&self, other: &ProcSet) -> ProcSet {
        let mut words = self.words;
        for (w, &o) in words.iter_mut().zip(&other.words) {
            *w &= !o;
        }
        ProcSet { words }
    }

    /// Members strictly smaller than `p`, ascending.
    #[inline]
    pub fn below(&self, p: ProcessId) -> Iter {
        Iter::new(self.words, 0, p.index())
    }

    /// Members strictly greater than `p`, ascending.
    #[inline]
    pub fn above(&self, p: ProcessId) -> Iter {
        Iter::new(self.words, p.index() + 1, MAX_PROCESSES)
    }

    /// Greatest member smaller than `p`.
    #[inline]
    pub fn max_below(&self, p: ProcessId) -> Option<ProcessId> {
        let i = p.index().min(MAX_PROCESSES);
        let top = i / 64;
        if top < WORDS {
            let w = self.words[top] & ((1u64 << (i % 64)) - 1);
            if w != 0 {
                return Some(top_bit(top, w));
            }
        }
        (0..top.min(WORDS))
            .rev()
            .find_map(|wi| (self.words[wi] != 0).then(|| top_bit(wi, self.words[wi])))
    }

    /// Smallest member greater than `p`.
    #[inline]
    pub fn min_above(&self, p: ProcessId) -> Option<ProcessId> {
        self.above(p).next()
    }

    /// Smallest member.
    #[inline]
    pub fn first(&self) -> Option<ProcessId> {
        self.iter().next()
    }

    /// Greatest member.
    #[inline]
    pub fn last(&self) -> Option<ProcessId> {
        (0..WORDS)
            .rev()
            .find_map(|wi| (self.words[wi] != 0).then(|| top_bit(wi, self.words[wi])))
    }

    /// Bits of the first 64 processes.
    #[inline]
    pub fn low_word(&self) -> u64 {
        self.words[0]
    }
}

/// Ascending iterator over the members of a [`ProcSet`] in a half-open range.
#[derive(Clone, Debug)]
pub struct Iter {
    words: [u64; WORDS],
    wi: usize,
    cur: u64,
    end: usize,
}

impl Iter {
    #[inline]
    fn new(words: [u64; WORDS], start: usize, end: usize) -> Self {
        let wi = start / 64;
        let cur = if wi < WORDS {
            words[wi] & (u64::MAX << (start % 64))
        } else {
            0
        };
        Self {
            words,
            wi,
            cur,
            end,
        }
    }
}

impl Iterator for Iter {
    type Item = ProcessId;

    #[inline]
    fn next(&mut self) -> Option<ProcessId> {
        loop {
            if self.cur != 0 {
                let i = self.wi * 64 + self.cur.trailing_zeros() as usize;
                if i >= self.end {
                    self.cur = 0;
                    self.wi = WORDS;
                    return None;
                }
                self.cur &= self.cur - 1;
                return Some(ProcessId(i as u32));
            }
            self.wi += 1;
            if self.wi >= WORDS || self.wi * 64 >= self.end {
                self.wi = WORDS;
                return None;
            }
            self.cur = self.words[self.wi];
        }
    }
}

/// One constraint of a configuration that does not hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigViolation {
    SelfInNeighborhood(ProcessId),
    SelfAddressedMessage(ProcessId),
    SelfAddition(ProcessId),
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SelfInNeighborhood(p) => write!(f, "self in neighborhood of {p}"),
            Self::SelfAddressedMessage(p) => write!(f, "self-addressed payload to {p}"),
            Self::SelfAddition(p) => write!(f, "self addition pending at {p}"),
        }
    }
}

/// Global state in standard form: neighborhoods, in-transit messages and
/// pending additions.
///
/// The set of processes that are in the middle of adding an id is the domain
/// of `add`; it is not stored separately. Messages are a multiset of
/// `(receiver, payload)` pairs kept as a dense count matrix.
#[derive(PartialEq, Eq, Hash, Debug)]
pub struct Configuration {
    nb: Vec<ProcSet>,
    msgs: Vec<u32>,
    add: Vec<Option<ProcessId>>,
    total_msgs: u64,
    // derived: payloads with a nonzero count, per receiver
    pending: Vec<ProcSet>,
    // derived: nb ∪ pending ∪ add, per process
    out: Vec<ProcSet>,
    // derived: messages per receiver with multiplicity
    inbox_len: Vec<u64>,
}

impl Clone for Configuration {
    fn clone(&self) -> Self {
        Self {
            nb: self.nb.clone(),
            msgs: self.msgs.clone(),
            add: self.add.clone(),
            total_msgs: self.total_msgs,
            pending: self.pending.clone(),
            out: self.out.clone(),
            inbox_len: self.inbox_len.clone(),
        }
    }

    fn clone_from(&mut self, source: &Self) {
        self.nb.clone_from(&source.nb);
        self.msgs.clone_from(&source.msgs);
        self.add.clone_from(&source.add);
        self.total_msgs = source.total_msgs;
        self.pending.clone_from(&source.pending);
        self.out.clone_from(&source.out);
        self.inbox_len.clone_from(&source.inbox_len);
    }
}

impl Configuration {
    /// All neighborhoods empty, no messages, nothing pending.
    pub fn empty(n: usize) -> Self {
        assert!(n >= 1, "configuration needs at least one process");
        assert!(n <= MAX_PROCESSES, "at most {MAX_PROCESSES} processes");
        Self {
            nb: vec![ProcSet::with_capacity(n); n],
            msgs: vec![0; n * n],
            add: vec![None; n],
            total_msgs: 0,
            pending: vec![ProcSet::with_capacity(n); n],
            out: vec![ProcSet::with_capacity(n); n],
            inbox_len: vec![0; n],
        }
    }

    fn refresh_out(&mut self, p: ProcessId) {
        let i = p.index();
        let mut o = self.nb[i].union(&self.pending[i]);
        if let Some(q) = self.add[i] {
            o.insert(q);
        }
        self.out[i] = o;
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.nb.len()
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.n() as u32).map(ProcessId)
    }

    #[inline]
    pub fn nb(&self, p: ProcessId) -> &ProcSet {
        &self.nb[p.index()]
    }

    #[inline]
    pub fn add(&self, p: ProcessId) -> Option<ProcessId> {
        self.add[p.index()]
    }

    /// Multiplicity of message `(receiver, payload)`.
    #[inline]
    pub fn msg_count(&self, receiver: ProcessId, payload: ProcessId) -> u32 {
        self.msgs[receiver.index() * self.n() + payload.index()]
    }

    pub fn total_msgs(&self) -> u64 {
        self.total_msgs
    }

    /// Distinct pending messages for `receiver` with their multiplicities,
    /// ascending by payload.
    pub fn inbox(&self, receiver: ProcessId) -> impl Iterator<Item = (ProcessId, u32)> + '_ {
        let row = &self.msgs[receiver.index() * self.n()..];
        self.pending[receiver.index()]
            .iter()
            .map(move |q| (q, row[q.index()]))
    }

    /// Payloads with at least one message in transit to `receiver`.
    #[inline]
    pub fn inbox_set(&self, receiver: ProcessId) -> &ProcSet {
        &self.pending[receiver.index()]
    }

    /// Number of messages (with multiplicity) waiting for `receiver`.
    #[inline]
    pub fn inbox_len(&self, receiver: ProcessId) -> u64 {
        self.inbox_len[receiver.index()]
    }

    /// Distinct messages `(receiver, payload, multiplicity)` in canonical order.
    pub fn messages(&self) -> impl Iterator<Item = (ProcessId, ProcessId, u32)> + '_ {
        let n = self.n();
        self.msgs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (ProcessId((i / n) as u32), ProcessId((i % n) as u32), c))
    }

    pub fn insert_nb(&mut self, p: ProcessId, q: ProcessId) -> bool {
        let fresh = self.nb[p.index()].insert(q);
        self.out[p.index()].insert(q);
        fresh
    }

    pub fn remove_nb(&mut self, p: ProcessId, q: ProcessId) -> bool {
        let had = self.nb[p.index()].remove(q);
        if had {
            self.refresh_out(p);
        }
        had
    }

    pub fn push_msg(&mut self, receiver: ProcessId, payload: ProcessId) {
        let n = self.n();
        self.msgs[receiver.index() * n + payload.index()] += 1;
        self.total_msgs += 1;
        self.inbox_len[receiver.index()] += 1;
        self.pending[receiver.index()].insert(payload);
        self.out[receiver.index()].insert(payload);
    }

    /// Removes one copy; false when none was in transit.
    pub fn take_msg(&mut self, receiver: ProcessId, payload: ProcessId) -> bool {
        let n = self.n();
        let slot = &mut self.msgs[receiver.index() * n + payload.index()];
        if *slot == 0 {
            return false;
        }
        *slot -= 1;
        self.total_msgs -= 1;
        self.inbox_len[receiver.index()] -= 1;
        if *slot == 0 {
            self.pending[receiver.index()].remove(payload);
            self.refresh_out(receiver);
        }
        true
    }

    pub fn set_add(&mut self, p: ProcessId, q: Option<ProcessId>) {
        let old = std::mem::replace(&mut self.add[p.index()], q);
        match (old, q) {
            (None, Some(q)) => {
                self.out[p.index()].insert(q);
            }
            (Some(_), _) => self.refresh_out(p),
            (None, None) => {}
        }
    }

    /// Every constraint on a configuration that fails; empty iff valid.
    pub fn validate(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        for p in self.processes() {
            if self.nb(p).contains(p) {
                out.push(ConfigViolation::SelfInNeighborhood(p));
            }
            if self.msg_count(p, p) > 0 {
                out.push(ConfigViolation::SelfAddressedMessage(p));
            }
            if self.add(p) == Some(p) {
                out.push(ConfigViolation::SelfAddition(p));
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfiguration(v))
        }
    }

    /// Does `p` have an outgoing connection to `q` through its neighborhood,
    /// a pending addition or a message in transit?
    #[inline]
    pub fn has_connection(&self, p: ProcessId, q: ProcessId) -> bool {
        self.out[p.index()].contains(q)
    }

    /// Targets of all outgoing connections of `p` (nb, add, msgs).
    #[inline]
    pub fn connections(&self, p: ProcessId) -> &ProcSet {
        &self.out[p.index()]
    }

    /// Byte key identifying the configuration. Equal configurations give
    /// equal keys and distinct ones distinct keys.
    pub fn canonical_key(&self) -> Vec<u8> {
        let n = self.n();
        let mut key = Vec::with_capacity(8 + n * 16);
        key.extend_from_slice(&(n as u32).to_le_bytes());
        for s in &self.nb {
            key.extend_from_slice(&(s.len() as u32).to_le_bytes());
            for q in s.iter() {
                key.extend_from_slice(&q.0.to_le_bytes());
            }
        }
        for a in &self.add {
            match a {
                Some(q) => key.extend_from_slice(&q.0.to_le_bytes()),
                None => key.extend_from_slice(&u32::MAX.to_le_bytes()),
            }
        }
        for (r, q, c) in self.messages() {
            key.extend_from_slice(&r.0.to_le_bytes());
            key.extend_from_slice(&q.0.to_le_bytes());
            key.extend_from_slice(&c.to_le_bytes());
        }
        key
    }
}

/// Directed edges over a universe, no self loops.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DirectedEdgeSet {
    edges: BTreeSet<(ProcessId, ProcessId)>,
}

impl DirectedEdgeSet {
    pub fn insert(&mut self, from: ProcessId, to: ProcessId) {
        debug_assert_ne!(from, to);
        self.edges.insert((from, to));
    }

    pub fn contains(&self, from: ProcessId, to: ProcessId) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProcessId, ProcessId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_subset(&self, other: &DirectedEdgeSet) -> bool {
        self.edges.is_subset(&other.edges)
    }

    pub fn undirected(&self) -> UndirectedEdgeSet {
        let mut u = UndirectedEdgeSet::default();
        for (a, b) in self.iter() {
            u.insert(a, b);
        }
        u
    }
}

impl FromIterator<(ProcessId, ProcessId)> for DirectedEdgeSet {
    fn from_iter<I: IntoIterator<Item = (ProcessId, ProcessId)>>(iter: I) -> Self {
        let mut s = Self::default();
        for (a, b) in iter {
            s.insert(a, b);
        }
        s
    }
}

/// Undirected edges, each stored as `(smaller, greater)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UndirectedEdgeSet {
    edges: BTreeSet<(ProcessId, ProcessId)>,
}

impl UndirectedEdgeSet {
    pub fn insert(&mut self, a: ProcessId, b: ProcessId) {
        debug_assert_ne!(a, b);
        self.edges.insert((a.min(b), a.max(b)));
    }

    pub fn contains(&self, a: ProcessId, b: ProcessId) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProcessId, ProcessId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_subset(&self, other: &UndirectedEdgeSet) -> bool {
        self.edges.is_subset(&other.edges)
    }
}

impl FromIterator<(ProcessId, ProcessId)> for UndirectedEdgeSet {
    fn from_iter<I: IntoIterator<Item = (ProcessId, ProcessId)>>(iter: I) -> Self {
        let mut s = Self::default();
        for (a, b) in iter {
            s.insert(a, b);
        }
        s
    }
}

/// Directed linear graph: both directions between consecutive processes.
pub fn g_lin(n: usize) -> DirectedEdgeSet {
    let mut e = DirectedEdgeSet::default();
    for i in 1..n as u32 {
        e.insert(ProcessId(i - 1), ProcessId(i));
        e.insert(ProcessId(i), ProcessId(i - 1));
    }
    e
}

pub fn ug_lin(n: usize) -> UndirectedEdgeSet {
    (1..n as u32)
        .map(|i| (ProcessId(i - 1), ProcessId(i)))
        .collect()
}

/// Network topology: `(p, q)` for every `q` in `nb(p)`.
pub fn nt(c: &Configuration) -> DirectedEdgeSet {
    c.processes()
        .flat_map(|p| c.nb(p).iter().map(move |q| (p, q)))
        .collect()
}

/// Network topology with messages: neighborhoods, pending additions and
/// messages in transit all count as outgoing edges of their owner.
pub fn ntm(c: &Configuration) -> DirectedEdgeSet {
    let mut e = nt(c);
    for p in c.processes() {
        if let Some(q) = c.add(p) {
            e.insert(p, q);
        }
    }
    for (r, q, _) in c.messages() {
        e.insert(r, q);
    }
    e
}

pub fn unt(c: &Configuration) -> UndirectedEdgeSet {
    nt(c).undirected()
}

pub fn untm(c: &Configuration) -> UndirectedEdgeSet {
    ntm(c).undirected()
}

/// Union-find over process positions.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<u32>,
    rank: Vec<u8>,
    components: usize,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Connectivity of the undirected graph on all `n` processes; isolated
/// processes make it disconnected.
pub fn is_connected(e: &UndirectedEdgeSet, n: usize) -> bool {
    let mut ds = DisjointSets::new(n);
    for (a, b) in e.iter() {
        ds.union(a.0, b.0);
    }
    ds.components() <= 1
}

/// Same as `is_connected(&untm(c), n)` without materialising the edge set.
pub fn untm_connected(c: &Configuration) -> bool {
    let n = c.n();
    if n > 64 {
        let mut ds = DisjointSets::new(n);
        for p in c.processes() {
            for q in c.connections(p).iter() {
                ds.union(p.0, q.0);
            }
        }
        return ds.components() <= 1;
    }
    let mut adj = [0u64; 64];
    for p in c.processes() {
        let out = c.connections(p).low_word();
        adj[p.index()] |= out;
        let mut rest = out;
        while rest != 0 {
            let q = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            adj[q] |= 1 << p.0;
        }
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let (mut seen, mut todo) = (1u64, 1u64);
    while todo != 0 {
        let p = todo.trailing_zeros() as usize;
        todo &= todo - 1;
        let fresh = adj[p] & !seen;
        seen |= fresh;
        todo |= fresh;
    }
    seen == all
}

/// On-disk configuration format.
///
/// `{"ids":[...], "nb":{"<id>":[ids]}, "msgs":[[receiver,payload],...], "add":{"<id>":id}}`
/// Missing `nb` keys are empty sets; message multiplicity is repetition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub ids: Vec<u64>,
    #[serde(default)]
    pub nb: BTreeMap<String, Vec<u64>>,
    #[serde(default)]
    pub msgs: Vec<[u64; 2]>,
    #[serde(default)]
    pub add: BTreeMap<String, u64>,
}

fn parse_key(k: &str) -> Result<u64> {
    k.trim()
        .parse::<u64>()
        .map_err(|_| Error::InvalidUniverse(format!("map key {k:?} is not an id")))
}

impl ConfigFile {
    /// Builds the universe and configuration, rejecting unknown ids and
    /// constraint violations.
    pub fn into_config(&self) -> Result<(IdUniverse, Configuration)> {
        let u = IdUniverse::new(self.ids.clone())?;
        let mut c = Configuration::empty(u.len());
        for (k, qs) in &self.nb {
            let p = u.process(parse_key(k)?)?;
            for &q in qs {
                c.insert_nb(p, u.process(q)?);
            }
        }
        for &[r, q] in &self.msgs {
            c.push_msg(u.process(r)?, u.process(q)?);
        }
        for (k, &q) in &self.add {
            let p = u.process(parse_key(k)?)?;
            c.set_add(p, Some(u.process(q)?));
        }
        c.ensure_valid()?;
        Ok((u, c))
    }

    pub fn from_config(u: &IdUniverse, c: &Configuration) -> Self {
        assert_eq!(u.len(), c.n(), "universe and configuration sizes differ");
        let mut nb = BTreeMap::new();
        let mut add = BTreeMap::new();
        for p in c.processes() {
            let set = c.nb(p);
            if !set.is_empty() {
                nb.insert(
                    u.id(p).to_string(),
                    set.iter().map(|q| u.id(q)).collect::<Vec<_>>(),
                );
            }
            if let Some(q) = c.add(p) {
                add.insert(u.id(p).to_string(), u.id(q));
            }
        }
        let mut msgs = Vec::with_capacity(c.total_msgs() as usize);
        for (r, q, k) in c.messages() {
            for _ in 0..k {
                msgs.push([u.id(r), u.id(q)]);
            }
        }
        Self {
            ids: u.ids().to_vec(),
            nb,
            msgs,
            add,
        }
    }
}

pub fn read_config_json(text: &str) -> Result<(IdUniverse, Configuration)> {
    serde_json::from_str::<ConfigFile>(text)?.into_config()
}

pub fn write_config_json(u: &IdUniverse, c: &Configuration) -> String {
    serde_json::to_string(&ConfigFile::from_config(u, c)).expect("config serialises")
}
