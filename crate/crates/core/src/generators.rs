//! Initial configurations for each convergence class, and exhaustive
//! enumeration of small configurations.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{untm_connected, Configuration, ProcessId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorClass {
    Correct,
    MissingEdges,
    Supergraph,
    RandomConnected,
    Enumerate,
}

impl GeneratorClass {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorClass::Correct => "correct",
            GeneratorClass::MissingEdges => "missing-edges",
            GeneratorClass::Supergraph => "supergraph",
            GeneratorClass::RandomConnected => "random-connected",
            GeneratorClass::Enumerate => "enumerate",
        }
    }
}

impl fmt::Display for GeneratorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            GeneratorClass::Correct,
            GeneratorClass::MissingEdges,
            GeneratorClass::Supergraph,
            GeneratorClass::RandomConnected,
            GeneratorClass::Enumerate,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::Generator(format!("unknown class {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EnumCaps {
    /// Largest multiplicity of any single (receiver, payload) message.
    pub multiplicity: u32,
    /// Largest total number of messages in transit.
    pub total: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub class: GeneratorClass,
    pub n: usize,
    pub seed: u64,
    pub extra: usize,
    pub caps: EnumCaps,
}

impl GeneratorSpec {
    /// Builds a single configuration. For `Enumerate` use
    /// [`enumerate_configs`] instead.
    pub fn generate(&self) -> Result<Configuration> {
        if self.n == 0 {
            return Err(Error::Generator("n must be at least 1".into()));
        }
        match self.class {
            GeneratorClass::Correct => Ok(gen_correct(self.n)),
            GeneratorClass::MissingEdges => Ok(gen_missing_edges(self.n, self.seed)),
            GeneratorClass::Supergraph => gen_supergraph(self.n, self.seed, self.extra),
            GeneratorClass::RandomConnected => {
                Ok(gen_random_connected(self.n, self.seed, self.extra))
            }
            GeneratorClass::Enumerate => Err(Error::Generator(
                "enumerate produces a stream, not a single configuration".into(),
            )),
        }
    }
}

pub fn gen_correct(n: usize) -> Configuration {
    let mut c = Configuration::empty(n);
    for i in 1..n as u32 {
        c.insert_nb(ProcessId(i - 1), ProcessId(i));
        c.insert_nb(ProcessId(i), ProcessId(i - 1));
    }
    c
}

/// Realizes the connection `p -> q` as an nb entry, a message or a pending
/// add. Add is only chosen while the slot of `p` is free.
fn place(c: &mut Configuration, rng: &mut ChaCha8Rng, p: ProcessId, q: ProcessId) {
    let kinds = if c.add(p).is_none() { 3 } else { 2 };
    match rng.random_range(0..kinds) {
        0 => {
            c.insert_nb(p, q);
        }
        1 => c.push_msg(p, q),
        _ => c.set_add(p, Some(q)),
    }
}

/// Exactly one desired connection per consecutive pair.
pub fn gen_missing_edges(n: usize, seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Configuration::empty(n);
    for i in 1..n as u32 {
        let (a, b) = (ProcessId(i - 1), ProcessId(i));
        let (p, q) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
        place(&mut c, &mut rng, p, q);
    }
    c
}

/// The linear graph in both directions plus `extra` distinct undesired
/// connections.
pub fn gen_supergraph(n: usize, seed: u64, extra: usize) -> Result<Configuration> {
    let mut pairs: Vec<(ProcessId, ProcessId)> = (0..n as u32)
        .flat_map(|p| (0..n as u32).map(move |q| (ProcessId(p), ProcessId(q))))
        .filter(|&(p, q)| p.dist(q) >= 2)
        .collect();
    if extra > pairs.len() {
        return Err(Error::Generator(format!(
            "extra = {extra} exceeds the {} undesired pairs available for n = {n}",
            pairs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = gen_correct(n);
    pairs.shuffle(&mut rng);
    for &(p, q) in &pairs[..extra] {
        place(&mut c, &mut rng, p, q);
    }
    Ok(c)
}

/// Random spanning tree over all processes plus `extra` random connections.
pub fn gen_random_connected(n: usize, seed: u64, extra: usize) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Configuration::empty(n);
    let mut order: Vec<ProcessId> = (0..n as u32).map(ProcessId).collect();
    order.shuffle(&mut rng);
    for i in 1..n {
        let a = order[i];
        let b = order[rng.random_range(0..i)];
        let (p, q) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
        place(&mut c, &mut rng, p, q);
    }
    if n >= 2 {
        for _ in 0..extra {
            let p = ProcessId(rng.random_range(0..n as u32));
            let mut q = ProcessId(rng.random_range(0..n as u32 - 1));
            if q >= p {
                q = ProcessId(q.0 + 1);
            }
            place(&mut c, &mut rng, p, q);
        }
    }
    c
}

/// Lazy enumeration of every valid configuration within `caps` whose
/// undirected topology (with messages) is connected. Each configuration is
/// produced once: the digits below are a canonical encoding.
pub fn enumerate_configs(n: usize, caps: EnumCaps) -> EnumerateConfigs {
    assert!(n >= 1, "enumeration needs at least one process");
    let pairs = n * (n - 1);
    let mut radix = Vec::with_capacity(2 * pairs + n);
    radix.extend(std::iter::repeat_n(2, pairs));
    radix.extend(std::iter::repeat_n(caps.multiplicity + 1, pairs));
    radix.extend(std::iter::repeat_n(n as u32, n));
    EnumerateConfigs {
        n,
        caps,
        digits: vec![0; radix.len()],
        radix,
        done: false,
    }
}

#[derive(Clone, Debug)]
pub struct EnumerateConfigs {
    n: usize,
    caps: EnumCaps,
    radix: Vec<u32>,
    digits: Vec<u32>,
    done: bool,
}

impl EnumerateConfigs {
    /// Number of raw digit combinations, before the cap and connectivity
    /// filters.
    pub fn raw_space(&self) -> u128 {
        self.radix.iter().map(|&r| r as u128).product()
    }

    fn other(&self, p: usize, k: usize) -> ProcessId {
        // k-th process other than p
        ProcessId(if k < p { k } else { k + 1 } as u32)
    }

    fn decode(&self) -> Option<Configuration> {
        let n = self.n;
        let pairs = n * (n - 1);
        let total: u32 = self.digits[pairs..2 * pairs].iter().sum();
        if total > self.caps.total {
            return None;
        }
        let mut c = Configuration::empty(n);
        for p in 0..n {
            for k in 0..n - 1 {
                let i = p * (n - 1) + k;
                let q = self.other(p, k);
                let pp = ProcessId(p as u32);
                if self.digits[i] == 1 {
                    c.insert_nb(pp, q);
                }
                for _ in 0..self.digits[pairs + i] {
                    c.push_msg(pp, q);
                }
            }
            let a = self.digits[2 * pairs + p] as usize;
            if a > 0 {
                c.set_add(ProcessId(p as u32), Some(self.other(p, a - 1)));
            }
        }
        untm_connected(&c).then_some(c)
    }

    fn advance(&mut self) {
        for (d, &r) in self.digits.iter_mut().zip(&self.radix) {
            *d += 1;
            if *d < r {
                return;
            }
            *d = 0;
        }
        self.done = true;
    }
}

impl Iterator for EnumerateConfigs {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        while !self.done {
            let c = self.decode();
            self.advance();
            if c.is_some() {
                return c;
            }
        }
        None
    }
}
