//! Exhaustive small-n convergence census over enumerated configurations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generators::{enumerate_configs, EnumCaps};
use crate::harness::simulate::{simulate, simulate_traced, Outcome, SimConfig};
use crate::model::{write_config_json, IdUniverse};
use crate::schedulers::SchedulerPolicy;
use crate::semantics::SelectStrategy;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CensusConfig {
    pub n: usize,
    pub caps: EnumCaps,
    pub seeds: u64,
    pub seed_base: u64,
    pub budget: u64,
    pub bounded: bool,
    pub strategy: SelectStrategy,
}

impl CensusConfig {
    pub fn new(n: usize, caps: EnumCaps, seeds: u64) -> Self {
        Self {
            n,
            caps,
            seeds,
            seed_base: 0,
            budget: 100_000,
            bounded: false,
            strategy: SelectStrategy::AllMin,
        }
    }

    fn policy(&self, seed: u64) -> SchedulerPolicy {
        if self.bounded {
            SchedulerPolicy::bounded(seed, self.n)
        } else {
            SchedulerPolicy::fair(seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusFailure {
    pub config_index: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub init: String,
    /// Full JSONL trace of the run.
    pub trace: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusReport {
    pub configs: usize,
    pub runs: u64,
    pub converged: u64,
    pub max_steps_to_correct: u64,
    pub failures: Vec<CensusFailure>,
}

impl CensusReport {
    pub fn convergence_rate(&self) -> f64 {
        if self.runs == 0 {
            1.0
        } else {
            self.converged as f64 / self.runs as f64
        }
    }
}

pub fn census(cfg: &CensusConfig) -> CensusReport {
    let configs: Vec<_> = enumerate_configs(cfg.n, cfg.caps).collect();
    let u = IdUniverse::range(cfg.n);
    let per_config: Vec<(u64, u64, Vec<CensusFailure>)> = configs
        .par_iter()
        .enumerate()
        .map(|(idx, init)| {
            let mut converged = 0;
            let mut max_steps = 0;
            let mut failures = Vec::new();
            for k in 0..cfg.seeds {
                let seed = cfg.seed_base.wrapping_add(k);
                let sim = SimConfig {
                    strategy: cfg.strategy,
                    budget: cfg.budget,
                    ..SimConfig::new(cfg.policy(seed))
                };
                let r = simulate(init, &sim);
                if r.outcome == Outcome::Converged {
                    converged += 1;
                    max_steps = max_steps.max(r.first_correct.unwrap_or(0));
                } else {
                    let mut buf = Vec::new();
                    let _ = simulate_traced(&u, init, &sim, Default::default(), &mut buf);
                    failures.push(CensusFailure {
                        config_index: idx,
                        seed,
                        outcome: r.outcome,
                        init: write_config_json(&u, init),
                        trace: String::from_utf8_lossy(&buf).into_owned(),
                    });
                }
            }
            (converged, max_steps, failures)
        })
        .collect();

    let mut rep = CensusReport {
        configs: configs.len(),
        runs: configs.len() as u64 * cfg.seeds,
        ..CensusReport::default()
    };
    for (c, m, f) in per_config {
        rep.converged += c;
        rep.max_steps_to_correct = rep.max_steps_to_correct.max(m);
        rep.failures.extend(f);
    }
    rep
}
