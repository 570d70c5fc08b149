//! Single runs: scheduler, optional oracle, monitors and trace output.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::trace::{OracleLog, TraceHeader, TraceRecord, TraceWriter};
use crate::model::{Configuration, IdUniverse};
use crate::potentials::PotentialReport;
use crate::predicates::{
    monitor_observed, HorizonMonitor, HorizonReport, MonitorReport, Observation, Property,
    Violation,
};
use crate::schedulers::{OracleDecision, OracleMode, OracleState, Scheduler, SchedulerPolicy};
use crate::semantics::{
    apply_step_in_place, enabled_steps_into, SelectStrategy, Step, StepKind, StepRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub policy: SchedulerPolicy,
    pub strategy: SelectStrategy,
    pub oracle: bool,
    /// Maximum number of executed steps.
    pub budget: u64,
    /// Steps to keep running after the first correct configuration.
    /// `None` means `10 * n`.
    pub tail: Option<u64>,
}

impl SimConfig {
    pub fn new(policy: SchedulerPolicy) -> Self {
        Self {
            policy,
            strategy: SelectStrategy::AllMin,
            oracle: false,
            budget: 1_000_000,
            tail: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    BudgetExhausted,
    Violation,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::BudgetExhausted => "budget_exhausted",
            Outcome::Violation => "violation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub steps: u64,
    /// Number of steps after which the configuration was first correct.
    pub first_correct: Option<u64>,
    pub kind_counts: BTreeMap<&'static str, u64>,
    pub final_potentials: PotentialReport,
    pub final_config: Configuration,
    /// Violations of the step that ended the run.
    pub violations: Vec<Violation>,
    pub horizon: HorizonReport,
    pub oracle_suppressed_rounds: u64,
    pub oracle_granted_keepalives: u64,
}

/// Per-step callback: step index, executed step, configuration after it,
/// its observation, oracle decision and monitor report.
type Hook<'a> =
    dyn FnMut(u64, &Step, &Observation, Option<&OracleDecision>, &MonitorReport) -> Result<()> + 'a;

pub fn simulate(init: &Configuration, cfg: &SimConfig) -> RunResult {
    run(init, cfg, None).expect("no hook, no io")
}

/// [`simulate`] writing a full trace to `out`.
pub fn simulate_traced<W: Write>(
    u: &IdUniverse,
    init: &Configuration,
    cfg: &SimConfig,
    meta: BTreeMap<String, String>,
    out: W,
) -> Result<RunResult> {
    let mut w = TraceWriter::new(out);
    let mut header = TraceHeader::new(u, init);
    header.meta = meta;
    w.header(&header)?;
    let mut hook = |i: u64,
                    s: &Step,
                    o: &Observation,
                    d: Option<&OracleDecision>,
                    m: &MonitorReport|
     -> Result<()> {
        w.record(&TraceRecord {
            index: i,
            step: StepRecord::from_step(u, s),
            potentials: o.potentials,
            flags: o.flags,
            oracle: d.map(|d| OracleLog {
                oracle: d.mode.to_string(),
                grantees: d.grantees.iter().map(|&p| u.id(p)).collect(),
            }),
            monitor_violations: m.names(),
        })
    };
    run(init, cfg, Some(&mut hook))
}

fn run(
    init: &Configuration,
    cfg: &SimConfig,
    mut hook: Option<&mut Hook<'_>>,
) -> Result<RunResult> {
    let n = init.n();
    let tail = cfg.tail.unwrap_or(10 * n as u64);
    let mut c = init.clone();
    let mut obs = Observation::of(&c);
    let mut sched = Scheduler::new(cfg.policy, n);
    let mut oracle = cfg.oracle.then(OracleState::new);
    let mut horizon = HorizonMonitor::new(n);
    let mut kind_counts = [0u64; 6];
    let mut before = c.clone();
    let mut enabled = Vec::with_capacity(4 * n);
    let mut first_correct = obs.flags.correct.then_some(0);
    let mut violations = Vec::new();
    let mut steps = 0u64;
    let (mut suppressed, mut granted) = (0u64, 0u64);

    let outcome = loop {
        if let Some(fc) = first_correct {
            if steps >= fc + tail {
                break Outcome::Converged;
            }
        }
        if steps >= cfg.budget {
            break if first_correct.is_some() {
                Outcome::Converged
            } else {
                Outcome::BudgetExhausted
            };
        }
        enabled_steps_into(&c, cfg.strategy, &mut enabled);
        let decision = match oracle.as_mut() {
            Some(o) => {
                let (a, d) = o.filter(&c, &enabled);
                enabled = a;
                Some(d)
            }
            None => None,
        };
        let allowed = &enabled;
        if allowed.is_empty() {
            violations.push(Violation {
                property: Property::OracleStall,
                detail: format!("no allowed step after {steps} steps"),
            });
            break Outcome::Violation;
        }
        let s = sched.next_step(&c, allowed);
        let used_grant = oracle.as_mut().is_some_and(|o| o.observe(&s));
        if let Some(d) = &decision {
            if d.mode == OracleMode::Suppress {
                suppressed += 1;
            }
        }
        granted += u64::from(used_grant);

        horizon.observe(&c, &s);
        before.clone_from(&c);
        apply_step_in_place(&mut c, &s).expect("scheduler picked an enabled step");
        let next = Observation::of(&c);
        let mut report = monitor_observed(&before, &obs, &s, &c, &next, steps);
        if cfg.oracle && next.potentials.psi > obs.potentials.psi && !used_grant {
            report.violations.push(Violation {
                property: Property::OraclePsiIncrease,
                detail: format!(
                    "psi rose {} -> {} under non-granted {s}",
                    obs.potentials.psi, next.potentials.psi
                ),
            });
        }
        kind_counts[s.kind() as usize] += 1;
        if let Some(h) = hook.as_mut() {
            h(steps, &s, &next, decision.as_ref(), &report)?;
        }
        steps += 1;
        obs = next;
        if !report.is_clean() {
            violations = report.violations;
            break Outcome::Violation;
        }
        if horizon.violated() {
            break Outcome::Violation;
        }
        if first_correct.is_none() && obs.flags.correct {
            first_correct = Some(steps);
        }
    };

    Ok(RunResult {
        outcome,
        steps,
        first_correct,
        kind_counts: StepKind::ALL
            .iter()
            .zip(kind_counts)
            .filter(|&(_, k)| k > 0)
            .map(|(kind, k)| (kind.name(), k))
            .collect(),
        final_potentials: obs.potentials,
        final_config: c,
        violations,
        horizon: horizon.report(),
        oracle_suppressed_rounds: suppressed,
        oracle_granted_keepalives: granted,
    })
}
