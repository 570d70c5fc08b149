use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use linearize_core::generators::{enumerate_configs, EnumCaps, GeneratorClass, GeneratorSpec};
use linearize_core::harness::{
    census, check_trace, explore, read_trace, simulate, simulate_traced, Branching, CensusConfig,
    ExploreConfig, Goal, Outcome, RunResult, SimConfig,
};
use linearize_core::model::{read_config_json, write_config_json, Configuration, IdUniverse};
use linearize_core::predicates::MonitorStatus;
use linearize_core::schedulers::SchedulerPolicy;
use linearize_core::semantics::SelectStrategy;
use linearize_core::Error;

const EXIT_VIOLATION: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "linearize",
    version,
    about = "Simulate and check the linearization protocol"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write an initial configuration as JSON (one per line for `enumerate`).
    Generate(GenerateArgs),
    /// Run one scheduled execution with monitors.
    Simulate(SimulateArgs),
    /// Breadth-first exploration of all interleavings.
    Explore(ExploreArgs),
    /// Run every enumerated small configuration under many seeds.
    Census(CensusArgs),
    /// Replay a trace file and re-check every record.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Correct,
    MissingEdges,
    Supergraph,
    RandomConnected,
    Enumerate,
}

impl From<ClassArg> for GeneratorClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Correct => GeneratorClass::Correct,
            ClassArg::MissingEdges => GeneratorClass::MissingEdges,
            ClassArg::Supergraph => GeneratorClass::Supergraph,
            ClassArg::RandomConnected => GeneratorClass::RandomConnected,
            ClassArg::Enumerate => GeneratorClass::Enumerate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectArg {
    AllMin,
    AllRandom,
    Max,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchedulerArg {
    Fair,
    Bounded,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum GoalArg {
    AllCorrect,
    NoViolation,
    ReachCorrect,
}

#[derive(Args, Clone)]
struct InitArgs {
    /// Configuration JSON file; overrides --class.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "random-connected")]
    class: ClassArg,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Generator seed; defaults to --seed.
    #[arg(long)]
    gen_seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    extra: usize,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "correct")]
    class: ClassArg,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    extra: usize,
    #[arg(long, default_value_t = 1)]
    msg_cap: u32,
    #[arg(long, default_value_t = 6)]
    total_cap: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SchedArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "all-min")]
    select: SelectArg,
    #[arg(long, value_enum, default_value = "fair")]
    scheduler: SchedulerArg,
    /// Aging weight of the fair scheduler.
    #[arg(long, default_value_t = 1)]
    aging: u64,
    /// Message delay bound of the bounded scheduler (default 4n).
    #[arg(long)]
    delay_bound: Option<u64>,
    /// Match interval bound of the bounded scheduler (default 2n).
    #[arg(long)]
    match_bound: Option<u64>,
}

impl SchedArgs {
    fn policy(&self, n: usize) -> SchedulerPolicy {
        match self.scheduler {
            SchedulerArg::Fair => SchedulerPolicy::FairRandom {
                seed: self.seed,
                aging: self.aging,
            },
            SchedulerArg::Bounded => SchedulerPolicy::BoundedDelay {
                seed: self.seed,
                delay_bound: self.delay_bound.unwrap_or(4 * n as u64),
                match_bound: self.match_bound.unwrap_or(2 * n as u64),
            },
        }
    }

    fn strategy(&self) -> SelectStrategy {
        match self.select {
            SelectArg::AllMin => SelectStrategy::AllMin,
            SelectArg::AllRandom => SelectStrategy::AllRandom { seed: self.seed },
            SelectArg::Max => SelectStrategy::MaxRule,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    init: InitArgs,
    #[command(flatten)]
    sched: SchedArgs,
    #[arg(long, value_enum, default_value = "off")]
    oracle: OnOff,
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Steps to continue after convergence (default 10n).
    #[arg(long)]
    tail: Option<u64>,
    /// Write a JSONL trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    init: InitArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Branch on one selection strategy instead of every choice.
    #[arg(long, value_enum)]
    select: Option<SelectArg>,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    msg_cap: u32,
    #[arg(long)]
    total_cap: Option<u32>,
    #[arg(long, value_enum, default_value = "no-violation")]
    goal: GoalArg,
    #[arg(long, default_value_t = 5_000_000)]
    max_states: usize,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    msg_cap: u32,
    #[arg(long, default_value_t = 6)]
    total_cap: u32,
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    #[arg(long, value_enum, default_value = "fair")]
    scheduler: SchedulerArg,
    #[arg(long, value_enum, default_value = "all-min")]
    select: SelectArg,
    /// Write non-converged instances (with traces) as JSONL here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    trace: PathBuf,
}

enum Fail {
    Input(String),
    Violation,
    Budget,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Input(e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Input(e.to_string())
    }
}

fn load_init(a: &InitArgs, seed: u64) -> Result<(IdUniverse, Configuration), Fail> {
    if let Some(path) = &a.init {
        let text = std::fs::read_to_string(path)?;
        return Ok(read_config_json(&text)?);
    }
    let spec = GeneratorSpec {
        class: a.class.into(),
        n: a.n,
        seed: a.gen_seed.unwrap_or(seed),
        extra: a.extra,
        caps: EnumCaps {
            multiplicity: 1,
            total: 6,
        },
    };
    Ok((IdUniverse::range(a.n), spec.generate()?))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Fail> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn generate(a: GenerateArgs) -> Result<(), Fail> {
    if a.n == 0 {
        return Err(Fail::Input("n must be at least 1".into()));
    }
    let u = IdUniverse::range(a.n);
    let mut out = output(&a.out)?;
    let class: GeneratorClass = a.class.into();
    if class == GeneratorClass::Enumerate {
        let caps = EnumCaps {
            multiplicity: a.msg_cap,
            total: a.total_cap,
        };
        for c in enumerate_configs(a.n, caps) {
            writeln!(out, "{}", write_config_json(&u, &c))?;
        }
    } else {
        let spec = GeneratorSpec {
            class,
            n: a.n,
            seed: a.seed,
            extra: a.extra,
            caps: EnumCaps {
                multiplicity: a.msg_cap,
                total: a.total_cap,
            },
        };
        writeln!(out, "{}", write_config_json(&u, &spec.generate()?))?;
    }
    out.flush()?;
    Ok(())
}

fn run_summary(r: &RunResult) -> serde_json::Value {
    json!({
        "outcome": r.outcome.name(),
        "steps": r.steps,
        "first_correct": r.first_correct,
        "kind_counts": r.kind_counts,
        "final_potentials": r.final_potentials,
        "violations": r.violations.iter()
            .map(|v| json!({"property": v.property.name(), "detail": v.detail}))
            .collect::<Vec<_>>(),
        "horizon": r.horizon,
        "oracle_granted_keepalives": r.oracle_granted_keepalives,
    })
}

fn sim(a: SimulateArgs) -> Result<(), Fail> {
    let (u, init) = load_init(&a.init, a.sched.seed)?;
    let cfg = SimConfig {
        policy: a.sched.policy(u.len()),
        strategy: a.sched.strategy(),
        oracle: a.oracle == OnOff::On,
        budget: a.budget,
        tail: a.tail,
    };
    if cfg.budget == 0 {
        return Err(Fail::Input("budget must be positive".into()));
    }
    let r = match &a.trace {
        Some(path) => {
            let meta = BTreeMap::from([
                ("policy".to_string(), format!("{:?}", cfg.policy)),
                ("select".to_string(), cfg.strategy.to_string()),
                ("oracle".to_string(), cfg.oracle.to_string()),
            ]);
            simulate_traced(&u, &init, &cfg, meta, BufWriter::new(File::create(path)?))?
        }
        None => simulate(&init, &cfg),
    };
    println!("{}", run_summary(&r));
    match r.outcome {
        Outcome::Converged => Ok(()),
        Outcome::BudgetExhausted => Err(Fail::Budget),
        Outcome::Violation => Err(Fail::Violation),
    }
}

fn explore_cmd(a: ExploreArgs) -> Result<(), Fail> {
    let (_, init) = load_init(&a.init, a.seed)?;
    let branching = match a.select {
        None => Branching::AllChoices,
        Some(s) => Branching::Strategy(
            SchedArgs {
                seed: a.seed,
                select: s,
                scheduler: SchedulerArg::Fair,
                aging: 1,
                delay_bound: None,
                match_bound: None,
            }
            .strategy(),
        ),
    };
    let cfg = ExploreConfig {
        branching,
        caps: EnumCaps {
            multiplicity: a.msg_cap,
            total: a.total_cap.unwrap_or(u32::MAX),
        },
        depth: a.depth,
        goal: match a.goal {
            GoalArg::AllCorrect => Goal::AllCorrect,
            GoalArg::NoViolation => Goal::NoViolation,
            GoalArg::ReachCorrect => Goal::ReachCorrect,
        },
        max_states: a.max_states,
    };
    let r = explore(&init, &cfg);
    println!("{}", serde_json::to_string(&r).map_err(Error::from)?);
    if !r.goal_holds {
        Err(Fail::Violation)
    } else if r.partial {
        Err(Fail::Budget)
    } else {
        Ok(())
    }
}

fn census_cmd(a: CensusArgs) -> Result<(), Fail> {
    if a.n == 0 {
        return Err(Fail::Input("n must be at least 1".into()));
    }
    let mut cfg = CensusConfig::new(
        a.n,
        EnumCaps {
            multiplicity: a.msg_cap,
            total: a.total_cap,
        },
        a.seeds,
    );
    cfg.seed_base = a.seed;
    cfg.budget = a.budget;
    cfg.bounded = a.scheduler == SchedulerArg::Bounded;
    cfg.strategy = SchedArgs {
        seed: a.seed,
        select: a.select,
        scheduler: a.scheduler,
        aging: 1,
        delay_bound: None,
        match_bound: None,
    }
    .strategy();
    let r = census(&cfg);
    if let Some(path) = &a.out {
        let mut out = BufWriter::new(File::create(path)?);
        for f in &r.failures {
            writeln!(out, "{}", serde_json::to_string(f).map_err(Error::from)?)?;
        }
        out.flush()?;
    }
    println!(
        "{}",
        json!({
            "configs": r.configs,
            "runs": r.runs,
            "converged": r.converged,
            "convergence_rate": r.convergence_rate(),
            "max_steps_to_correct": r.max_steps_to_correct,
            "failures": r.failures.len(),
        })
    );
    if r.failures.iter().any(|f| f.outcome == Outcome::Violation) {
        Err(Fail::Violation)
    } else if !r.failures.is_empty() {
        Err(Fail::Budget)
    } else {
        Ok(())
    }
}

fn check(a: CheckArgs) -> Result<(), Fail> {
    let trace = read_trace(&a.trace)?;
    let r = check_trace(&trace)?;
    let steps: Vec<_> = {
        let header = trace.header.as_ref().expect("checked above");
        let (u, _) = header.init.into_config()?;
        trace
            .records
            .iter()
            .map(|rec| rec.step.to_step(&u))
            .collect::<Result<_, _>>()?
    };
    let (_, init) = trace
        .header
        .as_ref()
        .expect("checked above")
        .init
        .into_config()?;
    let horizon = linearize_core::predicates::horizon_monitors(&init, &steps);
    println!(
        "{}",
        json!({
            "steps": r.steps,
            "mismatches": r.mismatches,
            "violations": r.violations,
            "horizon": horizon,
        })
    );
    let horizon_bad = [
        &horizon.no_undesired_keepalive,
        &horizon.keepalive_targets_closer,
        &horizon.no_keepalive_back,
    ]
    .iter()
    .any(|s| matches!(s, MonitorStatus::Violated(_)));
    if !r.mismatches.is_empty() {
        Err(Fail::Input("trace disagrees with its replay".into()))
    } else if !r.violations.is_empty() || horizon_bad {
        Err(Fail::Violation)
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Generate(a) => generate(a),
        Cmd::Simulate(a) => sim(a),
        Cmd::Explore(a) => explore_cmd(a),
        Cmd::Census(a) => census_cmd(a),
        Cmd::Check(a) => check(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Fail::Violation) => ExitCode::from(EXIT_VIOLATION),
        Err(Fail::Budget) => ExitCode::from(EXIT_BUDGET),
    }
}
