//! Simulation, invariant checking and bounded exploration for an
//! asynchronous message-passing linearization protocol.

pub mod error;
pub mod generators;
pub mod harness;
pub mod model;
pub mod potentials;
pub mod predicates;
pub mod schedulers;
pub mod semantics;

pub use error::{Error, Result};
pub use generators::{enumerate_configs, EnumCaps, GeneratorClass, GeneratorSpec};
pub use model::{Configuration, IdUniverse, ProcSet, ProcessId};
pub use potentials::PotentialReport;
pub use predicates::{monitor_step, Flags, MonitorReport, Observation, Property};
pub use schedulers::{OracleMode, OracleState, Scheduler, SchedulerPolicy};
pub use semantics::{apply_step, enabled_steps, SelectStrategy, Step, StepKind, StepRecord};
