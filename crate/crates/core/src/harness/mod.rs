//! Simulation runner, explorer, census and trace I/O.

pub mod census;
pub mod explore;
pub mod simulate;
pub mod trace;

pub use census::{census, CensusConfig, CensusFailure, CensusReport};
pub use explore::{explore, Branching, ExplorationResult, ExploreConfig, Goal};
pub use simulate::{simulate, simulate_traced, Outcome, RunResult, SimConfig};
pub use trace::{
    check_trace, parse_trace, read_trace, write_trace, CheckReport, Trace, TraceRecord,
};
