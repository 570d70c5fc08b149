//! Line-delimited JSON traces: one header line with the initial
//! configuration, then one record per executed step.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConfigFile, Configuration, IdUniverse};
use crate::potentials::PotentialReport;
use crate::predicates::{monitor_observed, Flags, Observation};
use crate::semantics::{apply_step_in_place, StepRecord};

pub const TRACE_FORMAT: &str = "linearize-trace/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub init: ConfigFile,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl TraceHeader {
    pub fn new(u: &IdUniverse, init: &Configuration) -> Self {
        Self {
            format: TRACE_FORMAT.to_string(),
            init: ConfigFile::from_config(u, init),
            meta: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLog {
    pub oracle: String,
    pub grantees: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: u64,
    pub step: StepRecord,
    /// Potentials of the configuration reached by this step.
    pub potentials: PotentialReport,
    pub flags: Flags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleLog>,
    #[serde(default)]
    pub monitor_violations: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub header: Option<TraceHeader>,
    pub records: Vec<TraceRecord>,
}

/// Writes one JSON object per line and flushes after each.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn header(&mut self, h: &TraceHeader) -> Result<()> {
        self.line(h)
    }

    pub fn record(&mut self, r: &TraceRecord) -> Result<()> {
        self.line(r)
    }

    fn line<T: Serialize>(&mut self, v: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, v)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn write_trace<W: Write>(out: W, trace: &Trace) -> Result<()> {
    let mut w = TraceWriter::new(out);
    if let Some(h) = &trace.header {
        w.header(h)?;
    }
    for r in &trace.records {
        w.record(r)?;
    }
    Ok(())
}

pub fn parse_trace<R: BufRead>(input: R) -> Result<Trace> {
    let mut t = Trace::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |e: serde_json::Error| Error::TraceParse {
            line: lineno,
            message: e.to_string(),
        };
        let v: serde_json::Value = serde_json::from_str(&line).map_err(bad)?;
        if t.header.is_none() && t.records.is_empty() && v.get("init").is_some() {
            t.header = Some(serde_json::from_value(v).map_err(bad)?);
        } else {
            t.records.push(serde_json::from_value(v).map_err(bad)?);
        }
    }
    Ok(t)
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let f = std::fs::File::open(path)?;
    parse_trace(std::io::BufReader::new(f))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub steps: u64,
    /// Recorded data that disagrees with the replay.
    pub mismatches: Vec<String>,
    /// Monitor violations found during replay.
    pub violations: Vec<String>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.violations.is_empty()
    }
}

/// Replays the recorded steps from the header's configuration, recomputing
/// potentials, flags and monitors, and compares them with the records.
pub fn check_trace(trace: &Trace) -> Result<CheckReport> {
    let header = trace.header.as_ref().ok_or(Error::TraceParse {
        line: 1,
        message: "trace has no header line".into(),
    })?;
    let (u, mut c) = header.init.into_config()?;
    let mut rep = CheckReport::default();
    let mut obs = Observation::of(&c);
    let mut seen_correct = obs.flags.correct;
    let mut lenmax = obs.potentials.lenmax;
    for (i, rec) in trace.records.iter().enumerate() {
        if rec.index != i as u64 {
            rep.mismatches
                .push(format!("record {i}: index {} out of sequence", rec.index));
        }
        let s = rec.step.to_step(&u)?;
        let before = c.clone();
        if let Err(e) = apply_step_in_place(&mut c, &s) {
            rep.mismatches.push(format!("record {i}: {e}"));
            break;
        }
        let next = Observation::of(&c);
        if next.potentials != rec.potentials {
            rep.mismatches.push(format!(
                "record {i}: potentials {:?} recorded, {:?} replayed",
                rec.potentials, next.potentials
            ));
        }
        if next.flags != rec.flags {
            rep.mismatches.push(format!("record {i}: flags differ"));
        }
        let m = monitor_observed(&before, &obs, &s, &c, &next, i as u64);
        rep.violations.extend(
            m.violations
                .iter()
                .map(|v| format!("record {i}: {}: {}", v.property, v.detail)),
        );
        if seen_correct && !next.flags.correct {
            rep.violations
                .push(format!("record {i}: correctness lost after convergence"));
        }
        if next.potentials.lenmax > lenmax {
            rep.violations.push(format!("record {i}: lenmax increased"));
        }
        seen_correct |= next.flags.correct;
        lenmax = next.potentials.lenmax;
        obs = next;
        rep.steps += 1;
    }
    Ok(rep)
}
