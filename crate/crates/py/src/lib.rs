//! Python bindings. Structured results cross the boundary as JSON and come
//! out as plain dicts and lists.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::json;

use linearize_core::generators::{EnumCaps, GeneratorClass, GeneratorSpec};
use linearize_core::harness::{self, Branching, ExploreConfig, Goal, SimConfig};
use linearize_core::model::{
    read_config_json, untm_connected, write_config_json, ConfigFile, IdUniverse,
};
use linearize_core::predicates::{self, Flags};
use linearize_core::semantics::{self, SelectStrategy, StepRecord};
use linearize_core::{Configuration as Config, PotentialReport, SchedulerPolicy};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    let py = obj.py();
    py.import("json")?.call_method1("dumps", (obj,))?.extract()
}

fn strategy(select: &str, seed: u64) -> PyResult<SelectStrategy> {
    Ok(select
        .parse::<SelectStrategy>()
        .map_err(err)?
        .with_seed(seed))
}

/// A configuration over an identifier universe.
#[pyclass(name = "Configuration", module = "linearize", from_py_object)]
#[derive(Clone)]
struct PyConfiguration {
    u: IdUniverse,
    c: Config,
}

#[pymethods]
impl PyConfiguration {
    /// Empty configuration over the ids 1..=n.
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        if n == 0 {
            return Err(err("n must be at least 1"));
        }
        Ok(Self {
            u: IdUniverse::range(n),
            c: Config::empty(n),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (u, c) = read_config_json(text).map_err(err)?;
        Ok(Self { u, c })
    }

    fn to_json(&self) -> String {
        write_config_json(&self.u, &self.c)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let v = serde_json::to_value(ConfigFile::from_config(&self.u, &self.c)).map_err(err)?;
        to_py(py, &v)
    }

    #[getter]
    fn n(&self) -> usize {
        self.c.n()
    }

    #[getter]
    fn ids(&self) -> Vec<u64> {
        self.u.ids().to_vec()
    }

    fn potentials<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &json!(PotentialReport::of(&self.c)))
    }

    fn flags<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &json!(Flags::of(&self.c)))
    }

    fn is_correct(&self) -> bool {
        predicates::is_correct(&self.c)
    }

    fn is_connected(&self) -> bool {
        untm_connected(&self.c)
    }

    /// Enabled steps as dicts with external ids.
    #[pyo3(signature = (select = "all-min", seed = 0))]
    fn enabled_steps<'py>(
        &self,
        py: Python<'py>,
        select: &str,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let steps: Vec<StepRecord> = semantics::enabled_steps(&self.c, strategy(select, seed)?)
            .iter()
            .map(|s| StepRecord::from_step(&self.u, s))
            .collect();
        to_py(py, &json!(steps))
    }

    /// New configuration after one step given as a dict.
    fn apply_step(&self, step: &Bound<'_, PyAny>) -> PyResult<Self> {
        let rec: StepRecord = serde_json::from_str(&from_py(step)?).map_err(err)?;
        let s = rec.to_step(&self.u).map_err(err)?;
        let c = semantics::apply_step(&self.c, &s).map_err(err)?;
        Ok(Self {
            u: self.u.clone(),
            c,
        })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.u == other.u && self.c == other.c
    }

    fn __repr__(&self) -> String {
        format!("Configuration({})", self.to_json())
    }
}

/// Builds one initial configuration of the named class over ids 1..=n.
#[pyfunction]
#[pyo3(signature = (class_name, n, seed = 0, extra = 0))]
fn generate(class_name: &str, n: usize, seed: u64, extra: usize) -> PyResult<PyConfiguration> {
    let spec = GeneratorSpec {
        class: class_name.parse::<GeneratorClass>().map_err(err)?,
        n,
        seed,
        extra,
        caps: EnumCaps {
            multiplicity: 1,
            total: 6,
        },
    };
    Ok(PyConfiguration {
        u: IdUniverse::range(n),
        c: spec.generate().map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (config, seed = 0, scheduler = "fair", select = "all-min", oracle = false, budget = 1_000_000, trace = None))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    config: &PyConfiguration,
    seed: u64,
    scheduler: &str,
    select: &str,
    oracle: bool,
    budget: u64,
    trace: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let policy = match scheduler {
        "fair" => SchedulerPolicy::fair(seed),
        "bounded" => SchedulerPolicy::bounded(seed, config.c.n()),
        other => return Err(err(format!("unknown scheduler {other:?}"))),
    };
    let mut cfg = SimConfig::new(policy);
    cfg.strategy = strategy(select, seed)?;
    cfg.oracle = oracle;
    cfg.budget = budget;
    let r = match trace {
        Some(path) => {
            let out = BufWriter::new(File::create(path).map_err(err)?);
            harness::simulate_traced(&config.u, &config.c, &cfg, BTreeMap::new(), out)
                .map_err(err)?
        }
        None => harness::simulate(&config.c, &cfg),
    };
    let v = json!({
        "outcome": r.outcome.name(),
        "steps": r.steps,
        "first_correct": r.first_correct,
        "kind_counts": r.kind_counts,
        "final_potentials": r.final_potentials,
        "violations": r.violations.iter().map(|v| v.property.name()).collect::<Vec<_>>(),
        "horizon": r.horizon,
        "final_config": ConfigFile::from_config(&config.u, &r.final_config),
    });
    to_py(py, &v)
}

#[pyfunction]
#[pyo3(signature = (config, depth = 6, msg_cap = 2, goal = "all-correct"))]
fn explore<'py>(
    py: Python<'py>,
    config: &PyConfiguration,
    depth: usize,
    msg_cap: u32,
    goal: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let goal: Goal = goal.parse().map_err(err)?;
    let mut cfg = ExploreConfig::new(goal, depth, msg_cap);
    cfg.branching = Branching::AllChoices;
    let r = harness::explore(&config.c, &cfg);
    to_py(py, &json!(r))
}

/// Replays a trace file; returns the check report.
#[pyfunction]
fn check_trace<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyAny>> {
    let t = harness::read_trace(std::path::Path::new(path)).map_err(err)?;
    let r = harness::check_trace(&t).map_err(err)?;
    to_py(py, &json!(r))
}

#[pymodule]
fn linearize(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfiguration>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(explore, m)?)?;
    m.add_function(wrap_pyfunction!(check_trace, m)?)?;
    Ok(())
}
