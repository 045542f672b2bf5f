//! Python bindings. Structured results cross over as plain dicts and lists
//! decoded from the same JSON the command-line tool writes.

use lutscope::analysis::{analyze, converge, ConvergeOptions};
use lutscope::benchgen::{generate, Archetype, BenchSpec};
use lutscope::logic::TruthTable;
use lutscope::netlist::{emit_netlist, parse_netlist, Design, PortRoles, SignalId};
use lutscope::pipeline::{run_pipeline, PipelineOptions};
use lutscope::properties::{emit_blif, emit_sva, extract_all, extract_coverage};
use lutscope::reconfig::{apply_plan, equivalence_check, reconfigure_init, ReconfigPlan};
use lutscope::report::render_report;
use lutscope::sim::{export_vcd, import_vcd, random_stimulus, simulate};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(err)
}

fn table(k: u8, bits: u64) -> PyResult<TruthTable> {
    TruthTable::new(k, bits).map_err(err)
}

/// A parsed LUT netlist.
#[pyclass(module = "lutscope_py", frozen)]
struct Netlist {
    inner: lutscope::netlist::Netlist,
    design: Design,
}

impl Netlist {
    fn wrap(inner: lutscope::netlist::Netlist) -> PyResult<Netlist> {
        let design = Design::new(&inner).map_err(err)?;
        Ok(Netlist { inner, design })
    }
}

#[pymethods]
impl Netlist {
    #[staticmethod]
    #[pyo3(signature = (text, top=None))]
    fn parse(text: &str, top: Option<&str>) -> PyResult<Netlist> {
        Netlist::wrap(parse_netlist(text, top).map_err(err)?)
    }

    #[getter]
    fn name(&self) -> String {
        self.design.name.clone()
    }

    /// Names of all LUT cells, flattened.
    fn luts(&self) -> Vec<String> {
        self.design.luts.iter().map(|&c| self.design.cells[c].name.clone()).collect()
    }

    fn emit(&self) -> String {
        emit_netlist(&self.inner)
    }

    fn isomorphic(&self, other: &Netlist) -> bool {
        self.inner.isomorphic(&other.inner)
    }

    /// Random simulation from reset, as VCD text.
    #[pyo3(signature = (cycles, seed=0))]
    fn simulate(&self, cycles: usize, seed: u64) -> PyResult<String> {
        let stim = random_stimulus(&self.design, seed, cycles);
        Ok(export_vcd(&simulate(&self.design, &stim, cycles).map_err(err)?))
    }

    /// Switching and coverage analysis of a VCD trace.
    fn analyze<'py>(&self, py: Python<'py>, vcd: &str) -> PyResult<Bound<'py, PyAny>> {
        let trace = import_vcd(vcd, &self.design).map_err(err)?;
        to_py(py, &analyze(&self.design, &trace).map_err(err)?)
    }

    #[pyo3(signature = (seed=0, schedule=None, stable_rounds=3))]
    fn converge<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
        schedule: Option<Vec<usize>>,
        stable_rounds: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut opts = ConvergeOptions::new(seed);
        if let Some(s) = schedule {
            opts.schedule = s;
        }
        opts.stable_rounds = stable_rounds;
        to_py(py, &converge(&self.design, &opts).map_err(err)?)
    }

    /// Properties implied by an analysis result (as returned by `analyze`).
    fn properties<'py>(&self, py: Python<'py>, analysis: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let result = from_py(py, analysis)?;
        let props = extract_all(&self.design, &result);
        let sva: Vec<String> = props.iter().map(emit_sva).collect();
        to_py(py, &serde_json::json!({ "properties": props, "sva": sva }))
    }

    /// Applies a plan (as found in a pipeline report) and returns the patched netlist.
    fn patch(&self, py: Python<'_>, plan: &Bound<'_, PyAny>) -> PyResult<Netlist> {
        let plan: ReconfigPlan = from_py(py, plan)?;
        Netlist::wrap(apply_plan(&self.inner, &plan).map_err(err)?)
    }

    /// Equivalence against another netlist; with `plan`, only on covered addresses.
    #[pyo3(signature = (other, plan=None))]
    fn equivalent<'py>(
        &self,
        py: Python<'py>,
        other: &Netlist,
        plan: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let plan: Option<ReconfigPlan> = plan.map(|p| from_py(py, p)).transpose()?;
        to_py(py, &equivalence_check(&self.design, &other.design, plan.as_ref(), None).map_err(err)?)
    }

    /// The whole flow. Returns `(report, text, patched)`.
    #[pyo3(signature = (seed=0, all_low_coverage=false))]
    fn pipeline<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
        all_low_coverage: bool,
    ) -> PyResult<(Bound<'py, PyAny>, String, Option<Netlist>)> {
        let mut opts = PipelineOptions::new(seed);
        opts.all_low_coverage = all_low_coverage;
        let out = run_pipeline(&self.inner, &PortRoles::default(), &opts).map_err(err)?;
        let text = render_report(&out.report);
        let patched = out.patched.map(Netlist::wrap).transpose()?;
        Ok((to_py(py, &out.report)?, text, patched))
    }

    fn __repr__(&self) -> String {
        format!("Netlist({}, {} cells)", self.design.name, self.design.cells.len())
    }
}

/// `init XNOR coverage` over a k-input table.
#[pyfunction]
fn reconfigure(k: u8, init: u64, coverage: u64) -> PyResult<u64> {
    Ok(reconfigure_init(&table(k, init)?, &table(k, coverage)?).map_err(err)?.bits())
}

/// SVA text for the uncovered addresses of one LUT, lines named line 0 first.
#[pyfunction]
#[pyo3(signature = (k, coverage, lines=None))]
fn coverage_sva(k: u8, coverage: u64, lines: Option<Vec<String>>) -> PyResult<String> {
    let mut p = extract_coverage("lut", &table(k, coverage)?).map_err(err)?;
    if let Some(l) = lines {
        p = p.with_lines(l.into_iter().map(SignalId::scalar).collect()).map_err(err)?;
    }
    Ok(emit_sva(&p))
}

#[pyfunction]
fn coverage_blif(cell: &str, k: u8, coverage: u64) -> PyResult<String> {
    emit_blif(cell, &table(k, coverage)?).map_err(err)
}

/// A benchmark netlist and its ground truth.
#[pyfunction]
#[pyo3(name = "bench", signature = (archetype, width=16, param=0, seed=0))]
fn make_bench<'py>(
    py: Python<'py>,
    archetype: &str,
    width: usize,
    param: u64,
    seed: u64,
) -> PyResult<(Netlist, Bound<'py, PyAny>)> {
    let archetype: Archetype = serde_json::from_value(serde_json::Value::String(archetype.into())).map_err(err)?;
    let b = generate(&BenchSpec {
        archetype,
        width,
        param,
        seed,
    })
    .map_err(err)?;
    Ok((Netlist::wrap(b.netlist)?, to_py(py, &b.truth)?))
}

#[pymodule]
fn lutscope_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Netlist>()?;
    m.add_function(wrap_pyfunction!(reconfigure, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_sva, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_blif, m)?)?;
    m.add_function(wrap_pyfunction!(make_bench, m)?)?;
    Ok(())
}
