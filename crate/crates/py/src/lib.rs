// pyo3 0.22 macro expansion trips this lint on every PyResult signature.
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use eqgen_core as core;
use core::audit::{extract_features, leakage_report, FragmentIndex};
use core::corrupt::FalseGenConfig;
use core::random::rng_from_seed;
use core::record::{generate_dataset, replay, DatasetConfig, DatasetRecord};
use core::truegen::TrueGenConfig;
use core::{EvalResult, OracleConfig, ToleranceMode, Var};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An expression tree over x, y, z.
#[pyclass(module = "eqgen", frozen)]
#[derive(Clone)]
struct Expr {
    inner: core::Expr,
}

#[pymethods]
impl Expr {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Expr> {
        core::parse_expr(text).map(|inner| Expr { inner }).map_err(value_err)
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn free_variables(&self) -> Vec<&'static str> {
        self.inner.free_variables().into_iter().map(Var::name).collect()
    }

    /// Value at the given point, or None outside the domain or on overflow.
    #[pyo3(signature = (x=None, y=None, z=None))]
    fn evaluate(&self, x: Option<f64>, y: Option<f64>, z: Option<f64>) -> PyResult<Option<f64>> {
        let mut env = core::Env::new();
        for (var, v) in [(Var::X, x), (Var::Y, y), (Var::Z, z)] {
            if let Some(v) = v {
                env.set(var, v);
            }
        }
        match core::evaluate(&self.inner, &env).map_err(value_err)? {
            EvalResult::Finite(v) => Ok(Some(v)),
            _ => Ok(None),
        }
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr('{}')", self.inner)
    }

    fn __eq__(&self, other: &Expr) -> bool {
        self.inner == other.inner
    }
}

/// Oracle outcome with its evidence summary.
#[pyclass(module = "eqgen", frozen, get_all)]
struct Verdict {
    outcome: String,
    valid_samples: usize,
    max_deviation: f64,
    domain_errors: usize,
    overflows: usize,
}

#[pymethods]
impl Verdict {
    fn __repr__(&self) -> String {
        format!(
            "Verdict(outcome='{}', valid_samples={}, max_deviation={:e})",
            self.outcome, self.valid_samples, self.max_deviation
        )
    }
}

#[pyclass(module = "eqgen", frozen)]
#[derive(Clone)]
struct Equation {
    inner: core::Equation,
}

#[pymethods]
impl Equation {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Equation> {
        core::parse_equation(text).map(|inner| Equation { inner }).map_err(value_err)
    }

    #[getter]
    fn lhs(&self) -> Expr {
        Expr {
            inner: self.inner.lhs.clone(),
        }
    }

    #[getter]
    fn rhs(&self) -> Expr {
        Expr {
            inner: self.inner.rhs.clone(),
        }
    }

    /// Random-evaluation check. `absolute` switches off the relative floor.
    #[pyo3(signature = (epsilon=1e-6, trials=8, seed=0, absolute=false))]
    fn verify(&self, epsilon: f64, trials: usize, seed: u64, absolute: bool) -> PyResult<Verdict> {
        let cfg = OracleConfig {
            epsilon,
            trials,
            tolerance_mode: if absolute {
                ToleranceMode::Absolute
            } else {
                ToleranceMode::RelativeWithFloor
            },
            ..OracleConfig::default()
        };
        cfg.validate().map_err(value_err)?;
        let v = core::verify(&self.inner, &cfg, &mut rng_from_seed(seed));
        Ok(Verdict {
            outcome: v.outcome.to_string(),
            valid_samples: v.valid_samples(),
            max_deviation: v.max_deviation(),
            domain_errors: v.domain_errors,
            overflows: v.overflows,
        })
    }

    /// Structural features used by the leakage audit.
    fn features<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let idx = FragmentIndex::new(&core::curated_axiom_set());
        let f = extract_features(&self.inner, &idx);
        let d = PyDict::new_bound(py);
        d.set_item("composed_transcendental", f.composed_transcendental)?;
        d.set_item("noninteger_power_of_transcendental", f.noninteger_power_of_transcendental)?;
        d.set_item("embedded_identity_fragment", f.embedded_identity_fragment)?;
        d.set_item("node_count", f.node_count)?;
        d.set_item("depth", f.depth)?;
        d.set_item("constant_count", f.constant_count)?;
        Ok(d)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Equation('{}')", self.inner)
    }

    fn __eq__(&self, other: &Equation) -> bool {
        self.inner == other.inner
    }
}

/// A validated rule set.
#[pyclass(module = "eqgen", frozen)]
struct AxiomSet {
    inner: core::AxiomSet,
    report: Vec<(String, String)>,
}

#[pymethods]
impl AxiomSet {
    /// The built-in rules.
    #[staticmethod]
    fn curated() -> AxiomSet {
        let report = core::axioms::curated_report();
        AxiomSet {
            inner: core::curated_axiom_set(),
            report: report.entries.iter().map(|e| (e.id.clone(), e.status.to_string())).collect(),
        }
    }

    /// Parses and validates an axiom file's text.
    #[staticmethod]
    #[pyo3(signature = (text, name="axioms"))]
    fn load(text: &str, name: &str) -> PyResult<AxiomSet> {
        let (inner, report) = core::load_axioms(name, text).map_err(value_err)?;
        Ok(AxiomSet {
            inner,
            report: report.entries.iter().map(|e| (e.id.clone(), e.status.to_string())).collect(),
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.rules().iter().map(|r| r.id.clone()).collect()
    }

    /// `(lhs, rhs)` of an admitted rule.
    fn rule(&self, id: &str) -> PyResult<(String, String)> {
        let r = self.inner.get(id).ok_or_else(|| PyKeyError::new_err(id.to_string()))?;
        Ok((r.lhs.to_string(), r.rhs.to_string()))
    }

    /// `(id, status)` for every rule read, admitted or not.
    fn report(&self) -> Vec<(String, String)> {
        self.report.clone()
    }
}

/// Generates a labeled dataset as JSONL lines, true records first.
#[pyfunction]
#[pyo3(signature = (true_count, false_count, seed=0, depth_walk=3, valid_steps=3, filter_artifacts=true))]
fn generate(
    true_count: usize,
    false_count: usize,
    seed: u64,
    depth_walk: usize,
    valid_steps: usize,
    filter_artifacts: bool,
) -> PyResult<Vec<String>> {
    let truegen = TrueGenConfig {
        depth_walk,
        seed,
        ..TrueGenConfig::default()
    };
    let cfg = DatasetConfig {
        true_count,
        false_count,
        seed,
        falsegen: FalseGenConfig {
            valid_steps,
            filter_artifacts,
            base: truegen.clone(),
            ..FalseGenConfig::default()
        },
        truegen,
    };
    let (records, _) = generate_dataset(&core::curated_axiom_set(), &cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(records.iter().map(DatasetRecord::to_json_line).collect())
}

/// Rebuilds a record's equation from its provenance.
#[pyfunction]
fn replay_record(line: &str) -> PyResult<String> {
    let rec: DatasetRecord = serde_json::from_str(line).map_err(value_err)?;
    let p = rec.provenance.to_provenance().map_err(value_err)?;
    let eq = replay(&p, &core::curated_axiom_set()).map_err(value_err)?;
    Ok(eq.to_string())
}

/// Held-out accuracy of the trivial feature classifier on JSONL records.
#[pyfunction]
#[pyo3(signature = (lines, bound=0.6))]
fn leakage_accuracy(lines: Vec<String>, bound: f64) -> PyResult<(f64, bool)> {
    let idx = FragmentIndex::new(&core::curated_axiom_set());
    let samples = lines
        .iter()
        .map(|l| {
            let rec: DatasetRecord = serde_json::from_str(l).map_err(value_err)?;
            let eq = rec.parsed_equation().map_err(value_err)?;
            Ok((extract_features(&eq, &idx), rec.label))
        })
        .collect::<PyResult<Vec<_>>>()?;
    let r = leakage_report(&samples, bound).map_err(value_err)?;
    Ok((r.accuracy, r.leaky))
}

#[pymodule]
fn eqgen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Expr>()?;
    m.add_class::<Equation>()?;
    m.add_class::<Verdict>()?;
    m.add_class::<AxiomSet>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(replay_record, m)?)?;
    m.add_function(wrap_pyfunction!(leakage_accuracy, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_works_from_python() {
        pyo3::append_to_inittab!(eqgen);
        pyo3::prepare_freethreaded_python();
        Python::with_gil(|py| {
            let code = r#"
import eqgen
assert eqgen.Equation.parse("(= (+ 2 2) 3)").verify().outcome == "false"
lines = eqgen.generate(2, 2, seed=1)
assert all(eqgen.replay_record(l) for l in lines)
"#;
            py.run_bound(code, None, None).unwrap();
        });
    }
}
