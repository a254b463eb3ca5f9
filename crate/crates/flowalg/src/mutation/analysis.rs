//! Running a test suite against every mutant and scoring the result.
//!
//! A mutant is killed when some test's actual output differs from the
//! expected dataset (under the configured float tolerance), and
//! error-killed when it raises a runtime error. Survivors are reported
//! for human triage; behavioral equivalence is not decided here.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::dataflow::{execute, ExecOptions, NodeId, PlaceRole, ProgramGraph};
use crate::dataset::decode_value;
use crate::error::{Error, Result};
use crate::value::{values_equal_tol, Bag, Value};

use super::{Mutant, OperatorFamily};

/// One test: input bindings and the expected outputs.
#[derive(Debug, Clone)]
pub struct TestCase {
    pub name: String,
    pub inputs: BTreeMap<NodeId, Value>,
    pub expected: BTreeMap<NodeId, Value>,
}

/// Options of a mutation analysis run.
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Absolute tolerance for float comparison when deciding kills;
    /// exact by default.
    pub float_tol: f64,
    /// Worker threads running mutants concurrently.
    pub workers: usize,
    pub loop_overrides: BTreeMap<NodeId, i64>,
}

impl Default for AnalysisOptions {
    fn default() -> AnalysisOptions {
        AnalysisOptions {
            float_tol: 0.0,
            workers: 4,
            loop_overrides: BTreeMap::new(),
        }
    }
}

/// Fate of one mutant after the suite ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutantStatus {
    Killed,
    ErrorKilled,
    Survived,
}

/// Per-mutant analysis result.
#[derive(Debug, Clone, Serialize)]
pub struct MutantOutcome {
    pub index: usize,
    pub family: OperatorFamily,
    pub operator: String,
    pub extended: bool,
    pub sites: Vec<String>,
    pub description: String,
    pub status: MutantStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub killed_by: Option<String>,
}

/// The full report: totals, score and per-mutant outcomes.
#[derive(Debug, Clone, Serialize)]
pub struct MutationReport {
    pub program: String,
    pub generated: usize,
    pub killed: usize,
    pub error_killed: usize,
    pub survived: usize,
    pub score: f64,
    pub mutants: Vec<MutantOutcome>,
}

impl MutationReport {
    /// Fixed-width table plus the score, one line per mutant.
    pub fn render_table(&self, color: bool) -> String {
        let paint = |status: MutantStatus, text: &str| -> String {
            if !color {
                return text.to_string();
            }
            let code = match status {
                MutantStatus::Killed => "32",
                MutantStatus::ErrorKilled => "36",
                MutantStatus::Survived => "31",
            };
            format!("\x1b[{code}m{text}\x1b[0m")
        };
        let mut out = String::new();
        out.push_str(&format!("mutation analysis of `{}`\n", self.program));
        for m in &self.mutants {
            let status = match m.status {
                MutantStatus::Killed => "killed",
                MutantStatus::ErrorKilled => "error-killed",
                MutantStatus::Survived => "SURVIVED",
            };
            let killer = m
                .killed_by
                .as_deref()
                .map(|t| format!(" by {t}"))
                .unwrap_or_default();
            let extended = if m.extended { " [extended operator]" } else { "" };
            out.push_str(&format!(
                "  #{:<3} {:<13}{} {}{}{}\n",
                m.index,
                paint(m.status, status),
                killer,
                m.description,
                extended,
                "",
            ));
        }
        out.push_str(&format!(
            "score: {}/{} killed ({} by output, {} by error), {} survived — {:.3}\n",
            self.killed + self.error_killed,
            self.generated,
            self.killed,
            self.error_killed,
            self.survived,
            self.score
        ));
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }
}

/// Reads a test-suite file: a JSON list of cases whose `inputs` and
/// `expected` entries are inline arrays or paths to dataset files,
/// resolved relative to the suite file.
pub fn load_test_suite(g: &ProgramGraph, path: impl AsRef<Path>) -> Result<Vec<TestCase>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Decode(format!("bad test suite: {e}")))?;
    let cases = json
        .as_array()
        .ok_or_else(|| Error::Decode("a test suite is a JSON list of cases".into()))?;

    let mut out = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let name = case
            .get("name")
            .and_then(|n| n.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("test{}", i + 1));
        let inputs = bind_section(g, base, case.get("inputs"), "inputs", &name)?;
        let expected = bind_section(g, base, case.get("expected"), "expected", &name)?;
        for place in expected.keys() {
            match g.places.get(place).map(|p| p.role) {
                Some(PlaceRole::Output) => {}
                _ => {
                    return Err(Error::Decode(format!(
                        "test `{name}` expects `{place}`, which is not an output dataset"
                    )))
                }
            }
        }
        out.push(TestCase {
            name,
            inputs,
            expected,
        });
    }
    Ok(out)
}

fn bind_section(
    g: &ProgramGraph,
    base: &Path,
    section: Option<&serde_json::Value>,
    what: &str,
    test: &str,
) -> Result<BTreeMap<NodeId, Value>> {
    let map = section
        .and_then(|s| s.as_object())
        .ok_or_else(|| Error::Decode(format!("test `{test}` has no `{what}` object")))?;
    let mut out = BTreeMap::new();
    for (place, spec) in map {
        let id = NodeId::from(place.as_str());
        let ty = g
            .places
            .get(&id)
            .map(|p| p.ty.clone())
            .ok_or_else(|| Error::Decode(format!("test `{test}` names unknown dataset `{place}`")))?;
        let value = match spec {
            serde_json::Value::String(file) => {
                let text = std::fs::read_to_string(base.join(file))
                    .map_err(|e| Error::Decode(format!("{file}: {e}")))?;
                crate::dataset::parse_dataset(&text, &ty)?
            }
            serde_json::Value::Array(items) => {
                let vals = items.iter().map(decode_value).collect::<Result<Vec<_>>>()?;
                for v in &vals {
                    let elem = ty.collection_elem().ok_or_else(|| {
                        Error::TypeMismatch(format!("`{place}` is not a collection"))
                    })?;
                    if !v.conforms(elem) {
                        return Err(Error::TypeMismatch(format!(
                            "test `{test}`: element {v} does not conform to {elem}"
                        )));
                    }
                }
                match ty {
                    crate::types::ElemType::List(_) => Value::List(vals),
                    _ => Value::Bag(Bag::from_values(vals)),
                }
            }
            _ => {
                return Err(Error::Decode(format!(
                    "test `{test}`: `{place}` must be an inline array or a file path"
                )))
            }
        };
        out.insert(id, value);
    }
    Ok(out)
}

/// Compares an execution against a test's expectations.
fn passes(outcome: &BTreeMap<NodeId, Value>, t: &TestCase, tol: f64) -> bool {
    t.expected.iter().all(|(place, want)| {
        outcome
            .get(place)
            .is_some_and(|got| values_equal_tol(got, want, tol))
    })
}

/// Runs the suite against every mutant and assembles the report.
///
/// The original program must pass its own suite first; mutants are
/// then executed concurrently by a bounded worker pool, each until the
/// first killing test.
pub fn run_analysis(
    g: &ProgramGraph,
    mutants: &[Mutant],
    tests: &[TestCase],
    options: &AnalysisOptions,
) -> Result<MutationReport> {
    let exec_options = ExecOptions {
        seed: None,
        loop_overrides: options.loop_overrides.clone(),
    };

    for t in tests {
        let outcome = execute(g, &t.inputs, &exec_options)
            .map_err(|e| Error::BaselineFailure(format!("test `{}`: {e}", t.name)))?;
        if !passes(&outcome.outputs, t, options.float_tol) {
            return Err(Error::BaselineFailure(format!(
                "the original program fails its own test `{}`",
                t.name
            )));
        }
    }

    let judge = |mutant: &Mutant| -> (MutantStatus, Option<String>) {
        for t in tests {
            match execute(&mutant.graph, &t.inputs, &exec_options) {
                Err(_) => return (MutantStatus::ErrorKilled, Some(t.name.clone())),
                Ok(outcome) => {
                    if !passes(&outcome.outputs, t, options.float_tol) {
                        return (MutantStatus::Killed, Some(t.name.clone()));
                    }
                }
            }
        }
        (MutantStatus::Survived, None)
    };

    type Verdict = (MutantStatus, Option<String>);
    let results: Mutex<Vec<Option<Verdict>>> = Mutex::new(vec![None; mutants.len()]);
    let next = AtomicUsize::new(0);
    let workers = options.workers.clamp(1, mutants.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= mutants.len() {
                    break;
                }
                let verdict = judge(&mutants[i]);
                results.lock().unwrap()[i] = Some(verdict);
            });
        }
    });

    let results = results.into_inner().unwrap();
    let mut outcomes = Vec::with_capacity(mutants.len());
    let (mut killed, mut error_killed, mut survived) = (0, 0, 0);
    for (i, (mutant, result)) in mutants.iter().zip(results).enumerate() {
        let (status, killed_by) = result.expect("every mutant judged");
        match status {
            MutantStatus::Killed => killed += 1,
            MutantStatus::ErrorKilled => error_killed += 1,
            MutantStatus::Survived => survived += 1,
        }
        outcomes.push(MutantOutcome {
            index: i + 1,
            family: mutant.family,
            operator: mutant.family.name().to_string(),
            extended: mutant.family.is_extended(),
            sites: mutant.sites.iter().map(NodeId::to_string).collect(),
            description: mutant.description.clone(),
            status,
            killed_by,
        });
    }
    let generated = mutants.len();
    let score = if generated == 0 {
        0.0
    } else {
        (killed + error_killed) as f64 / generated as f64
    };
    Ok(MutationReport {
        program: g.name.clone(),
        generated,
        killed,
        error_killed,
        survived,
        score,
        mutants: outcomes,
    })
}
