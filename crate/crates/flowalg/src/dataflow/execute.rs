//! Deterministic execution of a program graph.
//!
//! The scheduler fires ready transitions in id order (or, with a seed,
//! in a shuffled order — the nets are conflict free, so every maximal
//! firing sequence reaches the same outputs and final marking). An
//! iterative subnet fires as one unit: its body is evaluated through
//! the algebra's `repeat`, so loop semantics and unfolding semantics
//! can be compared against each other.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::value::{Bag, Value};

use super::validate::{body_entry, body_exit};
use super::{
    typecheck_program, validate, LoopSpec, Marking, NodeId, PlaceRole, ProgramGraph,
    TransitionNode,
};

/// Knobs for one execution.
#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    /// When set, the scheduler picks uniformly among enabled firings
    /// instead of taking the smallest id.
    pub seed: Option<u64>,
    /// Per-loop replacement iteration counts.
    pub loop_overrides: BTreeMap<NodeId, i64>,
}

/// One firing in the trace. Body firings inside a loop carry the loop
/// id and the 1-based iteration index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub transition: NodeId,
    pub loop_id: Option<NodeId>,
    pub iteration: Option<u32>,
}

impl std::fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.loop_id, self.iteration) {
            (Some(l), Some(i)) => write!(f, "fire {} [{} iteration {}]", self.transition, l, i),
            _ => write!(f, "fire {}", self.transition),
        }
    }
}

/// Result of a complete run.
#[derive(Debug, Clone)]
pub struct ExecOutcome {
    /// Values of the output places.
    pub outputs: BTreeMap<NodeId, Value>,
    pub final_marking: Marking,
    pub trace: Vec<TraceEvent>,
    /// Non-fatal findings, e.g. a reduce function that failed its
    /// commutativity spot check.
    pub warnings: Vec<String>,
}

enum Unit<'g> {
    Transition(&'g TransitionNode),
    Loop(&'g LoopSpec),
}

/// Runs the program on the given input bindings.
pub fn execute(
    g: &ProgramGraph,
    inputs: &BTreeMap<NodeId, Value>,
    options: &ExecOptions,
) -> Result<ExecOutcome> {
    let diags = validate(g);
    if let Some(first) = diags.first() {
        return Err(Error::InvalidProgram(format!(
            "{first} ({} finding(s))",
            diags.len()
        )));
    }
    if let Err(diags) = typecheck_program(g) {
        let first = &diags[0];
        return Err(Error::InvalidProgram(format!(
            "{first} ({} finding(s))",
            diags.len()
        )));
    }

    // bind and check inputs
    let mut place_values: BTreeMap<NodeId, Value> = BTreeMap::new();
    for place in g.places.values() {
        match (place.role, inputs.get(&place.id)) {
            (PlaceRole::Input, Some(v)) => {
                if !v.conforms(&place.ty) {
                    return Err(Error::TypeMismatch(format!(
                        "input `{}` does not conform to {}",
                        place.id, place.ty
                    )));
                }
                place_values.insert(place.id.clone(), v.clone());
            }
            (PlaceRole::Input, None) => {
                return Err(Error::InvalidProgram(format!(
                    "missing binding for input dataset `{}`",
                    place.id
                )));
            }
            (_, Some(_)) => {
                return Err(Error::InvalidProgram(format!(
                    "`{}` is not an input dataset",
                    place.id
                )));
            }
            _ => {}
        }
    }

    // loop membership: body and control transitions fire inside their
    // loop's unit, everything else is a unit of its own
    let mut covered: BTreeMap<&NodeId, ()> = BTreeMap::new();
    for spec in &g.loops {
        for t in &spec.body_transitions {
            covered.insert(t, ());
        }
        for t in g.control_transitions(&spec.id) {
            covered.insert(&t.id, ());
        }
    }
    let mut units: BTreeMap<&NodeId, Unit> = BTreeMap::new();
    for t in g.transitions.values() {
        if !covered.contains_key(&t.id) {
            units.insert(&t.id, Unit::Transition(t));
        }
    }
    for spec in &g.loops {
        units.insert(&spec.id, Unit::Loop(spec));
    }

    let mut marking = g.initial_marking();
    let mut trace: Vec<TraceEvent> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut fired: BTreeMap<&NodeId, ()> = BTreeMap::new();
    let mut rng = options.seed.map(SplitMix64::new);

    loop {
        let ready: Vec<&NodeId> = units
            .iter()
            .filter(|(id, unit)| {
                !fired.contains_key(*id) && unit_enabled(g, unit, &marking, &place_values)
            })
            .map(|(id, _)| *id)
            .collect();
        if ready.is_empty() {
            break;
        }
        let pick = match &mut rng {
            Some(rng) => ready[rng.next_index(ready.len())],
            None => ready[0],
        };
        fired.insert(pick, ());
        match &units[pick] {
            Unit::Transition(t) => fire_unit_transition(
                g,
                t,
                &mut marking,
                &mut place_values,
                &mut trace,
                &mut warnings,
            )?,
            Unit::Loop(spec) => fire_loop(
                g,
                spec,
                options,
                &mut marking,
                &mut place_values,
                &mut trace,
                &mut warnings,
            )?,
        }
    }

    // quiescence: every unit fired, tokens only on terminal outputs
    for id in units.keys() {
        if !fired.contains_key(id) {
            return Err(Error::NonQuiescent(format!(
                "`{id}` never became enabled"
            )));
        }
    }
    let mut outputs = BTreeMap::new();
    for place in g.places.values() {
        let tokens = marking.tokens(&place.id);
        match place.role {
            PlaceRole::Output => {
                let v = place_values.get(&place.id).ok_or_else(|| {
                    Error::NonQuiescent(format!("output `{}` was never produced", place.id))
                })?;
                outputs.insert(place.id.clone(), v.clone());
            }
            _ => {
                if tokens != 0 {
                    return Err(Error::NonQuiescent(format!(
                        "{tokens} token(s) stuck on `{}`",
                        place.id
                    )));
                }
            }
        }
    }

    Ok(ExecOutcome {
        outputs,
        final_marking: marking,
        trace,
        warnings,
    })
}

fn unit_enabled(
    g: &ProgramGraph,
    unit: &Unit,
    m: &Marking,
    values: &BTreeMap<NodeId, Value>,
) -> bool {
    match unit {
        Unit::Transition(t) => {
            super::marking::is_enabled(g, m, &t.id) && t.inputs.iter().all(|p| values.contains_key(p))
        }
        Unit::Loop(spec) => {
            if m.tokens(&spec.entry) < 1 || !values.contains_key(&spec.entry) {
                return false;
            }
            external_reads(g, spec)
                .into_iter()
                .all(|(p, n)| m.tokens(&p) >= n && values.contains_key(&p))
        }
    }
}

/// Loop-external places read by body transitions, with use counts.
fn external_reads(g: &ProgramGraph, spec: &LoopSpec) -> Vec<(NodeId, u32)> {
    let mut reads: Vec<(NodeId, u32)> = Vec::new();
    for t in &spec.body_transitions {
        let Some(node) = g.transitions.get(t) else {
            continue;
        };
        for p in &node.inputs {
            if spec.body_places.contains(p) {
                continue;
            }
            match reads.iter_mut().find(|(q, _)| q == p) {
                Some((_, n)) => *n += 1,
                None => reads.push((p.clone(), 1)),
            }
        }
    }
    reads
}

fn fire_unit_transition(
    g: &ProgramGraph,
    t: &TransitionNode,
    marking: &mut Marking,
    values: &mut BTreeMap<NodeId, Value>,
    trace: &mut Vec<TraceEvent>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let out_value = eval_transition(t, values, None)?;
    for w in collect_reduce_warnings(t, values) {
        warnings.push(format!("{}: {w}", t.id));
    }
    *marking = super::marking::fire_transition(g, marking, &t.id)?;
    values.insert(t.output.clone(), out_value);
    trace.push(TraceEvent {
        transition: t.id.clone(),
        loop_id: None,
        iteration: None,
    });
    Ok(())
}

/// Evaluates a transition's operation on the values bound to its input
/// places, honoring its guard if present.
fn eval_transition(
    t: &TransitionNode,
    values: &BTreeMap<NodeId, Value>,
    iteration: Option<(&NodeId, u32)>,
) -> Result<Value> {
    let args: Vec<&Value> = t
        .inputs
        .iter()
        .map(|p| {
            values.get(p).ok_or_else(|| {
                Error::NonQuiescent(format!("`{p}` has no value when `{}` fires", t.id))
            })
        })
        .collect::<Result<_>>()?;
    if let Some(guard) = &t.guard {
        let source = values.get(&guard.source).ok_or_else(|| {
            Error::NonQuiescent(format!("guard dataset `{}` has no value", guard.source))
        })?;
        let pass = match guard.predicate.eval(std::slice::from_ref(source))? {
            Value::Bool(b) => b == guard.expect,
            other => {
                return Err(Error::TypeMismatch(format!(
                    "guard predicate returned {other}"
                )))
            }
        };
        if !pass {
            return Ok(Value::Bag(Bag::empty()));
        }
    }
    let op = t.op();
    op.apply(&args).map_err(|e| {
        let base = e.with_context(format!("transition `{}`", t.id));
        match iteration {
            Some((l, i)) => base.with_context(format!("loop `{l}` iteration {i}")),
            None => base,
        }
    })
}

fn collect_reduce_warnings(t: &TransitionNode, values: &BTreeMap<NodeId, Value>) -> Vec<String> {
    let args: Vec<&Value> = t
        .inputs
        .iter()
        .filter_map(|p| values.get(p))
        .collect();
    if args.len() != t.inputs.len() {
        return Vec::new();
    }
    t.op().reduce_warnings(&args)
}

fn fire_loop(
    g: &ProgramGraph,
    spec: &LoopSpec,
    options: &ExecOptions,
    marking: &mut Marking,
    values: &mut BTreeMap<NodeId, Value>,
    trace: &mut Vec<TraceEvent>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let n = options
        .loop_overrides
        .get(&spec.id)
        .copied()
        .unwrap_or(spec.n);
    if n < 0 {
        return Err(Error::NegativeIterations(n));
    }

    let entry_place = body_entry(g, spec).ok_or_else(|| {
        Error::InvalidProgram(format!("loop `{}` has no unique body entry", spec.id))
    })?;
    let exit_place = body_exit(g, spec).ok_or_else(|| {
        Error::InvalidProgram(format!("loop `{}` has no unique body exit", spec.id))
    })?;
    let controls = g.control_transitions(&spec.id);
    let find_control = |role: super::IterRole| {
        controls
            .iter()
            .find(|t| matches!(&t.kind, super::TransitionKind::IterControl { role: r, .. } if *r == role))
            .map(|t| t.id.clone())
            .unwrap_or_else(|| spec.id.clone())
    };

    let x0 = values
        .get(&spec.entry)
        .cloned()
        .expect("enabledness checked entry value");
    let x0 = x0.as_bag()?.clone();

    trace.push(TraceEvent {
        transition: find_control(super::IterRole::Start),
        loop_id: Some(spec.id.clone()),
        iteration: None,
    });

    let loop_back = find_control(super::IterRole::Iterative);
    let mut body_trace: Vec<TraceEvent> = Vec::new();
    let mut body_warnings: Vec<String> = Vec::new();

    let result = crate::algebra::repeat(
        |x: &Bag, iteration: u32| {
            if iteration > 1 {
                body_trace.push(TraceEvent {
                    transition: loop_back.clone(),
                    loop_id: Some(spec.id.clone()),
                    iteration: Some(iteration - 1),
                });
            }
            run_body(
                g,
                spec,
                &entry_place,
                &exit_place,
                Value::Bag(x.clone()),
                values,
                iteration,
                &mut body_trace,
                &mut body_warnings,
            )
        },
        |x: &Bag| match &spec.predicate {
            None => Ok(true),
            Some(p) => match p.eval(&[Value::Bag(x.clone())])? {
                Value::Bool(b) => Ok(b),
                other => Err(Error::TypeMismatch(format!(
                    "loop predicate returned {other}"
                ))),
            },
        },
        n,
        x0,
    )
    .map_err(|e| e.with_context(format!("loop `{}`", spec.id)))?;

    trace.append(&mut body_trace);
    warnings.append(&mut body_warnings);
    trace.push(TraceEvent {
        transition: find_control(super::IterRole::End),
        loop_id: Some(spec.id.clone()),
        iteration: None,
    });

    // token accounting for the loop as a unit: the entry token and one
    // token per external read are consumed, the exit is produced
    let have = marking.tokens(&spec.entry);
    marking.set(&spec.entry, have - 1);
    for (p, n) in external_reads(g, spec) {
        let have = marking.tokens(&p);
        marking.set(&p, have - n);
    }
    let produced = marking.tokens(&spec.exit) + g.weight_into(&spec.exit);
    marking.set(&spec.exit, produced);
    values.insert(spec.exit.clone(), Value::Bag(result));
    Ok(())
}

/// One pass over the loop body: topological evaluation of the body
/// transitions with the looping dataset bound to the body entry.
#[allow(clippy::too_many_arguments)]
fn run_body(
    g: &ProgramGraph,
    spec: &LoopSpec,
    entry_place: &NodeId,
    exit_place: &NodeId,
    x: Value,
    outer_values: &BTreeMap<NodeId, Value>,
    iteration: u32,
    trace: &mut Vec<TraceEvent>,
    warnings: &mut Vec<String>,
) -> Result<Bag> {
    let mut local: BTreeMap<NodeId, Value> = BTreeMap::new();
    local.insert(entry_place.clone(), x);

    let mut remaining: Vec<&NodeId> = spec.body_transitions.iter().collect();
    remaining.sort();
    let available = |p: &NodeId, local: &BTreeMap<NodeId, Value>| {
        if spec.body_places.contains(p) {
            local.contains_key(p)
        } else {
            outer_values.contains_key(p)
        }
    };
    while !remaining.is_empty() {
        let idx = remaining
            .iter()
            .position(|t| {
                g.transitions
                    .get(*t)
                    .map(|node| node.inputs.iter().all(|p| available(p, &local)))
                    .unwrap_or(false)
            })
            .ok_or_else(|| {
                Error::NonQuiescent(format!(
                    "loop `{}` body deadlocked at `{}`",
                    spec.id, remaining[0]
                ))
            })?;
        let t = g.transitions.get(remaining.remove(idx)).unwrap();
        // merge outer values for externals with local body values
        let mut view = outer_values.clone();
        view.extend(local.iter().map(|(k, v)| (k.clone(), v.clone())));
        let out = eval_transition(t, &view, Some((&spec.id, iteration)))?;
        for w in collect_reduce_warnings(t, &view) {
            warnings.push(format!("{} (iteration {iteration}): {w}", t.id));
        }
        local.insert(t.output.clone(), out);
        trace.push(TraceEvent {
            transition: t.id.clone(),
            loop_id: Some(spec.id.clone()),
            iteration: Some(iteration),
        });
    }

    local
        .remove(exit_place)
        .ok_or_else(|| {
            Error::NonQuiescent(format!(
                "loop `{}` body produced no value at `{exit_place}`",
                spec.id
            ))
        })?
        .as_bag()
        .cloned()
}
