//! Structural validation of program graphs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{IterRole, NodeId, PlaceRole, ProgramGraph, TransitionKind};

/// One structural finding. Validation never fails; it reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// The place, transition or loop the finding is about.
    pub node: Option<NodeId>,
    pub message: String,
}

impl Diagnostic {
    fn new(node: Option<&NodeId>, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            node: node.cloned(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Some(id) => write!(f, "{id}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Checks every structural invariant of the net; an empty result means
/// the graph is well formed.
pub fn validate(g: &ProgramGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    // places and transitions are disjoint, finite sets
    for id in g.transitions.keys() {
        if g.places.contains_key(id) {
            out.push(Diagnostic::new(
                Some(id),
                "id used for both a place and a transition",
            ));
        }
    }

    let loop_entry_places: BTreeSet<&NodeId> = g
        .transitions
        .values()
        .filter(|t| {
            matches!(
                t.kind,
                TransitionKind::IterControl {
                    role: IterRole::Start,
                    ..
                }
            )
        })
        .map(|t| &t.output)
        .collect();

    // bipartite wiring: transition endpoints must be places
    for t in g.transitions.values() {
        for p in t.inputs.iter().chain(std::iter::once(&t.output)) {
            if g.transitions.contains_key(p) {
                out.push(Diagnostic::new(
                    Some(&t.id),
                    format!("not bipartite: edge to transition `{p}`"),
                ));
            } else if !g.places.contains_key(p) {
                out.push(Diagnostic::new(
                    Some(&t.id),
                    format!("references unknown dataset `{p}`"),
                ));
            }
        }
        // arity: one or two incoming edges, exactly one outgoing
        let expected = match &t.kind {
            TransitionKind::Transform(op) => op.arity(),
            TransitionKind::IterControl { .. } => 1,
        };
        if t.inputs.len() != expected {
            out.push(Diagnostic::new(
                Some(&t.id),
                format!(
                    "{} takes {} input(s), has {}",
                    t.op().kind_name(),
                    expected,
                    t.inputs.len()
                ),
            ));
        }
        if let Some(guard) = &t.guard {
            if !g.places.contains_key(&guard.source) {
                out.push(Diagnostic::new(
                    Some(&t.id),
                    format!("guard reads unknown dataset `{}`", guard.source),
                ));
            }
        }
    }

    // role consistency and producer counts
    let mut has_input = false;
    let mut has_output = false;
    for place in g.places.values() {
        let producers = g.producers(&place.id);
        let consumers = g.out_degree(&place.id);
        match place.role {
            PlaceRole::Input => {
                has_input = true;
                if !producers.is_empty() {
                    out.push(Diagnostic::new(
                        Some(&place.id),
                        "input dataset must not be produced by a transition",
                    ));
                }
                // a consumer-less input is tolerated: deletion-style
                // mutants legitimately orphan one of their inputs
            }
            PlaceRole::Intermediate => {
                if producers.is_empty() {
                    out.push(Diagnostic::new(
                        Some(&place.id),
                        "intermediate dataset has no producer",
                    ));
                }
                if consumers == 0 {
                    out.push(Diagnostic::new(
                        Some(&place.id),
                        "intermediate dataset has no consumer",
                    ));
                }
            }
            PlaceRole::Output => {
                has_output = true;
                if producers.is_empty() {
                    out.push(Diagnostic::new(
                        Some(&place.id),
                        "output dataset has no producer",
                    ));
                }
                if consumers > 0 {
                    out.push(Diagnostic::new(
                        Some(&place.id),
                        "output dataset must be terminal",
                    ));
                }
            }
        }
        // every dataset is written at most once; loop entries are the
        // exception, fed by both the start and the loop-back transition
        let max_producers = if loop_entry_places.contains(&place.id) {
            2
        } else {
            1
        };
        if producers.len() > max_producers {
            out.push(Diagnostic::new(
                Some(&place.id),
                format!("dataset has {} producers", producers.len()),
            ));
        }
    }
    if !has_input {
        out.push(Diagnostic::new(None, "program has no input dataset"));
    }
    if !has_output {
        out.push(Diagnostic::new(None, "program has no output dataset"));
    }

    validate_loops(g, &mut out);

    // acyclicity once loop-back edges are dropped: every cycle must
    // pass through an iterative control transition
    if let Some(cycle_node) = find_cycle(g) {
        out.push(Diagnostic::new(
            Some(&cycle_node),
            "cycle does not pass through an iteration loop-back",
        ));
    }

    out
}

fn validate_loops(g: &ProgramGraph, out: &mut Vec<Diagnostic>) {
    let mut seen_members: BTreeMap<&NodeId, &NodeId> = BTreeMap::new();
    for spec in &g.loops {
        if spec.n < 0 {
            out.push(Diagnostic::new(
                Some(&spec.id),
                format!("negative iteration count {}", spec.n),
            ));
        }
        for p in [&spec.entry, &spec.exit] {
            if !g.places.contains_key(p) {
                out.push(Diagnostic::new(
                    Some(&spec.id),
                    format!("loop references unknown dataset `{p}`"),
                ));
            }
        }
        if spec.body_places.contains(&spec.entry) || spec.body_places.contains(&spec.exit) {
            out.push(Diagnostic::new(
                Some(&spec.id),
                "loop entry/exit datasets must live outside the body",
            ));
        }
        for p in &spec.body_places {
            if !g.places.contains_key(p) {
                out.push(Diagnostic::new(
                    Some(&spec.id),
                    format!("body references unknown dataset `{p}`"),
                ));
            }
            if let Some(other) = seen_members.insert(p, &spec.id) {
                if other != &spec.id {
                    out.push(Diagnostic::new(
                        Some(p),
                        format!("shared between loops `{other}` and `{}`", spec.id),
                    ));
                }
            }
        }
        for t in &spec.body_transitions {
            match g.transitions.get(t) {
                None => out.push(Diagnostic::new(
                    Some(&spec.id),
                    format!("body references unknown transition `{t}`"),
                )),
                Some(node) if node.is_iter_control() => out.push(Diagnostic::new(
                    Some(&spec.id),
                    format!("control transition `{t}` listed in loop body"),
                )),
                Some(node) => {
                    if !spec.body_places.contains(&node.output) {
                        out.push(Diagnostic::new(
                            Some(t),
                            "body transition must produce into a body dataset",
                        ));
                    }
                }
            }
            if let Some(other) = seen_members.insert(t, &spec.id) {
                if other != &spec.id {
                    out.push(Diagnostic::new(
                        Some(t),
                        format!("shared between loops `{other}` and `{}`", spec.id),
                    ));
                }
            }
        }

        // unique body entry (consumed, never produced, inside the
        // body) and unique body exit (produced, never consumed by the
        // body); the control transitions wire them to the outside
        match (body_entry(g, spec), body_exit(g, spec)) {
            (Some(entry), Some(exit)) => {
                check_controls(g, spec, &entry, &exit, out);
            }
            _ => {
                out.push(Diagnostic::new(
                    Some(&spec.id),
                    "malformed iterative subnet: body entry/exit datasets are not unique",
                ));
            }
        }

        if let Some(p) = &spec.predicate {
            if p.params.len() != 1 {
                out.push(Diagnostic::new(
                    Some(&spec.id),
                    "loop predicate must take exactly one parameter",
                ));
            }
        }
    }

    // every control transition must belong to a declared loop
    for t in g.transitions.values() {
        if let TransitionKind::IterControl { loop_id, .. } = &t.kind {
            if !g.loops.iter().any(|l| &l.id == loop_id) {
                out.push(Diagnostic::new(
                    Some(&t.id),
                    format!("control transition for undeclared loop `{loop_id}`"),
                ));
            }
        }
    }
}

/// The body place no body transition produces into.
pub(crate) fn body_entry(g: &ProgramGraph, spec: &super::LoopSpec) -> Option<NodeId> {
    unique_body_place(g, spec, |g, p| {
        !spec
            .body_transitions
            .iter()
            .filter_map(|t| g.transitions.get(t))
            .any(|t| &t.output == p)
    })
}

/// The body place no body transition reads.
pub(crate) fn body_exit(g: &ProgramGraph, spec: &super::LoopSpec) -> Option<NodeId> {
    unique_body_place(g, spec, |g, p| {
        !spec
            .body_transitions
            .iter()
            .filter_map(|t| g.transitions.get(t))
            .any(|t| t.inputs.contains(p))
    })
}

fn unique_body_place<F>(g: &ProgramGraph, spec: &super::LoopSpec, pred: F) -> Option<NodeId>
where
    F: Fn(&ProgramGraph, &NodeId) -> bool,
{
    let mut found = None;
    for p in &spec.body_places {
        if pred(g, p) {
            if found.is_some() {
                return None;
            }
            found = Some(p.clone());
        }
    }
    found
}

fn check_controls(
    g: &ProgramGraph,
    spec: &super::LoopSpec,
    entry: &NodeId,
    exit: &NodeId,
    out: &mut Vec<Diagnostic>,
) {
    let controls = g.control_transitions(&spec.id);
    let find = |role: IterRole| {
        controls.iter().find(|t| {
            matches!(&t.kind, TransitionKind::IterControl { role: r, .. } if *r == role)
        })
    };
    match find(IterRole::Start) {
        Some(t) if t.inputs == vec![spec.entry.clone()] && &t.output == entry => {}
        Some(t) => out.push(Diagnostic::new(
            Some(&t.id),
            "malformed iterative subnet: start transition miswired",
        )),
        None => out.push(Diagnostic::new(
            Some(&spec.id),
            "malformed iterative subnet: missing start transition",
        )),
    }
    match find(IterRole::Iterative) {
        Some(t) if t.inputs == vec![exit.clone()] && &t.output == entry => {}
        Some(t) => out.push(Diagnostic::new(
            Some(&t.id),
            "malformed iterative subnet: loop-back transition miswired",
        )),
        None => out.push(Diagnostic::new(
            Some(&spec.id),
            "malformed iterative subnet: missing loop-back transition",
        )),
    }
    match find(IterRole::End) {
        Some(t) if t.inputs == vec![exit.clone()] && t.output == spec.exit => {}
        Some(t) => out.push(Diagnostic::new(
            Some(&t.id),
            "malformed iterative subnet: end transition miswired",
        )),
        None => out.push(Diagnostic::new(
            Some(&spec.id),
            "malformed iterative subnet: missing end transition",
        )),
    }
}

/// Looks for a cycle in the graph with loop-back edges removed.
/// Returns a node on the cycle, if any.
fn find_cycle(g: &ProgramGraph) -> Option<NodeId> {
    // successors over the bipartite graph, skipping the output edge of
    // iterative (loop-back) control transitions
    let mut succ: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for t in g.transitions.values() {
        for input in &t.inputs {
            succ.entry(input).or_default().push(&t.id);
        }
        let is_loop_back = matches!(
            t.kind,
            TransitionKind::IterControl {
                role: IterRole::Iterative,
                ..
            }
        );
        if !is_loop_back {
            succ.entry(&t.id).or_default().push(&t.output);
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Visiting,
        Done,
    }
    let mut state: BTreeMap<&NodeId, State> = BTreeMap::new();
    let all_nodes: Vec<&NodeId> = g.places.keys().chain(g.transitions.keys()).collect();
    for start in all_nodes {
        if state.contains_key(start) {
            continue;
        }
        // iterative DFS with an explicit stack
        let mut stack: Vec<(&NodeId, usize)> = vec![(start, 0)];
        state.insert(start, State::Visiting);
        while let Some((node, idx)) = stack.pop() {
            let next = succ.get(node).and_then(|s| s.get(idx)).copied();
            match next {
                Some(child) => {
                    stack.push((node, idx + 1));
                    match state.get(child) {
                        Some(State::Visiting) => return Some(child.clone()),
                        Some(State::Done) => {}
                        None => {
                            state.insert(child, State::Visiting);
                            stack.push((child, 0));
                        }
                    }
                }
                None => {
                    state.insert(node, State::Done);
                }
            }
        }
    }
    None
}
