//! The program level: bipartite Petri nets whose places hold datasets
//! and whose transitions apply transformations.
//!
//! Tokens encode readiness, not data volume. An input place starts
//! with as many tokens as it has uses; firing a transition consumes
//! one token per input edge and deposits onto its output place one
//! token per future use of that output. When the net quiesces, tokens
//! remain only on terminal output places.
//!
//! Iterations are declared structurally as [`LoopSpec`]s. The loader
//! materializes the three auxiliary control transitions (start,
//! loop-back, end) around each loop body; execution runs the body
//! through the algebra's `repeat`, and [`unfold`] rewrites the cycle
//! into an acyclic net with one body copy per iteration.

mod dot;
mod execute;
mod file;
mod marking;
mod typecheck;
mod unfold;
mod validate;

pub use dot::to_dot;
pub use execute::{execute, ExecOptions, ExecOutcome, TraceEvent};
pub use file::{load_program, load_program_str, save_program, save_program_str};
pub use marking::{enabled_transitions, fire_transition};
pub use typecheck::typecheck_program;
pub use unfold::unfold;
pub use validate::{validate, Diagnostic};

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::FuncDef;
use crate::transforms::TransformOp;
use crate::types::ElemType;

/// Identifier of a place or transition. Places and transitions share
/// one namespace and must not collide.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> NodeId {
        NodeId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> NodeId {
        NodeId(s.to_string())
    }
}

/// How a dataset participates in the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaceRole {
    /// Provided by the caller; never produced by a transition.
    Input,
    /// Produced and consumed inside the program.
    Intermediate,
    /// Terminal result; produced but never consumed.
    Output,
}

impl PlaceRole {
    pub fn as_str(self) -> &'static str {
        match self {
            PlaceRole::Input => "input",
            PlaceRole::Intermediate => "intermediate",
            PlaceRole::Output => "output",
        }
    }
}

/// A dataset place.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetNode {
    pub id: NodeId,
    pub ty: ElemType,
    pub role: PlaceRole,
}

/// Position of an auxiliary iteration-control transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterRole {
    /// Feeds the loop entry from the outside dataset.
    Start,
    /// The loop-back edge from body exit to body entry.
    Iterative,
    /// Hands the body exit to the outside exit dataset.
    End,
}

/// What a transition does when it fires.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionKind {
    Transform(TransformOp),
    /// Identity transformation that only routes iteration control.
    IterControl { role: IterRole, loop_id: NodeId },
}

/// A data-dependent guard attached by unfolding of conditional loops:
/// when the predicate evaluated on `source`'s dataset does not match
/// `expect`, the transition emits an empty bag instead of computing.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub predicate: FuncDef,
    pub source: NodeId,
    pub expect: bool,
}

/// A transition: its operation, its input places in argument order and
/// its single output place.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionNode {
    pub id: NodeId,
    pub kind: TransitionKind,
    pub inputs: Vec<NodeId>,
    pub output: NodeId,
    pub guard: Option<Guard>,
}

impl TransitionNode {
    /// The transformation this transition applies; iteration control
    /// transitions behave as identity.
    pub fn op(&self) -> TransformOp {
        match &self.kind {
            TransitionKind::Transform(op) => op.clone(),
            TransitionKind::IterControl { .. } => TransformOp::Identity,
        }
    }

    pub fn is_iter_control(&self) -> bool {
        matches!(self.kind, TransitionKind::IterControl { .. })
    }
}

/// A structurally declared iterative subnet.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSpec {
    pub id: NodeId,
    /// The outside dataset the iteration starts from (d0).
    pub entry: NodeId,
    /// The outside dataset receiving the final result (dn).
    pub exit: NodeId,
    pub body_places: Vec<NodeId>,
    pub body_transitions: Vec<NodeId>,
    /// Iteration bound; overridable at run/unfold time.
    pub n: i64,
    /// Continue-condition over the looping dataset, evaluated before
    /// every step. Absent means iterate exactly `n` times.
    pub predicate: Option<FuncDef>,
}

/// A bipartite program graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramGraph {
    pub name: String,
    pub places: BTreeMap<NodeId, DatasetNode>,
    pub transitions: BTreeMap<NodeId, TransitionNode>,
    pub loops: Vec<LoopSpec>,
}

impl ProgramGraph {
    pub fn new(name: impl Into<String>) -> ProgramGraph {
        ProgramGraph {
            name: name.into(),
            places: BTreeMap::new(),
            transitions: BTreeMap::new(),
            loops: Vec::new(),
        }
    }

    pub fn add_place(&mut self, id: &str, ty: ElemType, role: PlaceRole) {
        let id = NodeId::from(id);
        self.places.insert(id.clone(), DatasetNode { id, ty, role });
    }

    pub fn add_transition(&mut self, id: &str, op: TransformOp, inputs: &[&str], output: &str) {
        let id = NodeId::from(id);
        self.transitions.insert(
            id.clone(),
            TransitionNode {
                id,
                kind: TransitionKind::Transform(op),
                inputs: inputs.iter().map(|s| NodeId::from(*s)).collect(),
                output: NodeId::from(output),
                guard: None,
            },
        );
    }

    /// Every edge of the net, places-to-transitions and back, in a
    /// deterministic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges = Vec::new();
        for t in self.transitions.values() {
            for input in &t.inputs {
                edges.push((input.clone(), t.id.clone()));
            }
            edges.push((t.id.clone(), t.output.clone()));
        }
        edges.sort();
        edges
    }

    /// Number of uses of a dataset: how many transition input slots
    /// read it. This is the fan-out that drives edge weights and the
    /// initial marking.
    pub fn out_degree(&self, place: &NodeId) -> u32 {
        self.transitions
            .values()
            .map(|t| t.inputs.iter().filter(|p| *p == place).count() as u32)
            .sum()
    }

    /// Weight of the edge from a transition into `place`: one token
    /// per future use, and a single token for terminal output places
    /// (which have no uses).
    pub fn weight_into(&self, place: &NodeId) -> u32 {
        self.out_degree(place).max(1)
    }

    /// Transitions that produce into the given place.
    pub fn producers(&self, place: &NodeId) -> Vec<&TransitionNode> {
        self.transitions
            .values()
            .filter(|t| &t.output == place)
            .collect()
    }

    /// Transitions that read the given place.
    pub fn consumers(&self, place: &NodeId) -> Vec<&TransitionNode> {
        self.transitions
            .values()
            .filter(|t| t.inputs.contains(place))
            .collect()
    }

    /// The initial marking: one token per use on every input place.
    pub fn initial_marking(&self) -> Marking {
        let mut m = BTreeMap::new();
        for place in self.places.values() {
            let tokens = if place.role == PlaceRole::Input {
                self.out_degree(&place.id)
            } else {
                0
            };
            m.insert(place.id.clone(), tokens);
        }
        Marking(m)
    }

    /// The iteration-control transitions serving a loop.
    pub fn control_transitions(&self, loop_id: &NodeId) -> Vec<&TransitionNode> {
        self.transitions
            .values()
            .filter(|t| match &t.kind {
                TransitionKind::IterControl { loop_id: l, .. } => l == loop_id,
                _ => false,
            })
            .collect()
    }
}

/// A distribution of tokens over places.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marking(pub BTreeMap<NodeId, u32>);

impl Marking {
    pub fn tokens(&self, place: &NodeId) -> u32 {
        self.0.get(place).copied().unwrap_or(0)
    }

    pub fn set(&mut self, place: &NodeId, tokens: u32) {
        self.0.insert(place.clone(), tokens);
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let marked: Vec<String> = self
            .0
            .iter()
            .filter(|(_, n)| **n > 0)
            .map(|(p, n)| format!("{p}:{n}"))
            .collect();
        write!(f, "{{{}}}", marked.join(", "))
    }
}
