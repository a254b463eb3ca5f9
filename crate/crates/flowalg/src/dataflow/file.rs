//! The on-disk program format: a JSON document listing datasets,
//! transformations and loops. Loading synthesizes the three iteration
//! control transitions around each declared loop; saving drops them
//! again, so load and save are inverses on the declared content.
//!
//! ```json
//! {
//!   "name": "union_logs",
//!   "datasets": [
//!     {"id": "d1", "type": "Bag<Str>", "role": "input"}
//!   ],
//!   "transformations": [
//!     {"id": "t1", "kind": "union", "inputs": ["d1", "d2"], "output": "d3"}
//!   ],
//!   "loops": []
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::FuncDef;
use crate::transforms::TransformOp;
use crate::types::ElemType;

use super::{
    DatasetNode, Guard, IterRole, LoopSpec, NodeId, PlaceRole, ProgramGraph, TransitionKind,
    TransitionNode,
};

#[derive(Debug, Serialize, Deserialize)]
struct ProgramFile {
    name: String,
    datasets: Vec<DatasetDecl>,
    transformations: Vec<TransformDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    loops: Vec<LoopDecl>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetDecl {
    id: String,
    #[serde(rename = "type")]
    ty: String,
    role: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformDecl {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    udf: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    descending: Option<bool>,
    inputs: Vec<String>,
    output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<GuardDecl>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GuardDecl {
    predicate: String,
    source: String,
    expect: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct LoopDecl {
    id: String,
    entry: String,
    exit: String,
    #[serde(rename = "bodyPlaces")]
    body_places: Vec<String>,
    #[serde(rename = "bodyTransitions")]
    body_transitions: Vec<String>,
    n: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicate: Option<String>,
}

/// Parses a program from JSON text.
pub fn load_program_str(text: &str) -> Result<ProgramGraph> {
    let file: ProgramFile =
        serde_json::from_str(text).map_err(|e| Error::Decode(format!("bad program JSON: {e}")))?;
    let mut g = ProgramGraph::new(file.name);

    for d in file.datasets {
        let ty: ElemType = d.ty.parse()?;
        let role = match d.role.as_str() {
            "input" => PlaceRole::Input,
            "intermediate" => PlaceRole::Intermediate,
            "output" => PlaceRole::Output,
            other => {
                return Err(Error::Decode(format!(
                    "dataset `{}` has unknown role `{other}`",
                    d.id
                )))
            }
        };
        let id = NodeId::new(&d.id);
        if g.places.contains_key(&id) {
            return Err(Error::Decode(format!("duplicate dataset id `{}`", d.id)));
        }
        g.places.insert(id.clone(), DatasetNode { id, ty, role });
    }

    for t in file.transformations {
        let op = parse_kind(&t)?;
        let id = NodeId::new(&t.id);
        if g.transitions.contains_key(&id) {
            return Err(Error::Decode(format!("duplicate transformation id `{}`", t.id)));
        }
        let guard = match t.guard {
            None => None,
            Some(gd) => Some(Guard {
                predicate: FuncDef::parse(&gd.predicate)?,
                source: NodeId::new(&gd.source),
                expect: gd.expect,
            }),
        };
        g.transitions.insert(
            id.clone(),
            TransitionNode {
                id,
                kind: TransitionKind::Transform(op),
                inputs: t.inputs.iter().map(NodeId::new).collect(),
                output: NodeId::new(&t.output),
                guard,
            },
        );
    }

    for l in file.loops {
        let spec = LoopSpec {
            id: NodeId::new(&l.id),
            entry: NodeId::new(&l.entry),
            exit: NodeId::new(&l.exit),
            body_places: l.body_places.iter().map(NodeId::new).collect(),
            body_transitions: l.body_transitions.iter().map(NodeId::new).collect(),
            n: l.n,
            predicate: l.predicate.as_deref().map(FuncDef::parse).transpose()?,
        };
        synthesize_controls(&mut g, &spec)?;
        g.loops.push(spec);
    }

    Ok(g)
}

/// Reads a program file from disk.
pub fn load_program(path: impl AsRef<Path>) -> Result<ProgramGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?;
    load_program_str(&text)
}

/// The auxiliary transitions marking the beginning, repetition and end
/// of an iteration, wired around the body's entry and exit datasets.
fn synthesize_controls(g: &mut ProgramGraph, spec: &LoopSpec) -> Result<()> {
    let entry_b = super::validate::body_entry(g, spec).ok_or_else(|| {
        Error::Decode(format!(
            "loop `{}`: cannot identify a unique body entry dataset",
            spec.id
        ))
    })?;
    let exit_b = super::validate::body_exit(g, spec).ok_or_else(|| {
        Error::Decode(format!(
            "loop `{}`: cannot identify a unique body exit dataset",
            spec.id
        ))
    })?;
    let mut add = |suffix: &str, role: IterRole, input: &NodeId, output: &NodeId| -> Result<()> {
        let id = NodeId::new(format!("{}_{suffix}", spec.id));
        if g.transitions.contains_key(&id) || g.places.contains_key(&id) {
            return Err(Error::Decode(format!(
                "loop `{}` collides with existing id `{id}`",
                spec.id
            )));
        }
        g.transitions.insert(
            id.clone(),
            TransitionNode {
                id,
                kind: TransitionKind::IterControl {
                    role,
                    loop_id: spec.id.clone(),
                },
                inputs: vec![input.clone()],
                output: output.clone(),
                guard: None,
            },
        );
        Ok(())
    };
    add("start", IterRole::Start, &spec.entry, &entry_b)?;
    add("iter", IterRole::Iterative, &exit_b, &entry_b)?;
    add("end", IterRole::End, &exit_b, &spec.exit)?;
    Ok(())
}

fn parse_kind(t: &TransformDecl) -> Result<TransformOp> {
    let udf = || -> Result<FuncDef> {
        let src = t.udf.as_ref().ok_or_else(|| {
            Error::Decode(format!("transformation `{}` ({}) needs a udf", t.id, t.kind))
        })?;
        FuncDef::parse(src)
    };
    let descending = t.descending.unwrap_or(false);
    Ok(match t.kind.as_str() {
        "map" => TransformOp::Map(udf()?),
        "flatMap" => TransformOp::FlatMap(udf()?),
        "filter" => TransformOp::Filter(udf()?),
        "groupBy" => TransformOp::GroupBy(udf()?),
        "groupByKey" => TransformOp::GroupByKey,
        "union" => TransformOp::Union,
        "intersection" => TransformOp::Intersection,
        "subtract" => TransformOp::Subtract,
        "distinct" => TransformOp::Distinct,
        "reduce" => TransformOp::Reduce(udf()?),
        "reduceByKey" => TransformOp::ReduceByKey(udf()?),
        "innerJoin" => TransformOp::InnerJoin,
        "leftOuterJoin" => TransformOp::LeftOuterJoin,
        "rightOuterJoin" => TransformOp::RightOuterJoin,
        "fullOuterJoin" => TransformOp::FullOuterJoin,
        "orderBy" => TransformOp::OrderBy { descending },
        "orderByKey" => TransformOp::OrderByKey { descending },
        "identity" => TransformOp::Identity,
        other => {
            return Err(Error::Decode(format!(
                "transformation `{}` has unknown kind `{other}`",
                t.id
            )))
        }
    })
}

/// Serializes a program to JSON text. Synthesized control transitions
/// are omitted; they are re-created on load.
pub fn save_program_str(g: &ProgramGraph) -> Result<String> {
    let datasets = g
        .places
        .values()
        .map(|p| DatasetDecl {
            id: p.id.to_string(),
            ty: p.ty.to_string(),
            role: p.role.as_str().to_string(),
        })
        .collect();
    let transformations = g
        .transitions
        .values()
        .filter(|t| !t.is_iter_control())
        .map(|t| {
            let op = match &t.kind {
                TransitionKind::Transform(op) => op,
                TransitionKind::IterControl { .. } => unreachable!(),
            };
            let descending = match op {
                TransformOp::OrderBy { descending } | TransformOp::OrderByKey { descending } => {
                    Some(*descending)
                }
                _ => None,
            };
            TransformDecl {
                id: t.id.to_string(),
                kind: op.kind_name().to_string(),
                udf: op.udf().map(FuncDef::to_source),
                descending,
                inputs: t.inputs.iter().map(NodeId::to_string).collect(),
                output: t.output.to_string(),
                guard: t.guard.as_ref().map(|guard| GuardDecl {
                    predicate: guard.predicate.to_source(),
                    source: guard.source.to_string(),
                    expect: guard.expect,
                }),
            }
        })
        .collect();
    let loops = g
        .loops
        .iter()
        .map(|l| LoopDecl {
            id: l.id.to_string(),
            entry: l.entry.to_string(),
            exit: l.exit.to_string(),
            body_places: l.body_places.iter().map(NodeId::to_string).collect(),
            body_transitions: l.body_transitions.iter().map(NodeId::to_string).collect(),
            n: l.n,
            predicate: l.predicate.as_ref().map(FuncDef::to_source),
        })
        .collect();
    let file = ProgramFile {
        name: g.name.clone(),
        datasets,
        transformations,
        loops,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("program serialization");
    text.push('\n');
    Ok(text)
}

/// Writes a program file to disk.
pub fn save_program(g: &ProgramGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, save_program_str(g)?)?;
    Ok(())
}
