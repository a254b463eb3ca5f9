//! Rewrites iterative subnets into acyclic form: the control
//! transitions disappear and the loop body is copied once per
//! iteration, with iteration-indexed ids chaining each copy's exit to
//! the next copy's entry.
//!
//! Conditional loops cannot know their trip count statically, so each
//! body copy is guarded by the continue-condition evaluated on that
//! copy's entry dataset; a copy whose guard is false passes its input
//! through a bypass identity, and a union transition merges the two
//! mutually exclusive routes. With the guards in place the unfolded
//! net computes exactly what the looping net computes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::transforms::TransformOp;

use super::validate::{body_entry, body_exit};
use super::{
    Diagnostic, Guard, LoopSpec, NodeId, PlaceRole, ProgramGraph, TransitionKind, TransitionNode,
};

/// Replaces every loop by `n` indexed copies of its body (`n` from the
/// loop or from `overrides`). The result has no control transitions
/// and no cycles, and validates cleanly.
pub fn unfold(g: &ProgramGraph, overrides: &BTreeMap<NodeId, i64>) -> Result<ProgramGraph> {
    let diags = validate_clean(g)?;
    drop(diags);

    let mut result = g.clone();
    let mut pending: Vec<LoopSpec> = std::mem::take(&mut result.loops);
    while !pending.is_empty() {
        let spec = pending.remove(0);
        let n = overrides.get(&spec.id).copied().unwrap_or(spec.n);
        if n < 0 {
            return Err(Error::NegativeIterations(n));
        }
        let entry_b = body_entry(g, &spec).ok_or_else(|| {
            Error::InvalidProgram(format!("loop `{}` has no unique body entry", spec.id))
        })?;
        let exit_b = body_exit(g, &spec).ok_or_else(|| {
            Error::InvalidProgram(format!("loop `{}` has no unique body exit", spec.id))
        })?;

        // drop the loop apparatus
        let control_ids: Vec<NodeId> = result
            .control_transitions(&spec.id)
            .into_iter()
            .map(|t| t.id.clone())
            .collect();
        for id in control_ids {
            result.transitions.remove(&id);
        }
        for t in &spec.body_transitions {
            result.transitions.remove(t);
        }
        for p in &spec.body_places {
            result.places.remove(p);
        }

        if n == 0 {
            fuse_or_bridge(&mut result, &spec, &mut pending)?;
            continue;
        }

        for i in 1..=n {
            let prev_exit = if i == 1 {
                spec.entry.clone()
            } else {
                indexed(&exit_b, i - 1)
            };
            let this_exit = if i == n {
                spec.exit.clone()
            } else {
                let id = indexed(&exit_b, i);
                add_fresh_place(&mut result, &id, &g.places[&exit_b].ty)?;
                id
            };
            // where the body writes its result inside this copy
            let body_out = if spec.predicate.is_some() {
                let id = NodeId::new(format!("{}_body_{}", exit_b, i));
                add_fresh_place(&mut result, &id, &g.places[&exit_b].ty)?;
                id
            } else {
                this_exit.clone()
            };

            let mut mapping: BTreeMap<NodeId, NodeId> = BTreeMap::new();
            mapping.insert(entry_b.clone(), prev_exit.clone());
            mapping.insert(exit_b.clone(), body_out.clone());
            for p in &spec.body_places {
                if *p == entry_b || *p == exit_b {
                    continue;
                }
                let id = indexed(p, i);
                add_fresh_place(&mut result, &id, &g.places[p].ty)?;
                mapping.insert(p.clone(), id);
            }

            for t in &spec.body_transitions {
                let original = &g.transitions[t];
                let remap = |p: &NodeId| mapping.get(p).cloned().unwrap_or_else(|| p.clone());
                let guard = spec.predicate.as_ref().map(|pred| Guard {
                    predicate: pred.clone(),
                    source: prev_exit.clone(),
                    expect: true,
                });
                add_fresh_transition(
                    &mut result,
                    TransitionNode {
                        id: indexed(t, i),
                        kind: original.kind.clone(),
                        inputs: original.inputs.iter().map(remap).collect(),
                        output: remap(&original.output),
                        guard,
                    },
                )?;
            }

            if let Some(pred) = &spec.predicate {
                // bypass route for a copy whose guard is false
                let skip_out = NodeId::new(format!("{}_skip_{}", exit_b, i));
                add_fresh_place(&mut result, &skip_out, &g.places[&exit_b].ty)?;
                add_fresh_transition(
                    &mut result,
                    TransitionNode {
                        id: NodeId::new(format!("{}_skip_{}", spec.id, i)),
                        kind: TransitionKind::Transform(TransformOp::Identity),
                        inputs: vec![prev_exit.clone()],
                        output: skip_out.clone(),
                        guard: Some(Guard {
                            predicate: pred.clone(),
                            source: prev_exit.clone(),
                            expect: false,
                        }),
                    },
                )?;
                // exactly one of the two routes carries data
                add_fresh_transition(
                    &mut result,
                    TransitionNode {
                        id: NodeId::new(format!("{}_merge_{}", spec.id, i)),
                        kind: TransitionKind::Transform(TransformOp::Union),
                        inputs: vec![body_out.clone(), skip_out],
                        output: this_exit.clone(),
                        guard: None,
                    },
                )?;
            }
        }
    }

    let diags = super::validate(&result);
    if let Some(first) = diags.first() {
        return Err(Error::InvalidProgram(format!(
            "unfolded net does not validate: {first}"
        )));
    }
    if let Err(diags) = super::typecheck_program(&result) {
        return Err(Error::InvalidProgram(format!(
            "unfolded net does not type check: {}",
            diags[0]
        )));
    }
    Ok(result)
}

fn validate_clean(g: &ProgramGraph) -> Result<Vec<Diagnostic>> {
    let diags = super::validate(g);
    if let Some(first) = diags.first() {
        return Err(Error::InvalidProgram(first.to_string()));
    }
    Ok(diags)
}

fn indexed(id: &NodeId, i: i64) -> NodeId {
    NodeId::new(format!("{id}_{i}"))
}

fn add_fresh_place(g: &mut ProgramGraph, id: &NodeId, ty: &crate::types::ElemType) -> Result<()> {
    if g.places.contains_key(id) || g.transitions.contains_key(id) {
        return Err(Error::InvalidProgram(format!(
            "unfolding collides with existing id `{id}`"
        )));
    }
    g.places.insert(
        id.clone(),
        super::DatasetNode {
            id: id.clone(),
            ty: ty.clone(),
            role: PlaceRole::Intermediate,
        },
    );
    Ok(())
}

fn add_fresh_transition(g: &mut ProgramGraph, t: TransitionNode) -> Result<()> {
    if g.places.contains_key(&t.id) || g.transitions.contains_key(&t.id) {
        return Err(Error::InvalidProgram(format!(
            "unfolding collides with existing id `{}`",
            t.id
        )));
    }
    g.transitions.insert(t.id.clone(), t);
    Ok(())
}

/// Zero iterations: the loop body vanishes and the entry dataset *is*
/// the exit dataset. When fusing the two places would leave a dataset
/// that must be both a program input (or a read intermediate) and a
/// terminal output, an identity transition bridges them instead.
fn fuse_or_bridge(
    result: &mut ProgramGraph,
    spec: &LoopSpec,
    pending: &mut [LoopSpec],
) -> Result<()> {
    let d0 = spec.entry.clone();
    let dn = spec.exit.clone();
    let d0_role = result.places[&d0].role;
    let dn_role = result.places[&dn].role;
    let d0_still_read = result.out_degree(&d0) > 0;

    let needs_bridge = dn_role == PlaceRole::Output && (d0_role == PlaceRole::Input || d0_still_read);
    if needs_bridge {
        add_fresh_transition(
            result,
            TransitionNode {
                id: NodeId::new(format!("{}_n0", spec.id)),
                kind: TransitionKind::Transform(TransformOp::Identity),
                inputs: vec![d0],
                output: dn,
                guard: None,
            },
        )?;
        return Ok(());
    }

    // true fusion: dn's readers now read d0, dn disappears
    result.places.remove(&dn);
    for t in result.transitions.values_mut() {
        for p in t.inputs.iter_mut() {
            if *p == dn {
                *p = d0.clone();
            }
        }
        if let Some(guard) = &mut t.guard {
            if guard.source == dn {
                guard.source = d0.clone();
            }
        }
    }
    for other in pending.iter_mut() {
        if other.entry == dn {
            other.entry = d0.clone();
        }
        if other.exit == dn {
            other.exit = d0.clone();
        }
    }
    if dn_role == PlaceRole::Output {
        result.places.get_mut(&d0).unwrap().role = PlaceRole::Output;
    }
    Ok(())
}
