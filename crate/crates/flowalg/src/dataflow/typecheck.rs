//! Program-level type checking: every transition's signature schema is
//! checked against the declared types of its input and output places.

use std::collections::BTreeMap;

use crate::types::ElemType;

use super::{Diagnostic, NodeId, ProgramGraph};

/// Verifies type propagation through the whole net and returns the
/// place-to-type assignment. Diagnostics name the offending transition.
pub fn typecheck_program(
    g: &ProgramGraph,
) -> Result<BTreeMap<NodeId, ElemType>, Vec<Diagnostic>> {
    let mut diags = Vec::new();

    for t in g.transitions.values() {
        let mut input_types = Vec::new();
        let mut missing = false;
        for p in &t.inputs {
            match g.places.get(p) {
                Some(place) => input_types.push(place.ty.clone()),
                None => missing = true,
            }
        }
        let Some(out_place) = g.places.get(&t.output) else {
            continue; // validation reports unknown datasets
        };
        if missing {
            continue;
        }
        match t.op().output_type(&input_types) {
            Err(e) => diags.push(Diagnostic {
                node: Some(t.id.clone()),
                message: e.to_string(),
            }),
            Ok(derived) => {
                if derived != out_place.ty {
                    diags.push(Diagnostic {
                        node: Some(t.id.clone()),
                        message: format!(
                            "produces {derived} but `{}` declares {}",
                            out_place.id, out_place.ty
                        ),
                    });
                }
            }
        }
        if let Some(guard) = &t.guard {
            check_predicate(g, &guard.predicate, &guard.source, &t.id, &mut diags);
        }
    }

    for spec in &g.loops {
        let entry_ty = g.places.get(&spec.entry).map(|p| &p.ty);
        let exit_ty = g.places.get(&spec.exit).map(|p| &p.ty);
        if let (Some(entry_ty), Some(exit_ty)) = (entry_ty, exit_ty) {
            // the step function maps the looping dataset to itself
            if entry_ty != exit_ty {
                diags.push(Diagnostic {
                    node: Some(spec.id.clone()),
                    message: format!(
                        "loop entry is {entry_ty} but exit is {exit_ty}; iteration needs equal types"
                    ),
                });
            }
            if !matches!(entry_ty, ElemType::Bag(_)) {
                diags.push(Diagnostic {
                    node: Some(spec.id.clone()),
                    message: format!("iteration runs over bags, entry is {entry_ty}"),
                });
            }
        }
        if let Some(pred) = &spec.predicate {
            check_predicate(g, pred, &spec.entry, &spec.id, &mut diags);
        }
    }

    if diags.is_empty() {
        Ok(g.places
            .values()
            .map(|p| (p.id.clone(), p.ty.clone()))
            .collect())
    } else {
        Err(diags)
    }
}

fn check_predicate(
    g: &ProgramGraph,
    pred: &crate::expr::FuncDef,
    source: &NodeId,
    at: &NodeId,
    diags: &mut Vec<Diagnostic>,
) {
    let Some(place) = g.places.get(source) else {
        return;
    };
    if let Err(e) = pred.typecheck() {
        diags.push(Diagnostic {
            node: Some(at.clone()),
            message: format!("predicate: {e}"),
        });
        return;
    }
    let ok = pred.params.len() == 1
        && pred.params[0].1 == place.ty
        && pred.return_type == ElemType::Bool;
    if !ok {
        diags.push(Diagnostic {
            node: Some(at.clone()),
            message: format!(
                "predicate must be {} -> Bool, declares ({}) -> {}",
                place.ty,
                pred.params
                    .iter()
                    .map(|(_, t)| t.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
                pred.return_type
            ),
        });
    }
}
