//! The mutant generators. Each candidate is kept only if it validates
//! and type checks, so the type guards fall out of the checks the rest
//! of the system already has.

use crate::dataflow::{typecheck_program, validate, NodeId, ProgramGraph, TransitionKind};
use crate::expr::{Expr, FuncDef};
use crate::transforms::TransformOp;
use crate::types::ElemType;
use crate::Result;

use super::{Mutant, OperatorFamily};

/// Keeps the candidate only when it still validates and type checks.
fn keep_if_clean(mut out: Vec<Mutant>, candidate: Mutant) -> Vec<Mutant> {
    if validate(&candidate.graph).is_empty() && typecheck_program(&candidate.graph).is_ok() {
        out.push(candidate);
    }
    out
}

fn with_op(g: &ProgramGraph, site: &NodeId, op: TransformOp) -> ProgramGraph {
    let mut mutated = g.clone();
    let t = mutated.transitions.get_mut(site).unwrap();
    t.kind = TransitionKind::Transform(op);
    mutated
}

/// The dataflow operators: replacement of one transformation's
/// operation by another one appearing in the program, swap of two
/// adjacent unary transformations, and deletion of a transformation
/// whose input and output types coincide.
pub fn mutate_dataflow(g: &ProgramGraph) -> Result<Vec<Mutant>> {
    let mut out = Vec::new();

    // replacement: host keeps its wiring, takes the donor's operation
    for (host_id, host) in &g.transitions {
        if host.is_iter_control() {
            continue;
        }
        for (donor_id, donor) in &g.transitions {
            if donor_id == host_id || donor.is_iter_control() {
                continue;
            }
            let host_op = host.op();
            let donor_op = donor.op();
            if donor_op == host_op || donor_op.arity() != host_op.arity() {
                continue;
            }
            let mutated = with_op(g, host_id, donor_op.clone());
            out = keep_if_clean(
                out,
                Mutant {
                    graph: mutated,
                    family: OperatorFamily::TransformationReplacement,
                    sites: vec![host_id.clone(), donor_id.clone()],
                    description: format!(
                        "replace {host_id} ({}) with the {} of {donor_id}",
                        host_op.kind_name(),
                        donor_op.kind_name()
                    ),
                },
            );
        }
    }

    // swap: two unary transformations in sequence exchange their
    // operations, so the downstream one now runs first
    for (first_id, first) in &g.transitions {
        if first.is_iter_control() || first.op().arity() != 1 {
            continue;
        }
        let mid = &first.output;
        let consumers = g.consumers(mid);
        if consumers.len() != 1 || g.out_degree(mid) != 1 {
            continue;
        }
        let second = consumers[0];
        if second.is_iter_control() || second.op().arity() != 1 || second.guard.is_some() {
            continue;
        }
        if first.op() == second.op() {
            continue; // exchanging equal operations changes nothing
        }
        let mut mutated = g.clone();
        let first_op = first.op();
        let second_op = second.op();
        // the intermediate dataset now holds the downstream result
        let in_ty = g.places[&first.inputs[0]].ty.clone();
        let Ok(new_mid_ty) = second_op.output_type(std::slice::from_ref(&in_ty)) else {
            continue;
        };
        mutated.transitions.get_mut(first_id).unwrap().kind =
            TransitionKind::Transform(second_op);
        mutated.transitions.get_mut(&second.id).unwrap().kind =
            TransitionKind::Transform(first_op);
        mutated.places.get_mut(mid).unwrap().ty = new_mid_ty;
        out = keep_if_clean(
            out,
            Mutant {
                graph: mutated,
                family: OperatorFamily::TransformationsSwap,
                sites: vec![first_id.clone(), second.id.clone()],
                description: format!("swap the order of {first_id} and {}", second.id),
            },
        );
    }

    // deletion: a unary transformation with equal input and output
    // types becomes the identity
    for (site_id, site) in &g.transitions {
        if site.is_iter_control() {
            continue;
        }
        let op = site.op();
        if op.arity() != 1 || op == TransformOp::Identity {
            continue;
        }
        let in_ty = &g.places[&site.inputs[0]].ty;
        let out_ty = &g.places[&site.output].ty;
        if in_ty != out_ty {
            continue;
        }
        out = keep_if_clean(
            out,
            Mutant {
                graph: with_op(g, site_id, TransformOp::Identity),
                family: OperatorFamily::TransformationDeletion,
                sites: vec![site_id.clone()],
                description: format!("delete {site_id} ({})", op.kind_name()),
            },
        );
    }

    Ok(out)
}

/// The five substitution functions for an aggregation site
/// `reduce(f)` or `reduceByKey(f)`: first operand, second operand,
/// `f(x,x)`, `f(y,y)` and `f(y,x)`.
pub fn mutate_aggregation(g: &ProgramGraph, site: &NodeId) -> Result<Vec<Mutant>> {
    let Some(t) = g.transitions.get(site) else {
        return Ok(Vec::new());
    };
    let (f, rebuild): (&FuncDef, fn(FuncDef) -> TransformOp) = match &t.kind {
        TransitionKind::Transform(TransformOp::Reduce(f)) => (f, TransformOp::Reduce),
        TransitionKind::Transform(TransformOp::ReduceByKey(f)) => (f, TransformOp::ReduceByKey),
        _ => return Ok(Vec::new()),
    };
    let x = f.params[0].0.clone();
    let y = f.params[1].0.clone();
    let var = |n: &str| Expr::Var(n.to_string());
    let substitutions: Vec<(Expr, String)> = vec![
        (var(&x), format!("({x}, {y}) -> {x}")),
        (var(&y), format!("({x}, {y}) -> {y}")),
        (
            f.body.substitute(&y, &var(&x)),
            format!("({x}, {y}) -> f({x}, {x})"),
        ),
        (
            f.body.substitute(&x, &var(&y)),
            format!("({x}, {y}) -> f({y}, {y})"),
        ),
        (
            swap_variables(&f.body, &x, &y),
            format!("({x}, {y}) -> f({y}, {x})"),
        ),
    ];
    let mut out = Vec::new();
    for (body, label) in substitutions {
        let mutated_f = FuncDef {
            params: f.params.clone(),
            return_type: f.return_type.clone(),
            body,
        };
        out = keep_if_clean(
            out,
            Mutant {
                graph: with_op(g, site, rebuild(mutated_f)),
                family: OperatorFamily::AggregationFunctionSubstitution,
                sites: vec![site.clone()],
                description: format!("{site}: substitute aggregation function {label}"),
            },
        );
    }
    Ok(out)
}

/// Swaps free occurrences of two variables in one pass.
fn swap_variables(e: &Expr, x: &str, y: &str) -> Expr {
    // go through a placeholder so the second rename does not capture
    // the result of the first
    let placeholder = format!("{x}__swap");
    e.substitute(x, &Expr::Var(placeholder.clone()))
        .substitute(y, &Expr::Var(x.to_string()))
        .substitute(&placeholder, &Expr::Var(y.to_string()))
}

/// The five mutants of a set-like site `op(d1, d2)`: the other two set
/// operators, the identity of each input dataset, and the same
/// operator with the inputs reversed.
pub fn mutate_set_like(g: &ProgramGraph, site: &NodeId) -> Result<Vec<Mutant>> {
    let Some(t) = g.transitions.get(site) else {
        return Ok(Vec::new());
    };
    let op = match &t.kind {
        TransitionKind::Transform(
            op @ (TransformOp::Union | TransformOp::Intersection | TransformOp::Subtract),
        ) => op.clone(),
        _ => return Ok(Vec::new()),
    };
    let others: Vec<TransformOp> = [
        TransformOp::Union,
        TransformOp::Intersection,
        TransformOp::Subtract,
    ]
    .into_iter()
    .filter(|o| *o != op)
    .collect();

    let mut out = Vec::new();
    for other in others {
        let label = other.kind_name();
        out = keep_if_clean(
            out,
            Mutant {
                graph: with_op(g, site, other),
                family: OperatorFamily::SetOperatorReplacement,
                sites: vec![site.clone()],
                description: format!("{site}: replace {} with {label}", op.kind_name()),
            },
        );
    }
    for position in [0usize, 1] {
        let kept = t.inputs[position].clone();
        let mut mutated = g.clone();
        let m = mutated.transitions.get_mut(site).unwrap();
        m.kind = TransitionKind::Transform(TransformOp::Identity);
        m.inputs = vec![kept.clone()];
        out = keep_if_clean(
            out,
            Mutant {
                graph: mutated,
                family: OperatorFamily::SetOperatorReplacement,
                sites: vec![site.clone()],
                description: format!(
                    "{site}: replace {} with the identity of `{kept}`",
                    op.kind_name()
                ),
            },
        );
    }
    let mut mutated = g.clone();
    let m = mutated.transitions.get_mut(site).unwrap();
    m.inputs.reverse();
    out = keep_if_clean(
        out,
        Mutant {
            graph: mutated,
            family: OperatorFamily::SetOperatorReplacement,
            sites: vec![site.clone()],
            description: format!("{site}: invert the input order of {}", op.kind_name()),
        },
    );
    Ok(out)
}

/// Extended operators for the remaining groups: filter predicates are
/// replaced by `true`, `false` and the negation; an endotyped mapping
/// function by the identity; join inputs are swapped where the types
/// permit; sort direction flags are flipped.
pub fn mutate_other(g: &ProgramGraph, site: &NodeId) -> Result<Vec<Mutant>> {
    let Some(t) = g.transitions.get(site) else {
        return Ok(Vec::new());
    };
    let TransitionKind::Transform(op) = &t.kind else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    match op {
        TransformOp::Filter(p) => {
            let candidates = [
                (Expr::LitBool(true), "always-true predicate".to_string()),
                (Expr::LitBool(false), "always-false predicate".to_string()),
                (
                    Expr::Unary(crate::expr::UnaryOp::Not, Box::new(p.body.clone())),
                    "negated predicate".to_string(),
                ),
            ];
            for (body, label) in candidates {
                if body == p.body {
                    continue;
                }
                let mutated_p = FuncDef {
                    params: p.params.clone(),
                    return_type: ElemType::Bool,
                    body,
                };
                out = keep_if_clean(
                    out,
                    Mutant {
                        graph: with_op(g, site, TransformOp::Filter(mutated_p)),
                        family: OperatorFamily::FilterPredicateSubstitution,
                        sites: vec![site.clone()],
                        description: format!("{site}: {label}"),
                    },
                );
            }
        }
        TransformOp::Map(f) => {
            let endotyped = f.params[0].1 == f.return_type;
            let already_identity = f.body == Expr::Var(f.params[0].0.clone());
            if endotyped && !already_identity {
                let identity = FuncDef {
                    params: f.params.clone(),
                    return_type: f.return_type.clone(),
                    body: Expr::Var(f.params[0].0.clone()),
                };
                out = keep_if_clean(
                    out,
                    Mutant {
                        graph: with_op(g, site, TransformOp::Map(identity)),
                        family: OperatorFamily::MappingFunctionSubstitution,
                        sites: vec![site.clone()],
                        description: format!("{site}: identity mapping function"),
                    },
                );
            }
        }
        TransformOp::InnerJoin
        | TransformOp::LeftOuterJoin
        | TransformOp::RightOuterJoin
        | TransformOp::FullOuterJoin => {
            let mut mutated = g.clone();
            mutated.transitions.get_mut(site).unwrap().inputs.reverse();
            out = keep_if_clean(
                out,
                Mutant {
                    graph: mutated,
                    family: OperatorFamily::JoinInputSwap,
                    sites: vec![site.clone()],
                    description: format!("{site}: swap the join inputs"),
                },
            );
        }
        TransformOp::OrderBy { descending } => {
            out = keep_if_clean(
                out,
                Mutant {
                    graph: with_op(
                        g,
                        site,
                        TransformOp::OrderBy {
                            descending: !descending,
                        },
                    ),
                    family: OperatorFamily::OrderFlagFlip,
                    sites: vec![site.clone()],
                    description: format!("{site}: flip the sort direction"),
                },
            );
        }
        TransformOp::OrderByKey { descending } => {
            out = keep_if_clean(
                out,
                Mutant {
                    graph: with_op(
                        g,
                        site,
                        TransformOp::OrderByKey {
                            descending: !descending,
                        },
                    ),
                    family: OperatorFamily::OrderFlagFlip,
                    sites: vec![site.clone()],
                    description: format!("{site}: flip the sort direction"),
                },
            );
        }
        _ => {}
    }
    Ok(out)
}
