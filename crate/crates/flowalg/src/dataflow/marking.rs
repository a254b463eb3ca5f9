//! The raw token game: enabling and firing of single transitions.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::{Marking, NodeId, ProgramGraph};

/// Transitions whose every input place holds at least as many tokens
/// as the transition consumes from it.
pub fn enabled_transitions(g: &ProgramGraph, m: &Marking) -> BTreeSet<NodeId> {
    g.transitions
        .values()
        .filter(|t| is_enabled(g, m, &t.id))
        .map(|t| t.id.clone())
        .collect()
}

pub(crate) fn is_enabled(g: &ProgramGraph, m: &Marking, t: &NodeId) -> bool {
    let Some(node) = g.transitions.get(t) else {
        return false;
    };
    let mut needed: Vec<(&NodeId, u32)> = Vec::new();
    for p in &node.inputs {
        match needed.iter_mut().find(|(q, _)| *q == p) {
            Some((_, n)) => *n += 1,
            None => needed.push((p, 1)),
        }
    }
    needed.into_iter().all(|(p, n)| m.tokens(p) >= n)
}

/// Fires one transition: consumes one token per input edge and
/// produces onto the output place one token per use of that place.
pub fn fire_transition(g: &ProgramGraph, m: &Marking, t: &NodeId) -> Result<Marking> {
    let node = g
        .transitions
        .get(t)
        .ok_or_else(|| Error::NotEnabled(t.to_string()))?;
    if !is_enabled(g, m, t) {
        return Err(Error::NotEnabled(t.to_string()));
    }
    let mut next = m.clone();
    for p in &node.inputs {
        let have = next.tokens(p);
        next.set(p, have - 1);
    }
    let produced = next.tokens(&node.output) + g.weight_into(&node.output);
    next.set(&node.output, produced);
    Ok(next)
}
