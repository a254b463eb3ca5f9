//! Mutation testing over program graphs: derive single-fault variants
//! of a program, run a test suite against every variant, and score the
//! suite by the fraction of variants it distinguishes from the
//! original.

mod analysis;
mod operators;

pub use analysis::{
    load_test_suite, run_analysis, AnalysisOptions, MutantOutcome, MutantStatus, MutationReport,
    TestCase,
};
pub use operators::{
    mutate_aggregation, mutate_dataflow, mutate_other, mutate_set_like,
};

use serde::Serialize;

use crate::dataflow::{typecheck_program, validate, NodeId, ProgramGraph};
use crate::error::{Error, Result};

/// The mutation operator families. The dataflow family rewires the
/// graph; the transformation families rewrite one transformation's
/// operation or parameter function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorFamily {
    TransformationReplacement,
    TransformationsSwap,
    TransformationDeletion,
    AggregationFunctionSubstitution,
    SetOperatorReplacement,
    JoinInputSwap,
    OrderFlagFlip,
    FilterPredicateSubstitution,
    MappingFunctionSubstitution,
}

impl OperatorFamily {
    pub fn name(self) -> &'static str {
        match self {
            OperatorFamily::TransformationReplacement => "transformation-replacement",
            OperatorFamily::TransformationsSwap => "transformations-swap",
            OperatorFamily::TransformationDeletion => "transformation-deletion",
            OperatorFamily::AggregationFunctionSubstitution => "aggregation-function-substitution",
            OperatorFamily::SetOperatorReplacement => "set-operator-replacement",
            OperatorFamily::JoinInputSwap => "join-input-swap",
            OperatorFamily::OrderFlagFlip => "order-flag-flip",
            OperatorFamily::FilterPredicateSubstitution => "filter-predicate-substitution",
            OperatorFamily::MappingFunctionSubstitution => "mapping-function-substitution",
        }
    }

    /// True for operators that extend the established catalog beyond
    /// the aggregation and set substitution groups; reports flag them.
    pub fn is_extended(self) -> bool {
        matches!(
            self,
            OperatorFamily::JoinInputSwap
                | OperatorFamily::OrderFlagFlip
                | OperatorFamily::FilterPredicateSubstitution
                | OperatorFamily::MappingFunctionSubstitution
        )
    }
}

/// A program variant produced by exactly one operator application.
#[derive(Debug, Clone)]
pub struct Mutant {
    pub graph: ProgramGraph,
    pub family: OperatorFamily,
    /// The transition(s) the operator touched.
    pub sites: Vec<NodeId>,
    pub description: String,
}

/// Generates every mutant of the program, deterministically: the
/// dataflow family first (replacement, swap, deletion), then the
/// per-transition families in transition-id order. Every returned
/// mutant validates and type checks.
pub fn generate_mutants(g: &ProgramGraph) -> Result<Vec<Mutant>> {
    ensure_clean(g)?;
    let mut out = mutate_dataflow(g)?;
    for id in g.transitions.keys() {
        out.extend(mutate_aggregation(g, id)?);
        out.extend(mutate_set_like(g, id)?);
        out.extend(mutate_other(g, id)?);
    }
    debug_assert!(out
        .iter()
        .all(|m| validate(&m.graph).is_empty() && typecheck_program(&m.graph).is_ok()));
    Ok(out)
}

fn ensure_clean(g: &ProgramGraph) -> Result<()> {
    let diags = validate(g);
    if let Some(first) = diags.first() {
        return Err(Error::InvalidProgram(first.to_string()));
    }
    if let Err(diags) = typecheck_program(g) {
        return Err(Error::InvalidProgram(diags[0].to_string()));
    }
    Ok(())
}
