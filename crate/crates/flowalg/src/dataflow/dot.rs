//! Graphviz rendering: places as circles, transitions as filled bars,
//! edge weights labeled when greater than one, token counts of the
//! initial marking shown inside the places.

use std::fmt::Write;

use super::ProgramGraph;

/// Renders the net as deterministic Graphviz DOT text.
pub fn to_dot(g: &ProgramGraph) -> String {
    let m0 = g.initial_marking();
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(&g.name));
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [fontsize=10];");
    for place in g.places.values() {
        let tokens = m0.tokens(&place.id);
        let label = if tokens > 0 {
            format!("{}\\n{}", escape(place.id.as_str()), "\u{25cf}".repeat(tokens as usize))
        } else {
            escape(place.id.as_str())
        };
        let _ = writeln!(
            out,
            "  \"{}\" [shape=circle, label=\"{}\", xlabel=\"{}\"];",
            escape(place.id.as_str()),
            label,
            escape(&place.ty.to_string()),
        );
    }
    for t in g.transitions.values() {
        let mut name = t.id.to_string();
        if t.guard.is_some() {
            name.push_str(" [guarded]");
        }
        let _ = writeln!(
            out,
            "  \"{}\" [shape=box, style=filled, fillcolor=black, height=0.08, width=0.6, fixedsize=true, label=\"\", xlabel=\"{}\"];",
            escape(t.id.as_str()),
            escape(&name),
        );
    }
    for (from, to) in g.edges() {
        // weight is 1 on place->transition edges and the fan-out of the
        // target place on transition->place edges
        let weight = if g.places.contains_key(&to) {
            g.weight_into(&to)
        } else {
            1
        };
        if weight > 1 {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                escape(from.as_str()),
                escape(to.as_str()),
                weight
            );
        } else {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                escape(from.as_str()),
                escape(to.as_str())
            );
        }
    }
    let _ = writeln!(out, "}}");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
