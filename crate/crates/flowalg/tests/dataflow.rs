//! Program-level behavior: loading, validation, type checking, the
//! token game, execution, unfolding and DOT output.

use std::collections::BTreeMap;

use flowalg::dataflow::{
    enabled_transitions, execute, fire_transition, load_program, load_program_str,
    save_program_str, to_dot, typecheck_program, unfold, validate, ExecOptions, NodeId,
};
use flowalg::dataset::parse_dataset;
use flowalg::{Bag, ElemType, Error, Value};

fn programs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .canonicalize()
        .unwrap()
}

fn union_logs() -> flowalg::dataflow::ProgramGraph {
    load_program(programs_dir().join("union_logs.flow")).unwrap()
}

fn pagerank() -> flowalg::dataflow::ProgramGraph {
    load_program(programs_dir().join("pagerank.flow")).unwrap()
}

fn id(s: &str) -> NodeId {
    NodeId::from(s)
}

fn str_bag(items: &[&str]) -> Value {
    Value::Bag(Bag::from_values(
        items.iter().map(|s| Value::Str((*s).into())).collect(),
    ))
}

fn run(
    g: &flowalg::dataflow::ProgramGraph,
    inputs: &[(&str, Value)],
) -> flowalg::dataflow::ExecOutcome {
    let bindings: BTreeMap<NodeId, Value> =
        inputs.iter().map(|(k, v)| (id(k), v.clone())).collect();
    execute(g, &bindings, &ExecOptions::default()).unwrap()
}

fn pagerank_links() -> Value {
    let text = std::fs::read_to_string(programs_dir().join("data/pagerank_links.json")).unwrap();
    parse_dataset(&text, &"Bag<Tuple<Str, Bag<Str>>>".parse().unwrap()).unwrap()
}

/// Markings of different graphs share only their marked places.
fn marked(m: &flowalg::dataflow::Marking) -> BTreeMap<NodeId, u32> {
    m.0.iter()
        .filter(|(_, n)| **n > 0)
        .map(|(p, n)| (p.clone(), *n))
        .collect()
}

#[test]
fn union_logs_structure_matches_the_worked_example() {
    let g = union_logs();
    assert_eq!(g.places.len(), 5);
    assert_eq!(g.transitions.len(), 3);
    assert_eq!(g.edges().len(), 7);
    assert!(validate(&g).is_empty());

    let m0 = g.initial_marking();
    assert_eq!(m0.tokens(&id("d1")), 1);
    assert_eq!(m0.tokens(&id("d2")), 1);
    for p in ["d3", "d4", "d5"] {
        assert_eq!(m0.tokens(&id(p)), 0);
    }

    // all five places are Bag<Str>
    let types = typecheck_program(&g).unwrap();
    for ty in types.values() {
        assert_eq!(*ty, "Bag<Str>".parse::<ElemType>().unwrap());
    }
}

#[test]
fn non_bipartite_edge_is_diagnosed() {
    let mut g = union_logs();
    // make t2 read from transition t1 instead of a place
    let t2 = g.transitions.get_mut(&id("t2")).unwrap();
    t2.inputs = vec![id("t1")];
    let diags = validate(&g);
    assert!(
        diags.iter().any(|d| d.message.contains("not bipartite")),
        "{diags:?}"
    );
}

#[test]
fn loop_missing_end_transition_is_diagnosed() {
    let mut g = pagerank();
    g.transitions.remove(&id("loop1_end"));
    let diags = validate(&g);
    assert!(
        diags
            .iter()
            .any(|d| d.message.contains("malformed iterative subnet")),
        "{diags:?}"
    );
}

#[test]
fn programs_without_inputs_or_outputs_are_diagnosed() {
    let mut g = union_logs();
    for p in ["d1", "d2"] {
        g.places.get_mut(&id(p)).unwrap().role = flowalg::dataflow::PlaceRole::Intermediate;
    }
    let diags = validate(&g);
    assert!(
        diags.iter().any(|d| d.message.contains("no input dataset")),
        "{diags:?}"
    );

    let mut g = union_logs();
    g.places.get_mut(&id("d5")).unwrap().role = flowalg::dataflow::PlaceRole::Intermediate;
    let diags = validate(&g);
    assert!(
        diags.iter().any(|d| d.message.contains("no output dataset")),
        "{diags:?}"
    );
}

#[test]
fn typecheck_rejects_mixed_union() {
    let text = r#"{
      "name": "bad",
      "datasets": [
        {"id": "a", "type": "Bag<Int>", "role": "input"},
        {"id": "b", "type": "Bag<Str>", "role": "input"},
        {"id": "c", "type": "Bag<Int>", "role": "output"}
      ],
      "transformations": [
        {"id": "u", "kind": "union", "inputs": ["a", "b"], "output": "c"}
      ]
    }"#;
    let g = load_program_str(text).unwrap();
    assert!(validate(&g).is_empty());
    let diags = typecheck_program(&g).unwrap_err();
    assert_eq!(diags[0].node, Some(id("u")));
}

#[test]
fn pagerank_types_propagate() {
    let g = pagerank();
    assert!(validate(&g).is_empty());
    let types = typecheck_program(&g).unwrap();
    assert_eq!(
        types[&id("links_ranks")],
        "Bag<Tuple<Str, Tuple<Bag<Str>, Float>>>".parse().unwrap()
    );
    assert_eq!(
        types[&id("ranksN")],
        "Bag<Tuple<Str, Float>>".parse().unwrap()
    );
}

#[test]
fn double_use_input_gets_two_tokens() {
    let text = r#"{
      "name": "two_uses",
      "datasets": [
        {"id": "a", "type": "Bag<Tuple<Int, Int>>", "role": "input"},
        {"id": "b", "type": "Bag<Tuple<Int, Tuple<Int, Int>>>", "role": "output"}
      ],
      "transformations": [
        {"id": "selfjoin", "kind": "innerJoin", "inputs": ["a", "a"], "output": "b"}
      ]
    }"#;
    let g = load_program_str(text).unwrap();
    assert!(validate(&g).is_empty());
    assert_eq!(g.initial_marking().tokens(&id("a")), 2);

    // the self-join consumes both tokens in a single firing
    let data = parse_dataset(
        "[{\"tuple\": [1, 10]}, {\"tuple\": [1, 20]}]",
        &"Bag<Tuple<Int, Int>>".parse().unwrap(),
    )
    .unwrap();
    let outcome = run(&g, &[("a", data)]);
    assert_eq!(outcome.outputs[&id("b")].as_bag().unwrap().len(), 4);
    assert_eq!(outcome.final_marking.tokens(&id("a")), 0);
}

#[test]
fn token_game_on_union_logs() {
    let g = union_logs();
    let m0 = g.initial_marking();

    let enabled = enabled_transitions(&g, &m0);
    assert_eq!(enabled.into_iter().collect::<Vec<_>>(), vec![id("t1")]);

    let m1 = fire_transition(&g, &m0, &id("t1")).unwrap();
    assert_eq!(m1.tokens(&id("d1")), 0);
    assert_eq!(m1.tokens(&id("d3")), 1);
    let enabled = enabled_transitions(&g, &m1);
    assert_eq!(enabled.into_iter().collect::<Vec<_>>(), vec![id("t2")]);

    // refiring without tokens is rejected
    assert!(matches!(
        fire_transition(&g, &m1, &id("t1")),
        Err(Error::NotEnabled(_))
    ));

    // nothing is enabled on an empty marking
    let empty = flowalg::dataflow::Marking(Default::default());
    assert!(enabled_transitions(&g, &empty).is_empty());
}

#[test]
fn fan_out_place_receives_weighted_tokens() {
    let text = r#"{
      "name": "fanout",
      "datasets": [
        {"id": "a", "type": "Bag<Int>", "role": "input"},
        {"id": "b", "type": "Bag<Int>", "role": "intermediate"},
        {"id": "c", "type": "Bag<Int>", "role": "output"}
      ],
      "transformations": [
        {"id": "t_in", "kind": "distinct", "inputs": ["a"], "output": "b"},
        {"id": "t_out", "kind": "union", "inputs": ["b", "b"], "output": "c"}
      ]
    }"#;
    let g = load_program_str(text).unwrap();
    assert!(validate(&g).is_empty());
    let m1 = fire_transition(&g, &g.initial_marking(), &id("t_in")).unwrap();
    assert_eq!(m1.tokens(&id("b")), 2);
}

#[test]
fn executes_union_logs_end_to_end() {
    let g = union_logs();
    let outcome = run(
        &g,
        &[
            ("d1", str_bag(&["host a bytes", "x"])),
            ("d2", str_bag(&["x", "y"])),
        ],
    );
    assert_eq!(outcome.outputs[&id("d5")], str_bag(&["x", "y"]));
    // quiescence: the single token sits on the output place
    assert_eq!(outcome.final_marking.tokens(&id("d5")), 1);
    for p in ["d1", "d2", "d3", "d4"] {
        assert_eq!(outcome.final_marking.tokens(&id(p)), 0);
    }
    assert_eq!(outcome.trace.len(), 3);
}

#[test]
fn executes_single_identity_program() {
    let text = r#"{
      "name": "pass",
      "datasets": [
        {"id": "in", "type": "Bag<Int>", "role": "input"},
        {"id": "out", "type": "Bag<Int>", "role": "output"}
      ],
      "transformations": [
        {"id": "t", "kind": "identity", "inputs": ["in"], "output": "out"}
      ]
    }"#;
    let g = load_program_str(text).unwrap();
    let data = parse_dataset("[3, 1, 2]", &"Bag<Int>".parse().unwrap()).unwrap();
    let outcome = run(&g, &[("in", data.clone())]);
    assert_eq!(outcome.outputs[&id("out")], data);
}

#[test]
fn execute_reports_missing_inputs_and_bad_types() {
    let g = union_logs();
    let err = execute(&g, &BTreeMap::new(), &ExecOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidProgram(_)));

    let mut bindings = BTreeMap::new();
    bindings.insert(id("d1"), str_bag(&["x"]));
    bindings.insert(
        id("d2"),
        Value::Bag(Bag::singleton(Value::Int(3))),
    );
    let err = execute(&g, &bindings, &ExecOptions::default()).unwrap_err();
    assert!(matches!(err, Error::TypeMismatch(_)));
}

#[test]
fn runtime_errors_carry_transition_and_iteration() {
    let text = r#"{
      "name": "div",
      "datasets": [
        {"id": "in", "type": "Bag<Int>", "role": "input"},
        {"id": "step_in", "type": "Bag<Int>", "role": "intermediate"},
        {"id": "step_out", "type": "Bag<Int>", "role": "intermediate"},
        {"id": "out", "type": "Bag<Int>", "role": "output"}
      ],
      "transformations": [
        {"id": "t_dec", "kind": "map", "udf": "(x: Int) -> Int => 6 / x - 1", "inputs": ["step_in"], "output": "step_out"}
      ],
      "loops": [
        {"id": "L", "entry": "in", "exit": "out",
         "bodyPlaces": ["step_in", "step_out"], "bodyTransitions": ["t_dec"], "n": 9}
      ]
    }"#;
    // 2 -> 6/2-1 = 2, wait: start from 3: 6/3-1=1, then 6/1-1=5, 6/5-1=0, then 6/0 fails
    let g = load_program_str(text).unwrap();
    let data = parse_dataset("[3]", &"Bag<Int>".parse().unwrap()).unwrap();
    let err = execute(
        &g,
        &[(id("in"), data)].into_iter().collect(),
        &ExecOptions::default(),
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("iteration 4"), "{msg}");
    assert!(msg.contains("t_dec"), "{msg}");
    assert!(matches!(err.root(), Error::DivisionByZero));
}

#[test]
fn pagerank_looped_equals_unfolded() {
    let g = pagerank();
    let links = pagerank_links();

    let unfolded = unfold(&g, &BTreeMap::new()).unwrap();
    assert!(unfolded.loops.is_empty());
    assert_eq!(unfolded.transitions.len(), 16); // 1 + 5 copies x 3
    assert!(unfolded
        .transitions
        .values()
        .all(|t| !t.is_iter_control()));
    assert!(validate(&unfolded).is_empty());

    let a = run(&g, &[("links", links.clone())]);
    let b = run(&unfolded, &[("links", links.clone())]);
    assert_eq!(a.outputs[&id("ranksN")], b.outputs[&id("ranksN")]);
    assert_eq!(marked(&a.final_marking), marked(&b.final_marking));
}

#[test]
fn unfold_zero_iterations_fuses_entry_and_exit() {
    let g = pagerank();
    let overrides: BTreeMap<NodeId, i64> = [(id("loop1"), 0)].into_iter().collect();
    let unfolded = unfold(&g, &overrides).unwrap();
    // the loop body is gone: only the rank-initializing map remains,
    // and ranks0 has become the output place
    assert_eq!(unfolded.transitions.len(), 1);
    assert!(validate(&unfolded).is_empty());

    let links = pagerank_links();
    let looped = execute(
        &g,
        &[(id("links"), links.clone())].into_iter().collect(),
        &ExecOptions {
            loop_overrides: [(id("loop1"), 0)].into_iter().collect(),
            ..Default::default()
        },
    )
    .unwrap();
    let flat = run(&unfolded, &[("links", links)]);
    let looped_out = looped.outputs.values().next().unwrap();
    let flat_out = flat.outputs.values().next().unwrap();
    assert_eq!(looped_out, flat_out);
}

#[test]
fn unfold_rejects_negative_iterations() {
    let g = pagerank();
    let overrides: BTreeMap<NodeId, i64> = [(id("loop1"), -2)].into_iter().collect();
    assert!(matches!(
        unfold(&g, &overrides),
        Err(Error::NegativeIterations(-2))
    ));
}

fn conditional_growth_program() -> flowalg::dataflow::ProgramGraph {
    // the loop body unions a constant {{0}} into the dataset, growing
    // it by one element per iteration; the predicate stops at size 4
    let text = r#"{
      "name": "grow",
      "datasets": [
        {"id": "seed", "type": "Bag<Int>", "role": "input"},
        {"id": "zero", "type": "Bag<Int>", "role": "input"},
        {"id": "grow_in", "type": "Bag<Int>", "role": "intermediate"},
        {"id": "grow_out", "type": "Bag<Int>", "role": "intermediate"},
        {"id": "result", "type": "Bag<Int>", "role": "output"}
      ],
      "transformations": [
        {"id": "widen", "kind": "union", "inputs": ["zero", "grow_in"], "output": "grow_out"}
      ],
      "loops": [
        {"id": "L", "entry": "seed", "exit": "result",
         "bodyPlaces": ["grow_in", "grow_out"], "bodyTransitions": ["widen"],
         "n": 10,
         "predicate": "(d: Bag<Int>) -> Bool => size(d) < 4"}
      ]
    }"#;
    load_program_str(text).unwrap()
}

#[test]
fn conditional_loop_execution_matches_unfolding() {
    let g = conditional_growth_program();
    assert!(validate(&g).is_empty());
    typecheck_program(&g).unwrap();

    let seed = parse_dataset("[1]", &"Bag<Int>".parse().unwrap()).unwrap();
    let zero = parse_dataset("[0]", &"Bag<Int>".parse().unwrap()).unwrap();

    let looped = run(&g, &[("seed", seed.clone()), ("zero", zero.clone())]);
    assert_eq!(looped.outputs[&id("result")].as_bag().unwrap().len(), 4);

    let unfolded = unfold(&g, &BTreeMap::new()).unwrap();
    assert!(validate(&unfolded).is_empty());
    let flat = run(&unfolded, &[("seed", seed), ("zero", zero)]);
    assert_eq!(looped.outputs[&id("result")], flat.outputs[&id("result")]);
    assert_eq!(marked(&looped.final_marking), marked(&flat.final_marking));
}

#[test]
fn conditional_loop_that_never_runs_passes_data_through() {
    let g = conditional_growth_program();
    let seed = parse_dataset("[1, 2, 3, 4, 5]", &"Bag<Int>".parse().unwrap()).unwrap();
    let zero = parse_dataset("[0]", &"Bag<Int>".parse().unwrap()).unwrap();
    let looped = run(&g, &[("seed", seed.clone()), ("zero", zero.clone())]);
    assert_eq!(looped.outputs[&id("result")], seed);

    let unfolded = unfold(&g, &BTreeMap::new()).unwrap();
    let flat = run(&unfolded, &[("seed", seed.clone()), ("zero", zero)]);
    assert_eq!(flat.outputs[&id("result")], seed);
}

#[test]
fn seeded_schedules_reach_identical_results() {
    let g = union_logs();
    let inputs: BTreeMap<NodeId, Value> = [
        (id("d1"), str_bag(&["host a bytes", "x"])),
        (id("d2"), str_bag(&["x", "y"])),
    ]
    .into_iter()
    .collect();
    let reference = execute(&g, &inputs, &ExecOptions::default()).unwrap();
    for seed in 0..20 {
        let shuffled = execute(
            &g,
            &inputs,
            &ExecOptions {
                seed: Some(seed),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(shuffled.outputs, reference.outputs);
        assert_eq!(shuffled.final_marking, reference.final_marking);
    }
}

#[test]
fn dot_output_shape() {
    let g = union_logs();
    let dot = to_dot(&g);
    assert_eq!(dot.matches("shape=circle").count(), 5);
    assert_eq!(dot.matches("shape=box").count(), 3);
    assert_eq!(dot.matches(" -> ").count(), 7);
    // the two marked input places show their token
    assert_eq!(dot.matches('\u{25cf}').count(), 2);

    // an unfolded pagerank renders with no loop-back edge
    let unfolded = unfold(&pagerank(), &BTreeMap::new()).unwrap();
    let dot = to_dot(&unfolded);
    assert!(!dot.contains("loop1_iter"));
}

#[test]
fn save_load_round_trip() {
    for g in [union_logs(), pagerank(), conditional_growth_program()] {
        let text = save_program_str(&g).unwrap();
        let again = load_program_str(&text).unwrap();
        assert_eq!(g, again);
    }
    // an unfolded program (guards included) also survives the trip
    let unfolded = unfold(&conditional_growth_program(), &BTreeMap::new()).unwrap();
    let text = save_program_str(&unfolded).unwrap();
    let again = load_program_str(&text).unwrap();
    assert_eq!(unfolded, again);
}

#[test]
fn run_on_program_and_its_unfolding_write_identical_datasets() {
    let g = pagerank();
    let unfolded = unfold(&g, &BTreeMap::new()).unwrap();
    let links = pagerank_links();
    let a = run(&g, &[("links", links.clone())]);
    let b = run(&unfolded, &[("links", links)]);
    let da = flowalg::dataset::write_dataset(&a.outputs[&id("ranksN")]).unwrap();
    let db = flowalg::dataset::write_dataset(&b.outputs[&id("ranksN")]).unwrap();
    assert_eq!(da, db);
}

#[test]
fn typecheck_is_idempotent_and_stable_under_renaming() {
    let g = pagerank();
    let first = typecheck_program(&g).unwrap();
    let second = typecheck_program(&g).unwrap();
    assert_eq!(first, second);

    // consistently renaming every place must not change the verdict
    let rename = |p: &NodeId| NodeId::from(format!("x_{p}").as_str());
    let mut renamed = g.clone();
    renamed.places = g
        .places
        .values()
        .map(|p| {
            let mut p = p.clone();
            p.id = rename(&p.id);
            (p.id.clone(), p)
        })
        .collect();
    for t in renamed.transitions.values_mut() {
        t.inputs = t.inputs.iter().map(rename).collect();
        t.output = rename(&t.output);
    }
    for l in renamed.loops.iter_mut() {
        l.entry = rename(&l.entry);
        l.exit = rename(&l.exit);
        l.body_places = l.body_places.iter().map(rename).collect();
    }
    assert!(validate(&renamed).is_empty());
    let types = typecheck_program(&renamed).unwrap();
    for (place, ty) in &first {
        assert_eq!(types[&rename(place)], *ty);
    }
}

#[test]
fn noncommutative_reduce_warns_but_runs() {
    let text = r#"{
      "name": "warny",
      "datasets": [
        {"id": "in", "type": "Bag<Int>", "role": "input"},
        {"id": "out", "type": "Bag<Int>", "role": "output"}
      ],
      "transformations": [
        {"id": "r", "kind": "reduce", "udf": "(x: Int, y: Int) -> Int => x - y", "inputs": ["in"], "output": "out"}
      ]
    }"#;
    let g = load_program_str(text).unwrap();
    let data = parse_dataset("[5, 1, 2]", &"Bag<Int>".parse().unwrap()).unwrap();
    let outcome = run(&g, &[("in", data)]);
    assert!(!outcome.warnings.is_empty());
    assert!(outcome.warnings[0].contains("commutative"), "{:?}", outcome.warnings);
}
