//! Property tests: the algebraic laws the model is built on.

use std::cmp::Ordering;

use proptest::prelude::*;

use flowalg::algebra;
use flowalg::dataset::{decode_value, encode_value};
use flowalg::expr::{parse_expr, print_expr, BinOp, Expr, FuncDef, UnaryOp};
use flowalg::transforms::{apply_iterate, StepFunction, StepOp, TransformOp};
use flowalg::value::{bag_union, canonical_compare, multiset_equal};
use flowalg::{Bag, ElemType, Error, Value};

fn int_bag() -> impl Strategy<Value = Bag> {
    prop::collection::vec(-20i64..20, 0..12)
        .prop_map(|v| Bag::from_values(v.into_iter().map(Value::Int).collect()))
}

fn keyed_bag() -> impl Strategy<Value = Bag> {
    prop::collection::vec((0i64..5, -9i64..9), 0..10).prop_map(|v| {
        Bag::from_values(
            v.into_iter()
                .map(|(k, x)| Value::pair(Value::Int(k), Value::Int(x)))
                .collect(),
        )
    })
}

/// Same-typed value triples across a few representative element types.
fn same_type_triple() -> impl Strategy<Value = (Value, Value, Value)> {
    let ints = (-9i64..9).prop_map(Value::Int).boxed();
    let strs = "[a-c]{0,3}".prop_map(Value::Str).boxed();
    let pairs = ((-4i64..4), "[a-b]{0,2}")
        .prop_map(|(i, s)| Value::pair(Value::Int(i), Value::Str(s)))
        .boxed();
    let bags = prop::collection::vec(-4i64..4, 0..4)
        .prop_map(|v| Value::Bag(Bag::from_values(v.into_iter().map(Value::Int).collect())))
        .boxed();
    prop_oneof![Just(ints), Just(strs), Just(pairs), Just(bags)]
        .prop_flat_map(|elem| (elem.clone(), elem.clone(), elem))
}

proptest! {
    #[test]
    fn union_is_associative_and_commutative_with_empty_neutral(
        x in int_bag(), y in int_bag(), z in int_bag()
    ) {
        let xy_z = bag_union(&bag_union(&x, &y).unwrap(), &z).unwrap();
        let x_yz = bag_union(&x, &bag_union(&y, &z).unwrap()).unwrap();
        prop_assert!(multiset_equal(&xy_z, &x_yz));

        let xy = bag_union(&x, &y).unwrap();
        let yx = bag_union(&y, &x).unwrap();
        prop_assert!(multiset_equal(&xy, &yx));
        prop_assert_eq!(xy.len(), x.len() + y.len());

        prop_assert!(multiset_equal(&bag_union(&x, &Bag::empty()).unwrap(), &x));
        prop_assert!(multiset_equal(&bag_union(&Bag::empty(), &x).unwrap(), &x));
    }

    #[test]
    fn canonical_compare_is_a_total_order((a, b, c) in same_type_triple()) {
        // reflexive equality
        prop_assert_eq!(canonical_compare(&a, &a).unwrap(), Ordering::Equal);
        // antisymmetric
        let ab = canonical_compare(&a, &b).unwrap();
        let ba = canonical_compare(&b, &a).unwrap();
        prop_assert_eq!(ab, ba.reverse());
        // transitive
        let bc = canonical_compare(&b, &c).unwrap();
        let ac = canonical_compare(&a, &c).unwrap();
        if ab != Ordering::Greater && bc != Ordering::Greater {
            prop_assert_ne!(ac, Ordering::Greater);
        }
    }

    #[test]
    fn json_round_trip((v, _, _) in same_type_triple()) {
        let j = encode_value(&v);
        prop_assert_eq!(decode_value(&j).unwrap(), v);
    }

    #[test]
    fn nested_json_round_trip(items in prop::collection::vec((0i64..9, "[a-z]{0,2}"), 0..5)) {
        let v = Value::Bag(Bag::from_values(
            items
                .into_iter()
                .map(|(i, s)| {
                    Value::pair(
                        Value::Int(i),
                        Value::List(vec![Value::Str(s), Value::Float(i as f64 / 2.0)]),
                    )
                })
                .collect(),
        ));
        prop_assert_eq!(decode_value(&encode_value(&v)).unwrap(), v);
    }

    #[test]
    fn printer_parser_round_trip(e in arb_expr()) {
        let printed = print_expr(&e);
        let parsed = parse_expr(&printed);
        prop_assert!(parsed.is_ok(), "`{}` failed to parse: {:?}", printed, parsed.err());
        prop_assert_eq!(parsed.unwrap(), e, "through `{}`", printed);
    }

    #[test]
    fn welltyped_evaluation_never_raises_type_errors(
        (ty, body) in arb_typed_expr(),
        a in -9i64..9,
        s in "[a-z]{0,4}",
    ) {
        let f = FuncDef {
            params: vec![
                ("a".to_string(), ElemType::Int),
                ("s".to_string(), ElemType::Str),
            ],
            return_type: ty.clone(),
            body,
        };
        // arity-2 functions must type check against their declaration
        prop_assert!(f.typecheck().is_ok(), "{}", f.to_source());
        match f.eval(&[Value::Int(a), Value::Str(s)]) {
            Ok(v) => prop_assert!(v.conforms(&ty), "{} produced {v}", f.to_source()),
            Err(e) => {
                let root = e.root();
                prop_assert!(
                    matches!(root, Error::DivisionByZero | Error::NonFinite),
                    "{} raised {root}",
                    f.to_source()
                );
            }
        }
    }

    #[test]
    fn flatmap_is_a_homomorphism(x in int_bag(), y in int_bag(), seed in 0u64..6) {
        let f = sample_flatmap_function(seed);
        let joined = algebra::flatmap(&f, &bag_union(&x, &y).unwrap()).unwrap();
        let split = bag_union(
            &algebra::flatmap(&f, &x).unwrap(),
            &algebra::flatmap(&f, &y).unwrap(),
        )
        .unwrap();
        prop_assert!(multiset_equal(&joined, &split));
        // and it annihilates the empty bag
        prop_assert!(algebra::flatmap(&f, &Bag::empty()).unwrap().is_empty());
    }

    #[test]
    fn groupby_keys_distinct_and_ungrouping_recovers_input(d in keyed_bag()) {
        let grouped = algebra::groupby(&d).unwrap();
        let mut keys: Vec<Value> = Vec::new();
        let mut recovered: Vec<Value> = Vec::new();
        for entry in grouped.iter() {
            let pair = entry.as_tuple().unwrap();
            prop_assert!(!keys.contains(&pair[0]), "duplicate key {}", pair[0]);
            keys.push(pair[0].clone());
            let group = pair[1].as_bag().unwrap();
            prop_assert!(!group.is_empty());
            for v in group.iter() {
                recovered.push(Value::pair(pair[0].clone(), v.clone()));
            }
        }
        prop_assert!(multiset_equal(&Bag::from_values(recovered), &d));
    }

    #[test]
    fn cogroup_against_empty_matches_groupby(d in keyed_bag()) {
        let cg = algebra::cogroup(&d, &Bag::empty()).unwrap();
        let gb = algebra::groupby(&d).unwrap();
        prop_assert_eq!(cg.len(), gb.len());
        for (centry, gentry) in cg.iter().zip(gb.iter()) {
            let cpair = centry.as_tuple().unwrap();
            let gpair = gentry.as_tuple().unwrap();
            prop_assert_eq!(&cpair[0], &gpair[0]);
            let sides = cpair[1].as_tuple().unwrap();
            prop_assert_eq!(&sides[0], &gpair[1]);
            prop_assert!(sides[1].as_bag().unwrap().is_empty());
        }
    }

    #[test]
    fn reduce_ignores_input_permutation(mut items in prop::collection::vec(-20i64..20, 1..10), rot in 0usize..10) {
        let f = FuncDef::parse("(x: Int, y: Int) -> Int => x + y").unwrap();
        let before = algebra::reduce(&f, &Bag::from_values(items.iter().copied().map(Value::Int).collect())).unwrap();
        let len = items.len();
        items.rotate_left(rot % len);
        items.reverse();
        let after = algebra::reduce(&f, &Bag::from_values(items.into_iter().map(Value::Int).collect())).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn repeat_is_iterated_composition(d in int_bag(), n in 0i64..=5) {
        let step = StepFunction::new(vec![StepOp {
            op: TransformOp::Map(FuncDef::parse("(x: Int) -> Int => x * 2 - 1").unwrap()),
            fixed: None,
        }]);
        let via_repeat = apply_iterate(&step, n, &Value::Bag(d.clone())).unwrap();
        let mut explicit = Value::Bag(d);
        for _ in 0..n {
            explicit = step.apply(&explicit).unwrap();
        }
        prop_assert_eq!(via_repeat, explicit);
    }

    #[test]
    fn filter_partitions_its_input(d in int_bag()) {
        let p = FuncDef::parse("(x: Int) -> Bool => x >= 3").unwrap();
        let not_p = FuncDef::parse("(x: Int) -> Bool => !(x >= 3)").unwrap();
        let kept = TransformOp::Filter(p).apply(&[&Value::Bag(d.clone())]).unwrap();
        let dropped = TransformOp::Filter(not_p).apply(&[&Value::Bag(d.clone())]).unwrap();
        let rejoined = bag_union(kept.as_bag().unwrap(), dropped.as_bag().unwrap()).unwrap();
        prop_assert!(multiset_equal(&rejoined, &d));
    }

    #[test]
    fn map_preserves_and_union_adds_cardinality(x in int_bag(), y in int_bag()) {
        let f = FuncDef::parse("(x: Int) -> Int => x * x").unwrap();
        let mapped = TransformOp::Map(f).apply(&[&Value::Bag(x.clone())]).unwrap();
        prop_assert_eq!(mapped.as_bag().unwrap().len(), x.len());
        let unioned = TransformOp::Union
            .apply(&[&Value::Bag(x.clone()), &Value::Bag(y.clone())])
            .unwrap();
        prop_assert_eq!(unioned.as_bag().unwrap().len(), x.len() + y.len());
    }

    #[test]
    fn distinct_is_idempotent_with_unit_multiplicities(d in int_bag()) {
        let once = TransformOp::Distinct.apply(&[&Value::Bag(d.clone())]).unwrap();
        let twice = TransformOp::Distinct.apply(&[&once]).unwrap();
        prop_assert_eq!(&once, &twice);
        let bag = once.as_bag().unwrap();
        for v in bag.iter() {
            prop_assert_eq!(bag.count(v), 1);
        }
        // support is preserved
        for v in d.iter() {
            prop_assert!(bag.count(v) == 1);
        }
    }

    #[test]
    fn subtract_and_intersection_partition_the_support(x in int_bag(), y in int_bag()) {
        let sub = TransformOp::Subtract
            .apply(&[&Value::Bag(x.clone()), &Value::Bag(y.clone())])
            .unwrap();
        let inter = TransformOp::Intersection
            .apply(&[&Value::Bag(x.clone()), &Value::Bag(y.clone())])
            .unwrap();
        let sub = sub.as_bag().unwrap();
        let inter = inter.as_bag().unwrap();
        for v in x.iter() {
            let in_sub = sub.count(v) > 0;
            let in_inter = inter.count(v) > 0;
            prop_assert!(in_sub ^ in_inter, "support must split exactly: {v}");
            // multiplicities follow the left operand
            let expected = x.count(v);
            prop_assert_eq!(if in_sub { sub.count(v) } else { inter.count(v) }, expected);
        }
        for v in sub.iter().chain(inter.iter()) {
            prop_assert!(x.count(v) > 0);
        }
    }

    #[test]
    fn order_by_reversal_consistency(d in int_bag()) {
        let asc = TransformOp::OrderBy { descending: false }
            .apply(&[&Value::Bag(d.clone())])
            .unwrap();
        let desc = TransformOp::OrderBy { descending: true }
            .apply(&[&Value::Bag(d.clone())])
            .unwrap();
        let Value::List(mut asc) = asc else { unreachable!() };
        let Value::List(desc) = desc else { unreachable!() };
        asc.reverse();
        prop_assert_eq!(asc, desc);
    }

    #[test]
    fn reduce_by_key_matches_its_defining_equation(d in keyed_bag()) {
        let f = FuncDef::parse("(x: Int, y: Int) -> Int => x + y").unwrap();
        let direct = TransformOp::ReduceByKey(f.clone())
            .apply(&[&Value::Bag(d.clone())])
            .unwrap();
        // flatmap (k, g) -> {{(k, reduce(f, g))}} over groupby(d)
        let grouped = algebra::groupby(&d).unwrap();
        let expected = algebra::flatmap_with(
            |kg| {
                let pair = kg.as_tuple()?;
                let reduced = algebra::reduce(&f, pair[1].as_bag()?)?;
                Ok(Bag::singleton(Value::pair(pair[0].clone(), reduced)))
            },
            &grouped,
        )
        .unwrap();
        prop_assert!(multiset_equal(direct.as_bag().unwrap(), &expected));
    }

    #[test]
    fn left_outer_join_restricted_to_matches_is_inner_join(x in keyed_bag(), y in keyed_bag()) {
        let left = TransformOp::LeftOuterJoin
            .apply(&[&Value::Bag(x.clone()), &Value::Bag(y.clone())])
            .unwrap();
        let inner = TransformOp::InnerJoin
            .apply(&[&Value::Bag(x), &Value::Bag(y)])
            .unwrap();
        // keep matched rows and flatten their singleton right bags
        let mut flattened = Vec::new();
        for entry in left.as_bag().unwrap().iter() {
            let pair = entry.as_tuple().unwrap();
            let inner_pair = pair[1].as_tuple().unwrap();
            let right = inner_pair[1].as_bag().unwrap();
            for r in right.iter() {
                flattened.push(Value::pair(
                    pair[0].clone(),
                    Value::pair(inner_pair[0].clone(), r.clone()),
                ));
            }
        }
        prop_assert!(multiset_equal(
            &Bag::from_values(flattened),
            inner.as_bag().unwrap()
        ));
    }
}

/// Closed flatmap functions drawn for the homomorphism law.
fn sample_flatmap_function(seed: u64) -> FuncDef {
    let sources = [
        "(x: Int) -> Bag<Int> => singleton(x)",
        "(x: Int) -> Bag<Int> => emptyBag",
        "(x: Int) -> Bag<Int> => if x > 0 then singleton(x) else emptyBag",
        "(x: Int) -> Bag<Int> => singleton(x * 2)",
        "(x: Int) -> Bag<Int> => bmap(u -> u + x, singleton(x))",
        "(x: Int) -> Bag<Int> => if x - x / 2 * 2 == 0 then singleton(x / 2) else singleton(x * 3)",
    ];
    let f = FuncDef::parse(sources[(seed as usize) % sources.len()]).unwrap();
    f.typecheck().unwrap();
    f
}

/// Arbitrary syntax trees for the printer/parser round trip. Variables
/// avoid keywords and builtin names; literals are non-negative so the
/// printer's output re-lexes to the same shape.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        "[a-z][0-9]?".prop_filter("keywords excluded", |s| !matches!(
            s.as_str(),
            "if" | "then" | "else" | "true" | "false" | "and" | "or"
        ))
        .prop_map(Expr::Var),
        (0i64..10_000).prop_map(Expr::LitInt),
        (0.0f64..1e6).prop_map(Expr::LitFloat),
        any::<bool>().prop_map(Expr::LitBool),
        "[ -~]{0,8}".prop_map(Expr::LitStr),
        Just(Expr::EmptyBag),
    ];
    leaf.prop_recursive(4, 48, 4, |inner| {
        let unop = prop_oneof![Just(UnaryOp::Not), Just(UnaryOp::Neg)];
        let binop = prop_oneof![
            Just(BinOp::Or),
            Just(BinOp::And),
            Just(BinOp::Eq),
            Just(BinOp::Ne),
            Just(BinOp::Lt),
            Just(BinOp::Le),
            Just(BinOp::Gt),
            Just(BinOp::Ge),
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
        ];
        prop_oneof![
            (unop, inner.clone()).prop_map(|(op, e)| Expr::Unary(op, Box::new(e))),
            (binop, inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| Expr::If(
                Box::new(c),
                Box::new(t),
                Box::new(e)
            )),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::TupleCtor),
            (inner.clone(), 1usize..4).prop_map(|(e, i)| Expr::Proj(Box::new(e), i)),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::StartsWith(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Contains(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Concat(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|e| Expr::Size(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Singleton(Box::new(e))),
            ("[a-z]", inner.clone(), inner).prop_map(|(v, body, bag)| Expr::BagMap {
                var: v,
                body: Box::new(body),
                bag: Box::new(bag),
            }),
        ]
    })
}

/// Well-typed terms over the fixed environment `a: Int, s: Str`.
fn arb_typed_expr() -> impl Strategy<Value = (ElemType, Expr)> {
    prop_oneof![
        typed_int(3).prop_map(|e| (ElemType::Int, e)),
        typed_bool(3).prop_map(|e| (ElemType::Bool, e)),
        typed_str(3).prop_map(|e| (ElemType::Str, e)),
        typed_float(3).prop_map(|e| (ElemType::Float, e)),
        typed_int_bag(3).prop_map(|e| (ElemType::bag(ElemType::Int), e)),
    ]
}

fn typed_int(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        (-50i64..50).prop_map(Expr::LitInt),
        Just(Expr::Var("a".to_string())),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let arith = prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div),
    ];
    prop_oneof![
        leaf,
        (arith, typed_int(depth - 1), typed_int(depth - 1))
            .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
        typed_int(depth - 1).prop_map(|e| Expr::Unary(UnaryOp::Neg, Box::new(e))),
        (typed_bool(depth - 1), typed_int(depth - 1), typed_int(depth - 1))
            .prop_map(|(c, t, e)| Expr::If(Box::new(c), Box::new(t), Box::new(e))),
        typed_int_bag(depth - 1).prop_map(|e| Expr::Size(Box::new(e))),
    ]
    .boxed()
}

fn typed_float(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = (0.0f64..100.0).prop_map(Expr::LitFloat);
    if depth == 0 {
        return leaf.boxed();
    }
    let arith = prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div),
    ];
    prop_oneof![
        leaf,
        (arith.clone(), typed_float(depth - 1), typed_float(depth - 1))
            .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
        // mixed arithmetic promotes
        (arith, typed_int(depth - 1), typed_float(depth - 1))
            .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
        (typed_bool(depth - 1), typed_float(depth - 1), typed_float(depth - 1))
            .prop_map(|(c, t, e)| Expr::If(Box::new(c), Box::new(t), Box::new(e))),
    ]
    .boxed()
}

fn typed_bool(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = any::<bool>().prop_map(Expr::LitBool);
    if depth == 0 {
        return leaf.boxed();
    }
    let cmp = prop_oneof![
        Just(BinOp::Eq),
        Just(BinOp::Ne),
        Just(BinOp::Lt),
        Just(BinOp::Le),
        Just(BinOp::Gt),
        Just(BinOp::Ge),
    ];
    let logic = prop_oneof![Just(BinOp::And), Just(BinOp::Or)];
    prop_oneof![
        leaf,
        (cmp, typed_int(depth - 1), typed_int(depth - 1))
            .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
        (logic, typed_bool(depth - 1), typed_bool(depth - 1))
            .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
        typed_bool(depth - 1).prop_map(|e| Expr::Unary(UnaryOp::Not, Box::new(e))),
        (typed_str(depth - 1), typed_str(depth - 1))
            .prop_map(|(a, b)| Expr::StartsWith(Box::new(a), Box::new(b))),
        (typed_str(depth - 1), typed_str(depth - 1))
            .prop_map(|(a, b)| Expr::Contains(Box::new(a), Box::new(b))),
    ]
    .boxed()
}

fn typed_str(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        "[a-z]{0,5}".prop_map(Expr::LitStr),
        Just(Expr::Var("s".to_string())),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![
        leaf,
        (typed_str(depth - 1), typed_str(depth - 1))
            .prop_map(|(a, b)| Expr::Concat(Box::new(a), Box::new(b))),
        (typed_bool(depth - 1), typed_str(depth - 1), typed_str(depth - 1))
            .prop_map(|(c, t, e)| Expr::If(Box::new(c), Box::new(t), Box::new(e))),
    ]
    .boxed()
}

fn typed_int_bag(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        Just(Expr::EmptyBag),
        typed_int(0).prop_map(|e| Expr::Singleton(Box::new(e))),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![
        leaf,
        typed_int(depth - 1).prop_map(|e| Expr::Singleton(Box::new(e))),
        // bmap binds `u` over a bag whose element type is statically
        // known (the checker rightly rejects arithmetic on the binder
        // of a bag that could only be empty)
        (typed_int(depth - 1), -5i64..5).prop_map(|(seed, k)| Expr::BagMap {
            var: "u".to_string(),
            body: Box::new(Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Var("u".to_string())),
                Box::new(Expr::LitInt(k)),
            )),
            bag: Box::new(Expr::Singleton(Box::new(seed))),
        }),
        (typed_bool(depth - 1), typed_int_bag(depth - 1), typed_int_bag(depth - 1))
            .prop_map(|(c, t, e)| Expr::If(Box::new(c), Box::new(t), Box::new(e))),
    ]
    .boxed()
}
