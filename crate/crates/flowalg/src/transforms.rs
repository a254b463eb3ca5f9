//! The transformation catalog. Every transformation is a thin equation
//! over the [`crate::algebra`] kernel: `map` wraps each image in a
//! singleton bag, `filter` keeps or drops through an `if`, `distinct`
//! is a group-by over self-keyed pairs, the joins are a cogroup
//! followed by nested flatmaps, and so on. Keeping the equations
//! literal is the point — the executable behavior *is* the definition.

use crate::algebra::{
    self, cogroup, flatmap, flatmap_with, groupby, quantify_with, repeat, Quantifier,
};
use crate::error::{Error, Result};
use crate::expr::FuncDef;
use crate::types::ElemType;
use crate::value::{bag_union, Bag, Value};

/// A transformation: its operation plus the parameters that
/// characterize it (user functions, sort direction).
#[derive(Debug, Clone, PartialEq)]
pub enum TransformOp {
    Map(FuncDef),
    FlatMap(FuncDef),
    Filter(FuncDef),
    GroupBy(FuncDef),
    GroupByKey,
    Union,
    Intersection,
    Subtract,
    Distinct,
    Reduce(FuncDef),
    ReduceByKey(FuncDef),
    InnerJoin,
    LeftOuterJoin,
    RightOuterJoin,
    FullOuterJoin,
    OrderBy { descending: bool },
    OrderByKey { descending: bool },
    /// Passes its dataset through unchanged. Used by iteration control
    /// and by the deletion mutation operator.
    Identity,
}

impl TransformOp {
    /// Number of input datasets the operation takes.
    pub fn arity(&self) -> usize {
        match self {
            TransformOp::Union
            | TransformOp::Intersection
            | TransformOp::Subtract
            | TransformOp::InnerJoin
            | TransformOp::LeftOuterJoin
            | TransformOp::RightOuterJoin
            | TransformOp::FullOuterJoin => 2,
            _ => 1,
        }
    }

    /// The operation name as written in program files.
    pub fn kind_name(&self) -> &'static str {
        match self {
            TransformOp::Map(_) => "map",
            TransformOp::FlatMap(_) => "flatMap",
            TransformOp::Filter(_) => "filter",
            TransformOp::GroupBy(_) => "groupBy",
            TransformOp::GroupByKey => "groupByKey",
            TransformOp::Union => "union",
            TransformOp::Intersection => "intersection",
            TransformOp::Subtract => "subtract",
            TransformOp::Distinct => "distinct",
            TransformOp::Reduce(_) => "reduce",
            TransformOp::ReduceByKey(_) => "reduceByKey",
            TransformOp::InnerJoin => "innerJoin",
            TransformOp::LeftOuterJoin => "leftOuterJoin",
            TransformOp::RightOuterJoin => "rightOuterJoin",
            TransformOp::FullOuterJoin => "fullOuterJoin",
            TransformOp::OrderBy { .. } => "orderBy",
            TransformOp::OrderByKey { .. } => "orderByKey",
            TransformOp::Identity => "identity",
        }
    }

    /// The user function parameter, if the operation takes one.
    pub fn udf(&self) -> Option<&FuncDef> {
        match self {
            TransformOp::Map(f)
            | TransformOp::FlatMap(f)
            | TransformOp::Filter(f)
            | TransformOp::GroupBy(f)
            | TransformOp::Reduce(f)
            | TransformOp::ReduceByKey(f) => Some(f),
            _ => None,
        }
    }

    /// Checks the operation against its input dataset types and
    /// returns the output dataset type. This is the signature schema
    /// every program-level type check goes through.
    pub fn output_type(&self, inputs: &[ElemType]) -> Result<ElemType> {
        if inputs.len() != self.arity() {
            return Err(Error::Arity(format!(
                "{} takes {} input(s), got {}",
                self.kind_name(),
                self.arity(),
                inputs.len()
            )));
        }
        match self {
            TransformOp::Identity => Ok(inputs[0].clone()),
            TransformOp::OrderBy { .. } => {
                let elem = bag_elem(&inputs[0], self.kind_name())?;
                Ok(ElemType::list(elem.clone()))
            }
            TransformOp::OrderByKey { .. } => {
                let (k, v) = keyed_elem(&inputs[0], self.kind_name())?;
                Ok(ElemType::list(ElemType::pair(k.clone(), v.clone())))
            }
            TransformOp::Map(f) => {
                let elem = bag_elem(&inputs[0], self.kind_name())?;
                check_unary_udf(f, elem, self.kind_name())?;
                Ok(ElemType::bag(f.return_type.clone()))
            }
            TransformOp::FlatMap(f) => {
                let elem = bag_elem(&inputs[0], self.kind_name())?;
                check_unary_udf(f, elem, self.kind_name())?;
                match &f.return_type {
                    ElemType::Bag(_) => Ok(f.return_type.clone()),
                    other => Err(Error::Type(format!(
                        "flatMap function must return a bag, declares {other}"
                    ))),
                }
            }
            TransformOp::Filter(p) => {
                let elem = bag_elem(&inputs[0], self.kind_name())?;
                check_unary_udf(p, elem, self.kind_name())?;
                if p.return_type != ElemType::Bool {
                    return Err(Error::Type(format!(
                        "filter predicate must return Bool, declares {}",
                        p.return_type
                    )));
                }
                Ok(inputs[0].clone())
            }
            TransformOp::GroupBy(k) => {
                let elem = bag_elem(&inputs[0], self.kind_name())?;
                check_unary_udf(k, elem, self.kind_name())?;
                Ok(ElemType::bag(ElemType::pair(
                    k.return_type.clone(),
                    ElemType::bag(elem.clone()),
                )))
            }
            TransformOp::GroupByKey => {
                let (k, v) = keyed_elem(&inputs[0], self.kind_name())?;
                Ok(ElemType::bag(ElemType::pair(
                    k.clone(),
                    ElemType::bag(v.clone()),
                )))
            }
            TransformOp::Union | TransformOp::Intersection | TransformOp::Subtract => {
                bag_elem(&inputs[0], self.kind_name())?;
                if inputs[0] != inputs[1] {
                    return Err(Error::TypeMismatch(format!(
                        "{} needs equal input types, got {} and {}",
                        self.kind_name(),
                        inputs[0],
                        inputs[1]
                    )));
                }
                Ok(inputs[0].clone())
            }
            TransformOp::Distinct => {
                bag_elem(&inputs[0], self.kind_name())?;
                Ok(inputs[0].clone())
            }
            TransformOp::Reduce(f) => {
                let elem = bag_elem(&inputs[0], self.kind_name())?;
                check_binary_udf(f, elem, self.kind_name())?;
                Ok(inputs[0].clone())
            }
            TransformOp::ReduceByKey(f) => {
                let (_, v) = keyed_elem(&inputs[0], self.kind_name())?;
                check_binary_udf(f, v, self.kind_name())?;
                Ok(inputs[0].clone())
            }
            TransformOp::InnerJoin
            | TransformOp::LeftOuterJoin
            | TransformOp::RightOuterJoin
            | TransformOp::FullOuterJoin => {
                let (kx, a) = keyed_elem(&inputs[0], self.kind_name())?;
                let (ky, b) = keyed_elem(&inputs[1], self.kind_name())?;
                if kx != ky {
                    return Err(Error::TypeMismatch(format!(
                        "join key types disagree: {kx} vs {ky}"
                    )));
                }
                let value_part = match self {
                    TransformOp::InnerJoin => ElemType::pair(a.clone(), b.clone()),
                    TransformOp::LeftOuterJoin => {
                        ElemType::pair(a.clone(), ElemType::bag(b.clone()))
                    }
                    TransformOp::RightOuterJoin => {
                        ElemType::pair(ElemType::bag(a.clone()), b.clone())
                    }
                    _ => ElemType::pair(ElemType::bag(a.clone()), ElemType::bag(b.clone())),
                };
                Ok(ElemType::bag(ElemType::pair(kx.clone(), value_part)))
            }
        }
    }

    /// Applies the transformation to its input datasets.
    pub fn apply(&self, inputs: &[&Value]) -> Result<Value> {
        if inputs.len() != self.arity() {
            return Err(Error::Arity(format!(
                "{} takes {} input(s), got {}",
                self.kind_name(),
                self.arity(),
                inputs.len()
            )));
        }
        match self {
            TransformOp::Identity => Ok(inputs[0].clone()),
            TransformOp::Map(f) => {
                let d = inputs[0].as_bag()?;
                let out =
                    flatmap_with(|x| Ok(Bag::singleton(f.eval(std::slice::from_ref(x))?)), d)?;
                Ok(Value::Bag(out))
            }
            TransformOp::FlatMap(f) => Ok(Value::Bag(flatmap(f, inputs[0].as_bag()?)?)),
            TransformOp::Filter(p) => {
                let d = inputs[0].as_bag()?;
                let out = flatmap_with(
                    |x| match p.eval(std::slice::from_ref(x))? {
                        Value::Bool(true) => Ok(Bag::singleton(x.clone())),
                        Value::Bool(false) => Ok(Bag::empty()),
                        other => Err(Error::TypeMismatch(format!(
                            "filter predicate returned {other}"
                        ))),
                    },
                    d,
                )?;
                Ok(Value::Bag(out))
            }
            TransformOp::GroupBy(k) => {
                let d = inputs[0].as_bag()?;
                let keyed = flatmap_with(
                    |x| {
                        let key = k.eval(std::slice::from_ref(x))?;
                        Ok(Bag::singleton(Value::pair(key, x.clone())))
                    },
                    d,
                )?;
                Ok(Value::Bag(groupby(&keyed)?))
            }
            TransformOp::GroupByKey => Ok(Value::Bag(groupby(inputs[0].as_bag()?)?)),
            TransformOp::Union => Ok(Value::Bag(bag_union(
                inputs[0].as_bag()?,
                inputs[1].as_bag()?,
            )?)),
            TransformOp::Intersection => {
                let (dx, dy) = (inputs[0].as_bag()?, inputs[1].as_bag()?);
                check_same_elem(dx, dy, "intersection")?;
                let out = flatmap_with(
                    |x| {
                        let present = quantify_with(Quantifier::Exists, |y| Ok(x == y), dy)?;
                        Ok(if present {
                            Bag::singleton(x.clone())
                        } else {
                            Bag::empty()
                        })
                    },
                    dx,
                )?;
                Ok(Value::Bag(out))
            }
            TransformOp::Subtract => {
                let (dx, dy) = (inputs[0].as_bag()?, inputs[1].as_bag()?);
                check_same_elem(dx, dy, "subtract")?;
                let out = flatmap_with(
                    |x| {
                        let absent = quantify_with(Quantifier::ForAll, |y| Ok(x != y), dy)?;
                        Ok(if absent {
                            Bag::singleton(x.clone())
                        } else {
                            Bag::empty()
                        })
                    },
                    dx,
                )?;
                Ok(Value::Bag(out))
            }
            TransformOp::Distinct => {
                let d = inputs[0].as_bag()?;
                let self_keyed =
                    flatmap_with(|x| Ok(Bag::singleton(Value::pair(x.clone(), x.clone()))), d)?;
                let grouped = groupby(&self_keyed)?;
                let out =
                    flatmap_with(|kg| Ok(Bag::singleton(kg.as_tuple()?[0].clone())), &grouped)?;
                Ok(Value::Bag(out))
            }
            TransformOp::Reduce(f) => {
                let v = algebra::reduce(f, inputs[0].as_bag()?)?;
                // a singleton bag, so the result is a dataset like any other
                Ok(Value::Bag(Bag::singleton(v)))
            }
            TransformOp::ReduceByKey(f) => {
                let grouped = groupby(inputs[0].as_bag()?)?;
                let out = flatmap_with(
                    |kg| {
                        let pair = kg.as_tuple()?;
                        // groups are never empty, so reduce cannot fail here
                        let reduced = algebra::reduce(f, pair[1].as_bag()?)?;
                        Ok(Bag::singleton(Value::pair(pair[0].clone(), reduced)))
                    },
                    &grouped,
                )?;
                Ok(Value::Bag(out))
            }
            TransformOp::InnerJoin => {
                join_over_cogroup(inputs, |k, dx, dy, items| {
                    for x in dx.iter() {
                        for y in dy.iter() {
                            items.push(Value::pair(k.clone(), Value::pair(x.clone(), y.clone())));
                        }
                    }
                })
            }
            TransformOp::LeftOuterJoin => {
                join_over_cogroup(inputs, |k, dx, dy, items| {
                    if dy.is_empty() {
                        for x in dx.iter() {
                            items.push(Value::pair(
                                k.clone(),
                                Value::pair(x.clone(), Value::Bag(Bag::empty())),
                            ));
                        }
                    } else {
                        for x in dx.iter() {
                            for y in dy.iter() {
                                items.push(Value::pair(
                                    k.clone(),
                                    Value::pair(x.clone(), Value::Bag(Bag::singleton(y.clone()))),
                                ));
                            }
                        }
                    }
                })
            }
            TransformOp::RightOuterJoin => {
                join_over_cogroup(inputs, |k, dx, dy, items| {
                    if dx.is_empty() {
                        for y in dy.iter() {
                            items.push(Value::pair(
                                k.clone(),
                                Value::pair(Value::Bag(Bag::empty()), y.clone()),
                            ));
                        }
                    } else {
                        for x in dx.iter() {
                            for y in dy.iter() {
                                items.push(Value::pair(
                                    k.clone(),
                                    Value::pair(Value::Bag(Bag::singleton(x.clone())), y.clone()),
                                ));
                            }
                        }
                    }
                })
            }
            TransformOp::FullOuterJoin => {
                join_over_cogroup(inputs, |k, dx, dy, items| {
                    if !dx.is_empty() && dy.is_empty() {
                        for x in dx.iter() {
                            items.push(Value::pair(
                                k.clone(),
                                Value::pair(
                                    Value::Bag(Bag::singleton(x.clone())),
                                    Value::Bag(Bag::empty()),
                                ),
                            ));
                        }
                    } else if dx.is_empty() && !dy.is_empty() {
                        for y in dy.iter() {
                            items.push(Value::pair(
                                k.clone(),
                                Value::pair(
                                    Value::Bag(Bag::empty()),
                                    Value::Bag(Bag::singleton(y.clone())),
                                ),
                            ));
                        }
                    } else {
                        for x in dx.iter() {
                            for y in dy.iter() {
                                items.push(Value::pair(
                                    k.clone(),
                                    Value::pair(
                                        Value::Bag(Bag::singleton(x.clone())),
                                        Value::Bag(Bag::singleton(y.clone())),
                                    ),
                                ));
                            }
                        }
                    }
                })
            }
            TransformOp::OrderBy { descending } => {
                let d = inputs[0].as_bag()?;
                let mut items: Vec<Value> = d.iter().cloned().collect();
                if *descending {
                    // descending order is the reversed comparator
                    items.reverse();
                }
                Ok(Value::List(items))
            }
            TransformOp::OrderByKey { descending } => {
                let d = inputs[0].as_bag()?;
                let mut items = algebra::orderby(d)?;
                if *descending {
                    // reverse the key comparator only; values among
                    // equal keys stay in canonical ascending order
                    items.sort_by(|a, b| {
                        let ka = &a.as_tuple().unwrap()[0];
                        let kb = &b.as_tuple().unwrap()[0];
                        kb.cmp(ka).then_with(|| a.cmp(b))
                    });
                }
                Ok(Value::List(items))
            }
        }
    }

    /// Warnings from the probabilistic associativity/commutativity
    /// check of aggregation functions; empty for other operations.
    pub fn reduce_warnings(&self, inputs: &[&Value]) -> Vec<String> {
        match self {
            TransformOp::Reduce(f) => inputs
                .first()
                .and_then(|v| v.as_bag().ok())
                .map(|b| algebra::check_reduce_function(f, b))
                .unwrap_or_default(),
            TransformOp::ReduceByKey(f) => {
                let Some(bag) = inputs.first().and_then(|v| v.as_bag().ok()) else {
                    return Vec::new();
                };
                let Ok(grouped) = groupby(bag) else {
                    return Vec::new();
                };
                for kg in grouped.iter() {
                    if let Ok(pair) = kg.as_tuple() {
                        if let Ok(g) = pair[1].as_bag() {
                            let w = algebra::check_reduce_function(f, g);
                            if !w.is_empty() {
                                return w;
                            }
                        }
                    }
                }
                Vec::new()
            }
            _ => Vec::new(),
        }
    }
}

fn join_over_cogroup<F>(inputs: &[&Value], mut emit: F) -> Result<Value>
where
    F: FnMut(&Value, &Bag, &Bag, &mut Vec<Value>),
{
    let pairs = cogroup(inputs[0].as_bag()?, inputs[1].as_bag()?)?;
    let out = flatmap_with(
        |entry| {
            let pair = entry.as_tuple()?;
            let sides = pair[1].as_tuple()?;
            let (dx, dy) = (sides[0].as_bag()?, sides[1].as_bag()?);
            let mut items = Vec::new();
            emit(&pair[0], dx, dy, &mut items);
            Ok(Bag::from_values(items))
        },
        &pairs,
    )?;
    Ok(Value::Bag(out))
}

fn bag_elem<'a>(ty: &'a ElemType, what: &str) -> Result<&'a ElemType> {
    match ty {
        ElemType::Bag(elem) => Ok(elem),
        other => Err(Error::TypeMismatch(format!(
            "{what} needs a bag input, got {other}"
        ))),
    }
}

fn keyed_elem<'a>(ty: &'a ElemType, what: &str) -> Result<(&'a ElemType, &'a ElemType)> {
    bag_elem(ty, what)?.as_pair().ok_or_else(|| {
        Error::TypeMismatch(format!("{what} needs a bag of key/value pairs, got {ty}"))
    })
}

fn check_unary_udf(f: &FuncDef, elem: &ElemType, what: &str) -> Result<()> {
    f.typecheck()?;
    if f.params.len() != 1 {
        return Err(Error::Arity(format!(
            "{what} function must take 1 parameter, takes {}",
            f.params.len()
        )));
    }
    if &f.params[0].1 != elem {
        return Err(Error::TypeMismatch(format!(
            "{what} function parameter is {}, dataset elements are {elem}",
            f.params[0].1
        )));
    }
    Ok(())
}

fn check_binary_udf(f: &FuncDef, elem: &ElemType, what: &str) -> Result<()> {
    f.typecheck()?;
    if f.params.len() != 2 {
        return Err(Error::Arity(format!(
            "{what} function must take 2 parameters, takes {}",
            f.params.len()
        )));
    }
    let ok = f.params[0].1 == *elem && f.params[1].1 == *elem && f.return_type == *elem;
    if !ok {
        return Err(Error::TypeMismatch(format!(
            "{what} function must be {elem} -> {elem} -> {elem}, declares ({}, {}) -> {}",
            f.params[0].1, f.params[1].1, f.return_type
        )));
    }
    Ok(())
}

fn check_same_elem(x: &Bag, y: &Bag, what: &str) -> Result<()> {
    if let (Ok(Some(tx)), Ok(Some(ty))) = (x.elem_type(), y.elem_type()) {
        if tx != ty {
            return Err(Error::TypeMismatch(format!(
                "{what} inputs have element types {tx} and {ty}"
            )));
        }
    }
    Ok(())
}

/// One stage of a step pipeline: a transformation, plus — for binary
/// operations — the fixed dataset bound to get the slot the looping
/// value does not occupy.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOp {
    pub op: TransformOp,
    pub fixed: Option<FixedInput>,
}

/// A loop-invariant dataset occupying one input slot of a binary step.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedInput {
    /// The fixed dataset is the left input; the looping value flows in
    /// on the right.
    Left(Value),
    /// The fixed dataset is the right input.
    Right(Value),
}

/// A composed pipeline usable as a step function `Bag<t> -> Bag<t>`:
/// the input and output element types are identical, so the output of
/// one application feeds the next.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub steps: Vec<StepOp>,
}

impl StepFunction {
    pub fn new(steps: Vec<StepOp>) -> StepFunction {
        StepFunction { steps }
    }

    /// Runs the pipeline once on a dataset.
    pub fn apply(&self, input: &Value) -> Result<Value> {
        let mut current = input.clone();
        for step in &self.steps {
            current = match &step.fixed {
                None => step.op.apply(&[&current])?,
                Some(FixedInput::Left(v)) => step.op.apply(&[v, &current])?,
                Some(FixedInput::Right(v)) => step.op.apply(&[&current, v])?,
            };
        }
        Ok(current)
    }
}

/// Applies the step function `n` times.
pub fn apply_iterate(step: &StepFunction, n: i64, input: &Value) -> Result<Value> {
    if n < 0 {
        return Err(Error::NegativeIterations(n));
    }
    apply_iterate_with(step, None, n, input)
}

/// Applies the step function until `pred` is false or `n` applications
/// have run, whichever comes first. The predicate is evaluated before
/// every application, including the first.
pub fn apply_iterate_with_condition(
    step: &StepFunction,
    pred: &FuncDef,
    n: i64,
    input: &Value,
) -> Result<Value> {
    if n < 0 {
        return Err(Error::NegativeIterations(n));
    }
    apply_iterate_with(step, Some(pred), n, input)
}

fn apply_iterate_with(
    step: &StepFunction,
    pred: Option<&FuncDef>,
    n: i64,
    input: &Value,
) -> Result<Value> {
    let bag = input.as_bag()?.clone();
    let out = repeat(
        |x: &Bag, _| step.apply(&Value::Bag(x.clone()))?.as_bag().cloned(),
        |x: &Bag| match pred {
            None => Ok(true),
            Some(p) => match p.eval(&[Value::Bag(x.clone())])? {
                Value::Bool(b) => Ok(b),
                other => Err(Error::TypeMismatch(format!(
                    "loop predicate returned {other}"
                ))),
            },
        },
        n,
        bag,
    )?;
    Ok(Value::Bag(out))
}

/// The classic aggregations, each a `reduce` with a fixed function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggKind {
    Max,
    Min,
    Sum,
}

/// Builds the aggregation function for a numeric element type:
/// `max` keeps the greater operand, `min` the smaller, `sum` adds.
pub fn aggregation_func(kind: AggKind, elem: &ElemType) -> Result<FuncDef> {
    if !elem.is_numeric() {
        return Err(Error::TypeMismatch(format!(
            "derived aggregations need a numeric element type, got {elem}"
        )));
    }
    let src = match kind {
        AggKind::Max => "if x > y then x else y",
        AggKind::Min => "if x < y then x else y",
        AggKind::Sum => "x + y",
    };
    let f = FuncDef::parse(&format!("(x: {elem}, y: {elem}) -> {elem} => {src}"))?;
    f.typecheck()?;
    Ok(f)
}

/// `max`/`min`/`sum` over a non-empty numeric bag, as a singleton bag.
pub fn derived_aggregation(kind: AggKind, input: &Value) -> Result<Value> {
    let bag = input.as_bag()?;
    let elem = bag.elem_type()?.ok_or(Error::EmptyReduce)?;
    let f = aggregation_func(kind, &elem)?;
    TransformOp::Reduce(f).apply(&[input])
}
