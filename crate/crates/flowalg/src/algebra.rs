//! The kernel of homomorphic operations on bags, on which every
//! transformation is defined: `flatmap`, `groupby`, `cogroup`,
//! `reduce`, `orderby`, `repeat` and the `some`/`all` quantifiers.
//!
//! `flatmap` distributes over bag union — `flatmap(f, X ⊎ Y)` equals
//! `flatmap(f, X) ⊎ flatmap(f, Y)` — which is what lets a runtime
//! partition data freely. The kernel keeps every result in canonical
//! order, so evaluation is deterministic regardless of how callers
//! assemble their inputs.

use crate::error::{Error, Result};
use crate::expr::FuncDef;
use crate::rng::SplitMix64;
use crate::value::{Bag, Value};

/// Applies `f : a -> Bag<b>` to every element and unions the results.
/// `flatmap(f, {{}})` is `{{}}`.
pub fn flatmap(f: &FuncDef, input: &Bag) -> Result<Bag> {
    flatmap_with(
        |x| {
            let v = f.eval(std::slice::from_ref(x))?;
            Ok(v.as_bag()?.clone())
        },
        input,
    )
}

/// `flatmap` over a native closure; the building block for the
/// transformation equations, which mix user functions with structural
/// manipulation that the expression language cannot express.
pub fn flatmap_with<F>(mut f: F, input: &Bag) -> Result<Bag>
where
    F: FnMut(&Value) -> Result<Bag>,
{
    let mut out: Vec<Value> = Vec::new();
    for x in input.iter() {
        let piece = f(x).map_err(|e| e.with_context(format!("at element {x}")))?;
        out.extend(piece.into_values());
    }
    Ok(Bag::from_values(out))
}

/// Groups a bag of pairs by first component: one output pair per
/// distinct key, whose second component is the bag of all values seen
/// under that key. Group sizes sum to the input size.
pub fn groupby(input: &Bag) -> Result<Bag> {
    let mut groups: Vec<Value> = Vec::new();
    let mut current: Option<(Value, Vec<Value>)> = None;
    // the bag is sorted by (key, value), so equal keys are adjacent
    for item in input.iter() {
        let pair = item.as_tuple()?;
        if pair.len() != 2 {
            return Err(Error::TypeMismatch(format!(
                "groupby needs key/value pairs, got a {}-tuple",
                pair.len()
            )));
        }
        let (k, v) = (&pair[0], &pair[1]);
        match &mut current {
            Some((key, vals)) if key == k => vals.push(v.clone()),
            _ => {
                if let Some((key, vals)) = current.take() {
                    groups.push(Value::pair(key, Value::Bag(Bag::from_values(vals))));
                }
                current = Some((k.clone(), vec![v.clone()]));
            }
        }
    }
    if let Some((key, vals)) = current {
        groups.push(Value::pair(key, Value::Bag(Bag::from_values(vals))));
    }
    Ok(Bag::from_values(groups))
}

/// Two-sided grouping by a shared key type: one output pair per key
/// present in either input, carrying the per-key bags from both sides
/// (empty on the side that lacks the key). No output pair has both
/// sides empty.
pub fn cogroup(x: &Bag, y: &Bag) -> Result<Bag> {
    let gx = groupby(x)?;
    let gy = groupby(y)?;
    let (mut i, mut j) = (0, 0);
    let (xs, ys) = (gx.as_slice(), gy.as_slice());
    let mut out = Vec::new();
    let push = |out: &mut Vec<Value>, k: &Value, dx: Value, dy: Value| {
        out.push(Value::pair(k.clone(), Value::pair(dx, dy)));
    };
    let empty = || Value::Bag(Bag::empty());
    while i < xs.len() || j < ys.len() {
        let which = if i == xs.len() {
            std::cmp::Ordering::Greater
        } else if j == ys.len() {
            std::cmp::Ordering::Less
        } else {
            let kx = &xs[i].as_tuple()?[0];
            let ky = &ys[j].as_tuple()?[0];
            crate::value::canonical_compare(kx, ky)
                .map_err(|e| e.with_context("cogroup key types disagree"))?
        };
        match which {
            std::cmp::Ordering::Less => {
                let p = xs[i].as_tuple()?;
                push(&mut out, &p[0], p[1].clone(), empty());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                let p = ys[j].as_tuple()?;
                push(&mut out, &p[0], empty(), p[1].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let px = xs[i].as_tuple()?;
                let py = ys[j].as_tuple()?;
                push(&mut out, &px[0], px[1].clone(), py[1].clone());
                i += 1;
                j += 1;
            }
        }
    }
    Ok(Bag::from_values(out))
}

/// Folds `f : a -> a -> a` over the bag in canonical element order.
/// Fixing the order makes the result deterministic; for the intended
/// commutative-associative `f` the choice of order is irrelevant.
pub fn reduce(f: &FuncDef, input: &Bag) -> Result<Value> {
    let mut iter = input.iter();
    let mut acc = iter.next().ok_or(Error::EmptyReduce)?.clone();
    for x in iter {
        acc = f.eval(&[acc, x.clone()])?;
    }
    Ok(acc)
}

/// Samples pairs and triples from the input and reports, as warning
/// strings, any counterexample to commutativity or associativity of
/// `f`. The user declares both properties; this is a spot check, not a
/// proof. Sampling is deterministic.
pub fn check_reduce_function(f: &FuncDef, input: &Bag) -> Vec<String> {
    let n = input.len();
    let xs = input.as_slice();
    let mut warnings = Vec::new();
    let mut rng = SplitMix64::new(0xF10A);
    if n < 2 {
        return warnings;
    }
    for _ in 0..8 {
        let a = &xs[rng.next_index(n)];
        let b = &xs[rng.next_index(n)];
        let ab = f.eval(&[a.clone(), b.clone()]);
        let ba = f.eval(&[b.clone(), a.clone()]);
        if let (Ok(ab), Ok(ba)) = (ab, ba) {
            if ab != ba {
                warnings.push(format!(
                    "reduce function is not commutative: f({a}, {b}) = {ab} but f({b}, {a}) = {ba}"
                ));
                break;
            }
        }
    }
    for _ in 0..8 {
        let a = &xs[rng.next_index(n)];
        let b = &xs[rng.next_index(n)];
        let c = &xs[rng.next_index(n)];
        let left = f
            .eval(&[a.clone(), b.clone()])
            .and_then(|ab| f.eval(&[ab, c.clone()]));
        let right = f
            .eval(&[b.clone(), c.clone()])
            .and_then(|bc| f.eval(&[a.clone(), bc]));
        if let (Ok(left), Ok(right)) = (left, right) {
            if left != right {
                warnings.push(format!(
                    "reduce function is not associative on ({a}, {b}, {c}): {left} vs {right}"
                ));
                break;
            }
        }
    }
    warnings
}

/// Sorts a bag of pairs into a list, ascending by key, stable among
/// equal keys by full-pair canonical order. The element multiset is
/// preserved.
pub fn orderby(input: &Bag) -> Result<Vec<Value>> {
    for item in input.iter() {
        let pair = item.as_tuple()?;
        if pair.len() != 2 {
            return Err(Error::TypeMismatch(format!(
                "orderby needs key/value pairs, got a {}-tuple",
                pair.len()
            )));
        }
    }
    // canonical bag order is (key, value) lexicographic, which is
    // exactly key-ascending with the canonical tie break
    Ok(input.iter().cloned().collect())
}

/// Applies `step` up to `n` times, re-testing `pred` before every
/// application (including the first); returns the input unchanged when
/// `n <= 0` or the predicate is false.
///
/// Errors from the step or the predicate are tagged with the iteration
/// index at which they occurred.
pub fn repeat<S, P>(mut step: S, mut pred: P, n: i64, x: Bag) -> Result<Bag>
where
    S: FnMut(&Bag, u32) -> Result<Bag>,
    P: FnMut(&Bag) -> Result<bool>,
{
    let mut current = x;
    let mut remaining = n;
    let mut iteration: u32 = 0;
    loop {
        if remaining <= 0 {
            return Ok(current);
        }
        let keep_going = pred(&current)
            .map_err(|e| e.with_context(format!("iteration {} predicate", iteration + 1)))?;
        if !keep_going {
            return Ok(current);
        }
        iteration += 1;
        current = step(&current, iteration)
            .map_err(|e| e.with_context(format!("iteration {iteration}")))?;
        remaining -= 1;
    }
}

/// The two quantifiers over a bag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    ForAll,
}

/// Folds a boolean predicate across the bag: `Exists` is the or-fold
/// (false on the empty bag), `ForAll` the and-fold (true on the empty
/// bag). Every element is evaluated; there is no short circuit.
pub fn quantify_with<P>(q: Quantifier, mut pred: P, input: &Bag) -> Result<bool>
where
    P: FnMut(&Value) -> Result<bool>,
{
    let mut acc = matches!(q, Quantifier::ForAll);
    for x in input.iter() {
        let b = pred(x).map_err(|e| e.with_context(format!("at element {x}")))?;
        acc = match q {
            Quantifier::Exists => acc || b,
            Quantifier::ForAll => acc && b,
        };
    }
    Ok(acc)
}

/// `some(p, X)` — true iff `p` holds for at least one element.
pub fn some(p: &FuncDef, input: &Bag) -> Result<bool> {
    quantify_with(Quantifier::Exists, |x| eval_bool(p, x), input)
}

/// `all(p, X)` — true iff `p` holds for every element.
pub fn all(p: &FuncDef, input: &Bag) -> Result<bool> {
    quantify_with(Quantifier::ForAll, |x| eval_bool(p, x), input)
}

fn eval_bool(p: &FuncDef, x: &Value) -> Result<bool> {
    match p.eval(std::slice::from_ref(x))? {
        Value::Bool(b) => Ok(b),
        other => Err(Error::TypeMismatch(format!(
            "predicate returned {other}, expected Bool"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(i: i64) -> Value {
        Value::Int(i)
    }

    fn ints(items: &[i64]) -> Bag {
        Bag::from_values(items.iter().map(|&i| int(i)).collect())
    }

    fn func(src: &str) -> FuncDef {
        let f = FuncDef::parse(src).unwrap();
        f.typecheck().unwrap();
        f
    }

    #[test]
    fn flatmap_examples() {
        let double = |x: &Value| Ok(Bag::from_values(vec![x.clone(), x.clone()]));
        let out = flatmap_with(double, &ints(&[1, 2])).unwrap();
        assert_eq!(out, ints(&[1, 1, 2, 2]));

        let annihilate = |_: &Value| Ok(Bag::empty());
        assert_eq!(
            flatmap_with(annihilate, &ints(&[5, 6])).unwrap(),
            Bag::empty()
        );

        let embed = |x: &Value| Ok(Bag::singleton(x.clone()));
        assert_eq!(
            flatmap_with(embed, &ints(&[1, 2, 3])).unwrap(),
            ints(&[1, 2, 3])
        );
    }

    #[test]
    fn flatmap_with_udf() {
        let f = func("(x: Int) -> Bag<Int> => if x > 1 then singleton(x) else emptyBag");
        let out = flatmap(&f, &ints(&[0, 1, 2, 3])).unwrap();
        assert_eq!(out, ints(&[2, 3]));
    }

    #[test]
    fn flatmap_attaches_offending_element() {
        let f = func("(x: Int) -> Bag<Int> => singleton(1 / x)");
        let err = flatmap(&f, &ints(&[1, 0])).unwrap_err();
        assert!(err.to_string().contains("at element 0"), "{err}");
        assert!(matches!(err.root(), Error::DivisionByZero));
    }

    fn pair(k: i64, v: &str) -> Value {
        Value::pair(int(k), Value::Str(v.into()))
    }

    #[test]
    fn groupby_partitions_by_key() {
        let input = Bag::from_values(vec![pair(1, "a"), pair(2, "b"), pair(1, "e")]);
        let out = groupby(&input).unwrap();
        let expected = Bag::from_values(vec![
            Value::pair(
                int(1),
                Value::Bag(Bag::from_values(vec![
                    Value::Str("a".into()),
                    Value::Str("e".into()),
                ])),
            ),
            Value::pair(int(2), Value::Bag(Bag::singleton(Value::Str("b".into())))),
        ]);
        assert_eq!(out, expected);

        assert_eq!(groupby(&Bag::empty()).unwrap(), Bag::empty());

        let single = Bag::singleton(pair(1, "a"));
        assert_eq!(groupby(&single).unwrap().len(), 1);
    }

    #[test]
    fn groupby_sizes_sum_to_input() {
        let input = Bag::from_values(vec![pair(1, "a"), pair(1, "a"), pair(3, "z"), pair(2, "b")]);
        let out = groupby(&input).unwrap();
        let total: usize = out
            .iter()
            .map(|g| g.as_tuple().unwrap()[1].as_bag().unwrap().len())
            .sum();
        assert_eq!(total, input.len());
    }

    #[test]
    fn cogroup_unions_keys() {
        let x = Bag::singleton(pair(1, "a"));
        let y = Bag::from_values(vec![pair(1, "p"), pair(2, "q")]);
        let out = cogroup(&x, &y).unwrap();
        let expected = Bag::from_values(vec![
            Value::pair(
                int(1),
                Value::pair(
                    Value::Bag(Bag::singleton(Value::Str("a".into()))),
                    Value::Bag(Bag::singleton(Value::Str("p".into()))),
                ),
            ),
            Value::pair(
                int(2),
                Value::pair(
                    Value::Bag(Bag::empty()),
                    Value::Bag(Bag::singleton(Value::Str("q".into()))),
                ),
            ),
        ]);
        assert_eq!(out, expected);

        assert_eq!(cogroup(&Bag::empty(), &Bag::empty()).unwrap(), Bag::empty());

        let one_sided = cogroup(&Bag::singleton(pair(7, "a")), &Bag::empty()).unwrap();
        assert_eq!(
            one_sided,
            Bag::singleton(Value::pair(
                int(7),
                Value::pair(
                    Value::Bag(Bag::singleton(Value::Str("a".into()))),
                    Value::Bag(Bag::empty()),
                ),
            ))
        );
    }

    #[test]
    fn reduce_folds_in_canonical_order() {
        let add = func("(x: Int, y: Int) -> Int => x + y");
        assert_eq!(reduce(&add, &ints(&[1, 2, 3])).unwrap(), int(6));

        let max = func("(x: Int, y: Int) -> Int => if x > y then x else y");
        assert_eq!(reduce(&max, &ints(&[5])).unwrap(), int(5));

        assert!(matches!(
            reduce(&add, &Bag::empty()),
            Err(Error::EmptyReduce)
        ));
    }

    #[test]
    fn reduce_check_flags_noncommutative_function() {
        let minus = func("(x: Int, y: Int) -> Int => x - y");
        let warnings = check_reduce_function(&minus, &ints(&[1, 2, 3, 4]));
        assert!(!warnings.is_empty());

        let add = func("(x: Int, y: Int) -> Int => x + y");
        assert!(check_reduce_function(&add, &ints(&[1, 2, 3, 4])).is_empty());
    }

    #[test]
    fn orderby_sorts_with_canonical_tie_break() {
        let input = Bag::from_values(vec![pair(3, "c"), pair(1, "a")]);
        let out = orderby(&input).unwrap();
        assert_eq!(out, vec![pair(1, "a"), pair(3, "c")]);

        assert_eq!(orderby(&Bag::empty()).unwrap(), Vec::<Value>::new());

        let ties = Bag::from_values(vec![pair(1, "b"), pair(1, "a")]);
        assert_eq!(orderby(&ties).unwrap(), vec![pair(1, "a"), pair(1, "b")]);
    }

    #[test]
    fn repeat_recursion() {
        let incr = |b: &Bag, _: u32| {
            flatmap_with(
                |x| {
                    let Value::Int(i) = x else { unreachable!() };
                    Ok(Bag::singleton(int(i + 1)))
                },
                b,
            )
        };
        // n = 0 returns the input untouched
        assert_eq!(repeat(incr, |_| Ok(true), 0, ints(&[9])).unwrap(), ints(&[9]));
        // three applications move {{0}} to {{3}}
        assert_eq!(repeat(incr, |_| Ok(true), 3, ints(&[0])).unwrap(), ints(&[3]));
        // a false predicate stops before the first application
        assert_eq!(repeat(incr, |_| Ok(false), 5, ints(&[7])).unwrap(), ints(&[7]));
    }

    #[test]
    fn repeat_tags_iteration_on_error() {
        let fail_second = |b: &Bag, i: u32| {
            if i == 2 {
                Err(Error::DivisionByZero)
            } else {
                Ok(b.clone())
            }
        };
        let err = repeat(fail_second, |_| Ok(true), 5, ints(&[1])).unwrap_err();
        assert!(err.to_string().contains("iteration 2"), "{err}");
    }

    #[test]
    fn quantifiers() {
        let is_two = func("(y: Int) -> Bool => y == 2");
        assert!(some(&is_two, &ints(&[1, 2])).unwrap());
        let not_nine = func("(y: Int) -> Bool => y != 9");
        assert!(all(&not_nine, &ints(&[1, 2])).unwrap());
        // fold identities on the empty bag
        assert!(!some(&is_two, &Bag::empty()).unwrap());
        assert!(all(&is_two, &Bag::empty()).unwrap());
    }
}
