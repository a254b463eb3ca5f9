//! The universe of data: dynamically tagged values, the bag and list
//! collections, the canonical total order, and multiset equality.
//!
//! Bags keep their elements sorted under the canonical order at all
//! times. This gives reproducible iteration and output, and makes
//! multiset equality a plain structural comparison, while keeping the
//! order-insensitive semantics of a multiset: two bags built from the
//! same elements in any insertion order are equal.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::types::ElemType;

/// A dynamically tagged datum.
///
/// Floats are never NaN and `-0.0` is normalized to `0.0` at
/// construction, which keeps the canonical comparison a total order.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    /// Ordered fixed-arity product; arity is always at least 2.
    Tuple(Vec<Value>),
    /// Finite multiset.
    Bag(Bag),
    /// Finite sequence; unlike a bag, order is significant.
    List(Vec<Value>),
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order used for sorting: canonical within a type, with an
/// arbitrary fixed rank across tags so that sorting never panics on
/// ill-typed data. Well-typed collections never compare across tags.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => {
                // no NaN by construction
                a.partial_cmp(b).expect("NaN rejected at ingestion")
            }
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Tuple(a), Value::Tuple(b)) => cmp_seq(a, b),
            (Value::List(a), Value::List(b)) => cmp_seq(a, b),
            (Value::Bag(a), Value::Bag(b)) => cmp_seq(a.as_slice(), b.as_slice()),
            _ => self.tag_rank().cmp(&other.tag_rank()),
        }
    }
}

fn cmp_seq(a: &[Value], b: &[Value]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

impl Value {
    /// Builds a float value, rejecting NaN and normalizing `-0.0`.
    pub fn float(f: f64) -> Result<Value> {
        if f.is_nan() {
            return Err(Error::Decode("NaN is not a value".into()));
        }
        Ok(Value::Float(if f == 0.0 { 0.0 } else { f }))
    }

    /// Builds a tuple, enforcing arity >= 2.
    pub fn tuple(items: Vec<Value>) -> Result<Value> {
        if items.len() < 2 {
            return Err(Error::Arity(format!(
                "tuple arity must be at least 2, got {}",
                items.len()
            )));
        }
        Ok(Value::Tuple(items))
    }

    /// Convenience pair constructor.
    pub fn pair(k: Value, v: Value) -> Value {
        Value::Tuple(vec![k, v])
    }

    fn tag_rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Bool(_) => 2,
            Value::Str(_) => 3,
            Value::Tuple(_) => 4,
            Value::Bag(_) => 5,
            Value::List(_) => 6,
        }
    }

    fn tag_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "Int",
            Value::Float(_) => "Float",
            Value::Bool(_) => "Bool",
            Value::Str(_) => "Str",
            Value::Tuple(_) => "Tuple",
            Value::Bag(_) => "Bag",
            Value::List(_) => "List",
        }
    }

    /// Infers the unique element type of the value.
    ///
    /// Fails with [`Error::CannotInfer`] on empty collections (an empty
    /// bag conforms to every bag type, so it has no single name) and
    /// with a type mismatch on heterogeneous collections.
    pub fn infer_type(&self) -> Result<ElemType> {
        match self {
            Value::Int(_) => Ok(ElemType::Int),
            Value::Float(_) => Ok(ElemType::Float),
            Value::Bool(_) => Ok(ElemType::Bool),
            Value::Str(_) => Ok(ElemType::Str),
            Value::Tuple(items) => Ok(ElemType::Tuple(
                items
                    .iter()
                    .map(Value::infer_type)
                    .collect::<Result<Vec<_>>>()?,
            )),
            Value::Bag(b) => Ok(ElemType::Bag(Box::new(infer_elems(b.as_slice())?))),
            Value::List(items) => Ok(ElemType::List(Box::new(infer_elems(items)?))),
        }
    }

    /// True when the value inhabits the given type. Empty bags and
    /// lists conform to every bag and list type respectively.
    pub fn conforms(&self, ty: &ElemType) -> bool {
        match (self, ty) {
            (Value::Int(_), ElemType::Int) => true,
            (Value::Float(_), ElemType::Float) => true,
            (Value::Bool(_), ElemType::Bool) => true,
            (Value::Str(_), ElemType::Str) => true,
            (Value::Tuple(items), ElemType::Tuple(tys)) => {
                items.len() == tys.len()
                    && items.iter().zip(tys).all(|(v, t)| v.conforms(t))
            }
            (Value::Bag(b), ElemType::Bag(t)) => b.iter().all(|v| v.conforms(t)),
            (Value::List(items), ElemType::List(t)) => items.iter().all(|v| v.conforms(t)),
            _ => false,
        }
    }

    /// The bag payload, or a type mismatch naming the actual tag.
    pub fn as_bag(&self) -> Result<&Bag> {
        match self {
            Value::Bag(b) => Ok(b),
            other => Err(Error::TypeMismatch(format!(
                "expected Bag, got {}",
                other.tag_name()
            ))),
        }
    }

    /// The tuple payload, or a type mismatch.
    pub fn as_tuple(&self) -> Result<&[Value]> {
        match self {
            Value::Tuple(items) => Ok(items),
            other => Err(Error::TypeMismatch(format!(
                "expected Tuple, got {}",
                other.tag_name()
            ))),
        }
    }
}

fn infer_elems(items: &[Value]) -> Result<ElemType> {
    let mut iter = items.iter();
    let first = match iter.next() {
        Some(v) => v.infer_type()?,
        None => return Err(Error::CannotInfer),
    };
    for v in iter {
        let t = v.infer_type()?;
        if t != first {
            return Err(Error::TypeMismatch(format!(
                "heterogeneous collection: {first} vs {t}"
            )));
        }
    }
    Ok(first)
}

/// Compares two values of the same element type under the canonical
/// total order: scalars by natural order, strings lexicographically,
/// tuples and lists lexicographically by position, bags as sorted
/// multisets.
pub fn canonical_compare(a: &Value, b: &Value) -> Result<Ordering> {
    match (a, b) {
        (Value::Int(_), Value::Int(_))
        | (Value::Float(_), Value::Float(_))
        | (Value::Bool(_), Value::Bool(_))
        | (Value::Str(_), Value::Str(_)) => Ok(a.cmp(b)),
        (Value::Tuple(x), Value::Tuple(y)) => {
            if x.len() != y.len() {
                return Err(Error::TypeMismatch(format!(
                    "tuple arity {} vs {}",
                    x.len(),
                    y.len()
                )));
            }
            compare_seq(x, y, false)
        }
        (Value::List(x), Value::List(y)) => compare_seq(x, y, true),
        (Value::Bag(x), Value::Bag(y)) => compare_seq(x.as_slice(), y.as_slice(), true),
        _ => Err(Error::TypeMismatch(format!(
            "cannot compare {} with {}",
            a.tag_name(),
            b.tag_name()
        ))),
    }
}

fn compare_seq(a: &[Value], b: &[Value], allow_len_diff: bool) -> Result<Ordering> {
    for (x, y) in a.iter().zip(b.iter()) {
        match canonical_compare(x, y)? {
            Ordering::Equal => continue,
            other => return Ok(other),
        }
    }
    if a.len() == b.len() || allow_len_diff {
        Ok(a.len().cmp(&b.len()))
    } else {
        Err(Error::TypeMismatch("sequence length mismatch".into()))
    }
}

/// A finite multiset of values, stored sorted under the canonical
/// order. Construction from any element order produces the same bag.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bag(Vec<Value>);

impl Bag {
    /// The empty bag — the neutral element of the union monoid.
    pub fn empty() -> Bag {
        Bag(Vec::new())
    }

    /// The unit injection: a bag holding exactly one value.
    pub fn singleton(v: Value) -> Bag {
        Bag(vec![v])
    }

    /// Builds a bag from values in any order.
    pub fn from_values(mut items: Vec<Value>) -> Bag {
        items.sort();
        Bag(items)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Elements in canonical order.
    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.0
    }

    pub fn into_values(self) -> Vec<Value> {
        self.0
    }

    /// Number of occurrences of a value.
    pub fn count(&self, v: &Value) -> usize {
        self.0.iter().filter(|x| *x == v).count()
    }

    /// The element type shared by all elements, or `None` when empty.
    pub fn elem_type(&self) -> Result<Option<ElemType>> {
        if self.0.is_empty() {
            Ok(None)
        } else {
            infer_elems(&self.0).map(Some)
        }
    }
}

impl FromIterator<Value> for Bag {
    fn from_iter<T: IntoIterator<Item = Value>>(iter: T) -> Bag {
        Bag::from_values(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Bag {
    type Item = &'a Value;
    type IntoIter = std::slice::Iter<'a, Value>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl IntoIterator for Bag {
    type Item = Value;
    type IntoIter = std::vec::IntoIter<Value>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// Multiset sum: `|x ⊎ y| = |x| + |y|`, duplicates preserved.
///
/// Errors when the two bags have incompatible element types; either
/// side may be empty.
pub fn bag_union(x: &Bag, y: &Bag) -> Result<Bag> {
    if let (Some(tx), Some(ty)) = (x.elem_type()?, y.elem_type()?) {
        if tx != ty {
            return Err(Error::TypeMismatch(format!(
                "bag union of Bag<{tx}> with Bag<{ty}>"
            )));
        }
    }
    // merge of two sorted runs
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    let (xs, ys) = (x.as_slice(), y.as_slice());
    while i < xs.len() && j < ys.len() {
        if xs[i] <= ys[j] {
            out.push(xs[i].clone());
            i += 1;
        } else {
            out.push(ys[j].clone());
            j += 1;
        }
    }
    out.extend_from_slice(&xs[i..]);
    out.extend_from_slice(&ys[j..]);
    Ok(Bag(out))
}

/// True iff the two bags are equal as multisets.
pub fn multiset_equal(x: &Bag, y: &Bag) -> bool {
    x == y
}

/// Structural equality with an absolute tolerance on floats.
///
/// With `tol == 0.0` this is exactly `==`. Bags are compared in their
/// canonical order, lists and tuples position by position.
pub fn values_equal_tol(a: &Value, b: &Value, tol: f64) -> bool {
    if tol == 0.0 {
        return a == b;
    }
    match (a, b) {
        (Value::Float(x), Value::Float(y)) => (x - y).abs() <= tol,
        (Value::Tuple(x), Value::Tuple(y)) | (Value::List(x), Value::List(y)) => {
            x.len() == y.len()
                && x.iter().zip(y).all(|(u, v)| values_equal_tol(u, v, tol))
        }
        (Value::Bag(x), Value::Bag(y)) => {
            x.len() == y.len()
                && x.iter()
                    .zip(y.iter())
                    .all(|(u, v)| values_equal_tol(u, v, tol))
        }
        _ => a == b,
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Str(v) => write!(f, "{v:?}"),
            Value::Tuple(items) => write_seq(f, "(", items, ")"),
            Value::Bag(b) => write_seq(f, "{{", b.as_slice(), "}}"),
            Value::List(items) => write_seq(f, "[", items, "]"),
        }
    }
}

fn write_seq(f: &mut fmt::Formatter<'_>, open: &str, items: &[Value], close: &str) -> fmt::Result {
    write!(f, "{open}")?;
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{v}")?;
    }
    write!(f, "{close}")
}
