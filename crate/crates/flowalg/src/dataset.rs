//! JSON encoding of values and dataset files.
//!
//! A dataset file is one top-level JSON array. Inside it, integers map
//! to `Int`, numbers with a fraction or exponent to `Float`, strings to
//! `Str`, booleans to `Bool`, plain arrays to bags, `{"tuple": [...]}`
//! wrappers to tuples and `{"list": [...]}` wrappers to lists. Output
//! files use the same encoding with bag elements in canonical order.

use serde_json::Value as Json;

use crate::error::{Error, Result};
use crate::types::ElemType;
use crate::value::{Bag, Value};

/// Encodes a value into its JSON form.
pub fn encode_value(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        Value::Float(f) => Json::from(*f),
        Value::Bool(b) => Json::from(*b),
        Value::Str(s) => Json::from(s.as_str()),
        Value::Tuple(items) => {
            let arr: Vec<Json> = items.iter().map(encode_value).collect();
            serde_json::json!({ "tuple": arr })
        }
        Value::Bag(b) => Json::Array(b.iter().map(encode_value).collect()),
        Value::List(items) => {
            let arr: Vec<Json> = items.iter().map(encode_value).collect();
            serde_json::json!({ "list": arr })
        }
    }
}

/// Decodes a JSON value produced by [`encode_value`].
pub fn decode_value(j: &Json) -> Result<Value> {
    match j {
        Json::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Value::Int(i))
            } else if let Some(f) = n.as_f64() {
                Value::float(f)
            } else {
                Err(Error::Decode(format!("number {n} out of range")))
            }
        }
        Json::Bool(b) => Ok(Value::Bool(*b)),
        Json::String(s) => Ok(Value::Str(s.clone())),
        Json::Array(items) => {
            let vals = items.iter().map(decode_value).collect::<Result<Vec<_>>>()?;
            Ok(Value::Bag(Bag::from_values(vals)))
        }
        Json::Object(map) => {
            if map.len() != 1 {
                return Err(Error::Decode(
                    "object values must be a single `tuple` or `list` wrapper".into(),
                ));
            }
            let (key, inner) = map.iter().next().unwrap();
            let items = inner.as_array().ok_or_else(|| {
                Error::Decode(format!("`{key}` wrapper must hold an array"))
            })?;
            let vals = items.iter().map(decode_value).collect::<Result<Vec<_>>>()?;
            match key.as_str() {
                "tuple" => Value::tuple(vals),
                "list" => Ok(Value::List(vals)),
                other => Err(Error::Decode(format!("unknown wrapper `{other}`"))),
            }
        }
        Json::Null => Err(Error::Decode("null is not a value".into())),
    }
}

/// Parses a dataset from JSON text against its declared type, which
/// must be `Bag<t>` or `List<t>`. The top-level array becomes a bag or
/// a list accordingly and every element is checked against `t`.
pub fn parse_dataset(text: &str, ty: &ElemType) -> Result<Value> {
    let json: Json =
        serde_json::from_str(text).map_err(|e| Error::Decode(format!("bad JSON: {e}")))?;
    let items = json
        .as_array()
        .ok_or_else(|| Error::Decode("dataset file must be one top-level array".into()))?;
    let elem_ty = ty.collection_elem().ok_or_else(|| {
        Error::TypeMismatch(format!("dataset type must be Bag<_> or List<_>, got {ty}"))
    })?;
    let vals = items.iter().map(decode_value).collect::<Result<Vec<_>>>()?;
    for v in &vals {
        if !v.conforms(elem_ty) {
            return Err(Error::TypeMismatch(format!(
                "element {v} does not conform to {elem_ty}"
            )));
        }
    }
    match ty {
        ElemType::Bag(_) => Ok(Value::Bag(Bag::from_values(vals))),
        _ => Ok(Value::List(vals)),
    }
}

/// Serializes a dataset (a bag or list value) as a top-level JSON
/// array; bags are emitted in canonical order, lists in their order.
pub fn write_dataset(v: &Value) -> Result<String> {
    let items: Vec<Json> = match v {
        Value::Bag(b) => b.iter().map(encode_value).collect(),
        Value::List(items) => items.iter().map(encode_value).collect(),
        other => {
            return Err(Error::TypeMismatch(format!(
                "a dataset is a bag or a list, got {other}"
            )))
        }
    };
    let mut out = serde_json::to_string_pretty(&Json::Array(items)).expect("json");
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_number_kinds() {
        let v = decode_value(&serde_json::json!(3)).unwrap();
        assert_eq!(v, Value::Int(3));
        let v = decode_value(&serde_json::json!(3.0)).unwrap();
        assert_eq!(v, Value::Float(3.0));
        let v = decode_value(&serde_json::json!(2e2)).unwrap();
        assert_eq!(v, Value::Float(200.0));
    }

    #[test]
    fn decode_wrappers() {
        let v = decode_value(&serde_json::json!({"tuple": [1, "a"]})).unwrap();
        assert_eq!(v, Value::pair(Value::Int(1), Value::Str("a".into())));
        let v = decode_value(&serde_json::json!({"list": [2, 1]})).unwrap();
        assert_eq!(v, Value::List(vec![Value::Int(2), Value::Int(1)]));
        let v = decode_value(&serde_json::json!([2, 1])).unwrap();
        assert_eq!(
            v,
            Value::Bag(Bag::from_values(vec![Value::Int(1), Value::Int(2)]))
        );
    }

    #[test]
    fn parse_dataset_checks_types() {
        let ty: ElemType = "Bag<Int>".parse().unwrap();
        assert!(parse_dataset("[1, 2, 3]", &ty).is_ok());
        assert!(parse_dataset("[1, \"x\"]", &ty).is_err());
        assert!(parse_dataset("{\"a\": 1}", &ty).is_err());
    }

    #[test]
    fn bag_output_is_canonical() {
        let ty: ElemType = "Bag<Int>".parse().unwrap();
        let v = parse_dataset("[3, 1, 2]", &ty).unwrap();
        let text = write_dataset(&v).unwrap();
        let again = parse_dataset(&text, &ty).unwrap();
        assert_eq!(v, again);
        assert!(text.find('1').unwrap() < text.find('3').unwrap());
    }
}
