//! Strict evaluation of type-checked expressions.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::value::{canonical_compare, Bag, Value};

use super::{BinOp, Expr, UnaryOp};

/// Evaluates an expression under a variable environment. Conditionals
/// evaluate only the taken branch; everything else is strict.
pub fn eval_expr(e: &Expr, env: &mut Vec<(String, Value)>) -> Result<Value> {
    match e {
        Expr::Var(name) => env
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Unbound(name.clone())),
        Expr::LitInt(i) => Ok(Value::Int(*i)),
        Expr::LitFloat(f) => Value::float(*f),
        Expr::LitBool(b) => Ok(Value::Bool(*b)),
        Expr::LitStr(s) => Ok(Value::Str(s.clone())),
        Expr::Unary(UnaryOp::Not, inner) => match eval_expr(inner, env)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => Err(type_bug("!", &other)),
        },
        Expr::Unary(UnaryOp::Neg, inner) => match eval_expr(inner, env)? {
            Value::Int(i) => Ok(Value::Int(i.wrapping_neg())),
            Value::Float(f) => Value::float(-f),
            other => Err(type_bug("-", &other)),
        },
        Expr::Binary(op, lhs, rhs) => {
            let a = eval_expr(lhs, env)?;
            let b = eval_expr(rhs, env)?;
            eval_binary(*op, a, b)
        }
        Expr::If(cond, then_branch, else_branch) => match eval_expr(cond, env)? {
            Value::Bool(true) => eval_expr(then_branch, env),
            Value::Bool(false) => eval_expr(else_branch, env),
            other => Err(type_bug("if", &other)),
        },
        Expr::TupleCtor(items) => {
            let vals = items
                .iter()
                .map(|i| eval_expr(i, env))
                .collect::<Result<Vec<_>>>()?;
            Value::tuple(vals)
        }
        Expr::Proj(inner, idx) => {
            let v = eval_expr(inner, env)?;
            let items = v.as_tuple()?;
            items
                .get(*idx - 1)
                .cloned()
                .ok_or_else(|| Error::Arity(format!("projection .{idx} out of range")))
        }
        Expr::StartsWith(a, b) => {
            let (a, b) = (eval_str(a, env)?, eval_str(b, env)?);
            Ok(Value::Bool(a.starts_with(&b)))
        }
        Expr::Contains(a, b) => {
            let (a, b) = (eval_str(a, env)?, eval_str(b, env)?);
            Ok(Value::Bool(a.contains(&b)))
        }
        Expr::Concat(a, b) => {
            let (a, b) = (eval_str(a, env)?, eval_str(b, env)?);
            Ok(Value::Str(a + &b))
        }
        Expr::Size(inner) => {
            let v = eval_expr(inner, env)?;
            Ok(Value::Int(v.as_bag()?.len() as i64))
        }
        Expr::Singleton(inner) => Ok(Value::Bag(Bag::singleton(eval_expr(inner, env)?))),
        Expr::EmptyBag => Ok(Value::Bag(Bag::empty())),
        Expr::BagMap { var, body, bag } => {
            let v = eval_expr(bag, env)?;
            let bag = v.as_bag()?;
            let mut out = Vec::with_capacity(bag.len());
            for elem in bag.iter() {
                env.push((var.clone(), elem.clone()));
                let r = eval_expr(body, env);
                env.pop();
                out.push(r?);
            }
            Ok(Value::Bag(Bag::from_values(out)))
        }
    }
}

fn eval_str(e: &Expr, env: &mut Vec<(String, Value)>) -> Result<String> {
    match eval_expr(e, env)? {
        Value::Str(s) => Ok(s),
        other => Err(type_bug("string builtin", &other)),
    }
}

fn type_bug(what: &str, got: &Value) -> Error {
    // unreachable after type checking; kept as a real error for safety
    Error::TypeMismatch(format!("`{what}` applied to unexpected value {got}"))
}

fn eval_binary(op: BinOp, a: Value, b: Value) -> Result<Value> {
    match op {
        BinOp::And => match (a, b) {
            (Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(x && y)),
            (a, _) => Err(type_bug("and", &a)),
        },
        BinOp::Or => match (a, b) {
            (Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(x || y)),
            (a, _) => Err(type_bug("or", &a)),
        },
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => arith(op, a, b),
        BinOp::Eq => Ok(Value::Bool(a == b)),
        BinOp::Ne => Ok(Value::Bool(a != b)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = canonical_compare(&a, &b)?;
            Ok(Value::Bool(match op {
                BinOp::Lt => ord == Ordering::Less,
                BinOp::Le => ord != Ordering::Greater,
                BinOp::Gt => ord == Ordering::Greater,
                _ => ord != Ordering::Less,
            }))
        }
    }
}

fn arith(op: BinOp, a: Value, b: Value) -> Result<Value> {
    match (&a, &b) {
        (Value::Int(x), Value::Int(y)) => {
            let (x, y) = (*x, *y);
            Ok(Value::Int(match op {
                BinOp::Add => x.wrapping_add(y),
                BinOp::Sub => x.wrapping_sub(y),
                BinOp::Mul => x.wrapping_mul(y),
                BinOp::Div => {
                    if y == 0 {
                        return Err(Error::DivisionByZero);
                    }
                    x.wrapping_div(y)
                }
                _ => unreachable!(),
            }))
        }
        (Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_)) => {
            let x = as_f64(&a);
            let y = as_f64(&b);
            let r = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(Error::DivisionByZero);
                    }
                    x / y
                }
                _ => unreachable!(),
            };
            if !r.is_finite() {
                return Err(Error::NonFinite);
            }
            Value::float(r)
        }
        _ => Err(type_bug("arithmetic", &a)),
    }
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Float(f) => *f,
        _ => unreachable!("guarded by caller"),
    }
}
