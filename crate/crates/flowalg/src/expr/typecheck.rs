//! Static type checking for expressions and function definitions.
//!
//! Inference is structural. The only flexible point is `emptyBag`,
//! whose element type is a hole filled by unification — an `if` with
//! one empty-bag branch takes the other branch's bag type, and a body
//! that stays polymorphic is resolved by the declared return type.

use crate::error::{Error, Result};
use crate::types::ElemType;

use super::{print_expr, BinOp, Expr, FuncDef, UnaryOp};

/// Inference-time type: the element grammar plus an unknown.
#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Int,
    Float,
    Bool,
    Str,
    Tuple(Vec<Ty>),
    Bag(Box<Ty>),
    List(Box<Ty>),
    Hole,
}

impl Ty {
    fn from_elem(t: &ElemType) -> Ty {
        match t {
            ElemType::Int => Ty::Int,
            ElemType::Float => Ty::Float,
            ElemType::Bool => Ty::Bool,
            ElemType::Str => Ty::Str,
            ElemType::Tuple(items) => Ty::Tuple(items.iter().map(Ty::from_elem).collect()),
            ElemType::Bag(t) => Ty::Bag(Box::new(Ty::from_elem(t))),
            ElemType::List(t) => Ty::List(Box::new(Ty::from_elem(t))),
        }
    }

    fn to_elem(&self) -> Option<ElemType> {
        match self {
            Ty::Int => Some(ElemType::Int),
            Ty::Float => Some(ElemType::Float),
            Ty::Bool => Some(ElemType::Bool),
            Ty::Str => Some(ElemType::Str),
            Ty::Tuple(items) => Some(ElemType::Tuple(
                items.iter().map(Ty::to_elem).collect::<Option<Vec<_>>>()?,
            )),
            Ty::Bag(t) => Some(ElemType::bag(t.to_elem()?)),
            Ty::List(t) => Some(ElemType::list(t.to_elem()?)),
            Ty::Hole => None,
        }
    }

    fn display(&self) -> String {
        match self.to_elem() {
            Some(t) => t.to_string(),
            None => match self {
                Ty::Hole => "_".to_string(),
                Ty::Bag(t) => format!("Bag<{}>", t.display()),
                Ty::List(t) => format!("List<{}>", t.display()),
                Ty::Tuple(items) => format!(
                    "Tuple<{}>",
                    items.iter().map(Ty::display).collect::<Vec<_>>().join(", ")
                ),
                _ => unreachable!(),
            },
        }
    }
}

fn unify(a: &Ty, b: &Ty) -> Option<Ty> {
    match (a, b) {
        (Ty::Hole, other) | (other, Ty::Hole) => Some(other.clone()),
        (Ty::Int, Ty::Int) => Some(Ty::Int),
        (Ty::Float, Ty::Float) => Some(Ty::Float),
        (Ty::Bool, Ty::Bool) => Some(Ty::Bool),
        (Ty::Str, Ty::Str) => Some(Ty::Str),
        (Ty::Tuple(x), Ty::Tuple(y)) if x.len() == y.len() => {
            let items = x
                .iter()
                .zip(y)
                .map(|(u, v)| unify(u, v))
                .collect::<Option<Vec<_>>>()?;
            Some(Ty::Tuple(items))
        }
        (Ty::Bag(x), Ty::Bag(y)) => Some(Ty::Bag(Box::new(unify(x, y)?))),
        (Ty::List(x), Ty::List(y)) => Some(Ty::List(Box::new(unify(x, y)?))),
        _ => None,
    }
}

struct Ctx {
    env: Vec<(String, Ty)>,
}

impl Ctx {
    fn err(&self, node: &Expr, msg: impl std::fmt::Display) -> Error {
        Error::Type(format!("in `{}`: {msg}", print_expr(node)))
    }

    fn infer(&mut self, e: &Expr) -> Result<Ty> {
        match e {
            Expr::Var(name) => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| Error::Unbound(name.clone())),
            Expr::LitInt(_) => Ok(Ty::Int),
            Expr::LitFloat(_) => Ok(Ty::Float),
            Expr::LitBool(_) => Ok(Ty::Bool),
            Expr::LitStr(_) => Ok(Ty::Str),
            Expr::Unary(UnaryOp::Not, inner) => {
                let t = self.infer(inner)?;
                unify(&t, &Ty::Bool)
                    .ok_or_else(|| self.err(e, format!("`!` needs Bool, got {}", t.display())))
            }
            Expr::Unary(UnaryOp::Neg, inner) => {
                let t = self.infer(inner)?;
                match t {
                    Ty::Int | Ty::Float => Ok(t),
                    other => Err(self.err(e, format!("`-` needs Int or Float, got {}", other.display()))),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let lt = self.infer(lhs)?;
                let rt = self.infer(rhs)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => match (&lt, &rt) {
                        (Ty::Int, Ty::Int) => Ok(Ty::Int),
                        (Ty::Int | Ty::Float, Ty::Int | Ty::Float) => Ok(Ty::Float),
                        _ => Err(self.err(
                            e,
                            format!(
                                "arithmetic needs numeric operands, got {} and {}",
                                lt.display(),
                                rt.display()
                            ),
                        )),
                    },
                    BinOp::And | BinOp::Or => {
                        if unify(&lt, &Ty::Bool).is_some() && unify(&rt, &Ty::Bool).is_some() {
                            Ok(Ty::Bool)
                        } else {
                            Err(self.err(e, "logical operators need Bool operands"))
                        }
                    }
                    BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        unify(&lt, &rt).map(|_| Ty::Bool).ok_or_else(|| {
                            self.err(
                                e,
                                format!(
                                    "cannot compare {} with {}",
                                    lt.display(),
                                    rt.display()
                                ),
                            )
                        })
                    }
                }
            }
            Expr::If(cond, then_branch, else_branch) => {
                let ct = self.infer(cond)?;
                if unify(&ct, &Ty::Bool).is_none() {
                    return Err(self.err(e, format!("condition must be Bool, got {}", ct.display())));
                }
                let tt = self.infer(then_branch)?;
                let et = self.infer(else_branch)?;
                unify(&tt, &et).ok_or_else(|| {
                    self.err(
                        e,
                        format!(
                            "branches disagree: {} vs {}",
                            tt.display(),
                            et.display()
                        ),
                    )
                })
            }
            Expr::TupleCtor(items) => {
                if items.len() < 2 {
                    return Err(Error::Arity("tuple arity must be at least 2".into()));
                }
                Ok(Ty::Tuple(
                    items.iter().map(|i| self.infer(i)).collect::<Result<Vec<_>>>()?,
                ))
            }
            Expr::Proj(inner, idx) => {
                let t = self.infer(inner)?;
                match t {
                    Ty::Tuple(items) => {
                        if *idx >= 1 && *idx <= items.len() {
                            Ok(items[*idx - 1].clone())
                        } else {
                            Err(Error::Arity(format!(
                                "projection .{idx} out of range for a {}-tuple",
                                items.len()
                            )))
                        }
                    }
                    other => Err(self.err(e, format!("projection needs a tuple, got {}", other.display()))),
                }
            }
            Expr::StartsWith(a, b) | Expr::Contains(a, b) | Expr::Concat(a, b) => {
                let at = self.infer(a)?;
                let bt = self.infer(b)?;
                if unify(&at, &Ty::Str).is_none() || unify(&bt, &Ty::Str).is_none() {
                    return Err(self.err(e, "string builtins need Str arguments"));
                }
                Ok(if matches!(e, Expr::Concat(..)) {
                    Ty::Str
                } else {
                    Ty::Bool
                })
            }
            Expr::Size(inner) => {
                let t = self.infer(inner)?;
                match unify(&t, &Ty::Bag(Box::new(Ty::Hole))) {
                    Some(_) => Ok(Ty::Int),
                    None => Err(self.err(e, format!("size needs a bag, got {}", t.display()))),
                }
            }
            Expr::Singleton(inner) => Ok(Ty::Bag(Box::new(self.infer(inner)?))),
            Expr::EmptyBag => Ok(Ty::Bag(Box::new(Ty::Hole))),
            Expr::BagMap { var, body, bag } => {
                let bag_ty = self.infer(bag)?;
                let elem = match unify(&bag_ty, &Ty::Bag(Box::new(Ty::Hole))) {
                    Some(Ty::Bag(elem)) => *elem,
                    _ => {
                        return Err(self.err(
                            e,
                            format!("bmap needs a bag, got {}", bag_ty.display()),
                        ))
                    }
                };
                self.env.push((var.clone(), elem));
                let body_ty = self.infer(body);
                self.env.pop();
                Ok(Ty::Bag(Box::new(body_ty?)))
            }
        }
    }
}

/// Checks a function definition and returns the inferred body type.
///
/// Fails unless the body's type equals the declared return type; also
/// enforces the arity-1-or-2 shape of transformation functions.
pub fn typecheck_func(f: &FuncDef) -> Result<ElemType> {
    if f.params.is_empty() || f.params.len() > 2 {
        return Err(Error::Arity(format!(
            "functions take 1 or 2 parameters, got {}",
            f.params.len()
        )));
    }
    for i in 1..f.params.len() {
        if f.params[i].0 == f.params[0].0 {
            return Err(Error::Type(format!(
                "duplicate parameter name `{}`",
                f.params[i].0
            )));
        }
    }
    let mut ctx = Ctx {
        env: f
            .params
            .iter()
            .map(|(n, t)| (n.clone(), Ty::from_elem(t)))
            .collect(),
    };
    let body_ty = ctx.infer(&f.body)?;
    let declared = Ty::from_elem(&f.return_type);
    match unify(&body_ty, &declared) {
        Some(resolved) if resolved == declared => Ok(f.return_type.clone()),
        _ => Err(Error::Type(format!(
            "body has type {} but the function declares {}",
            body_ty.display(),
            f.return_type
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_func;

    fn check(src: &str) -> Result<ElemType> {
        parse_func(src)?.typecheck()
    }

    #[test]
    fn empty_bag_unifies_with_branches() {
        check("(x: Int) -> Bag<Int> => if x > 0 then singleton(x) else emptyBag").unwrap();
        check("(x: Int) -> Bag<Str> => emptyBag").unwrap();
    }

    #[test]
    fn projection_out_of_range() {
        let err = check("(x: Tuple<Int, Int>) -> Int => x.3").unwrap_err();
        assert!(matches!(err, Error::Arity(_)));
    }

    #[test]
    fn unbound_variable() {
        let err = check("(x: Int) -> Int => y").unwrap_err();
        assert!(matches!(err, Error::Unbound(_)));
    }

    #[test]
    fn mixed_arithmetic_promotes() {
        check("(x: Int) -> Float => x + 0.5").unwrap();
        assert!(check("(x: Int) -> Int => x + 0.5").is_err());
    }

    #[test]
    fn comparisons_need_equal_types() {
        assert!(check("(x: Int) -> Bool => x == 1.0").is_err());
        check("(x: Tuple<Int, Str>) -> Bool => x == (1, \"a\")").unwrap();
    }

    #[test]
    fn declared_return_must_match() {
        let err = check("(x: Int) -> Str => x + 1").unwrap_err();
        assert!(matches!(err, Error::Type(_)));
    }
}
