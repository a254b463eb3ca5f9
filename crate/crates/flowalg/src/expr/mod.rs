//! The mini-language for user functions passed to transformations.
//!
//! A function source looks like
//!
//! ```text
//! (x: Int, y: Int) -> Int => if x > y then x else y
//! ```
//!
//! Functions are parsed once, type checked against their declared
//! parameter and return types, and then evaluated strictly. The
//! mutation engine rewrites their syntax trees directly.

mod eval;
mod parse;
mod print;
mod typecheck;

pub use eval::eval_expr;
pub use parse::{parse_expr, parse_func};
pub use print::print_expr;

use crate::error::{Error, Result};
use crate::types::ElemType;
use crate::value::Value;

/// Unary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

/// Binary operators, in increasing precedence groups: `or`, `and`,
/// comparisons, additive, multiplicative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    LitInt(i64),
    LitFloat(f64),
    LitBool(bool),
    LitStr(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `(e1, e2, ...)` with arity >= 2.
    TupleCtor(Vec<Expr>),
    /// `e.N`, 1-indexed static projection.
    Proj(Box<Expr>, usize),
    StartsWith(Box<Expr>, Box<Expr>),
    Contains(Box<Expr>, Box<Expr>),
    Concat(Box<Expr>, Box<Expr>),
    /// Number of elements in a bag.
    Size(Box<Expr>),
    /// `singleton(e)` — the one-element bag.
    Singleton(Box<Expr>),
    EmptyBag,
    /// `bmap(x -> body, bag)` — per-element map inside an expression.
    BagMap {
        var: String,
        body: Box<Expr>,
        bag: Box<Expr>,
    },
}

impl Expr {
    /// Substitutes `replacement` for every free occurrence of `name`,
    /// respecting `bmap` binders.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v == name => replacement.clone(),
            Expr::Var(_)
            | Expr::LitInt(_)
            | Expr::LitFloat(_)
            | Expr::LitBool(_)
            | Expr::LitStr(_)
            | Expr::EmptyBag => self.clone(),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.substitute(name, replacement))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute(name, replacement)),
                Box::new(b.substitute(name, replacement)),
            ),
            Expr::If(c, t, e) => Expr::If(
                Box::new(c.substitute(name, replacement)),
                Box::new(t.substitute(name, replacement)),
                Box::new(e.substitute(name, replacement)),
            ),
            Expr::TupleCtor(items) => Expr::TupleCtor(
                items.iter().map(|e| e.substitute(name, replacement)).collect(),
            ),
            Expr::Proj(e, i) => Expr::Proj(Box::new(e.substitute(name, replacement)), *i),
            Expr::StartsWith(a, b) => Expr::StartsWith(
                Box::new(a.substitute(name, replacement)),
                Box::new(b.substitute(name, replacement)),
            ),
            Expr::Contains(a, b) => Expr::Contains(
                Box::new(a.substitute(name, replacement)),
                Box::new(b.substitute(name, replacement)),
            ),
            Expr::Concat(a, b) => Expr::Concat(
                Box::new(a.substitute(name, replacement)),
                Box::new(b.substitute(name, replacement)),
            ),
            Expr::Size(e) => Expr::Size(Box::new(e.substitute(name, replacement))),
            Expr::Singleton(e) => Expr::Singleton(Box::new(e.substitute(name, replacement))),
            Expr::BagMap { var, body, bag } => {
                let bag = Box::new(bag.substitute(name, replacement));
                if var == name {
                    // shadowed inside the body
                    Expr::BagMap {
                        var: var.clone(),
                        body: body.clone(),
                        bag,
                    }
                } else {
                    Expr::BagMap {
                        var: var.clone(),
                        body: Box::new(body.substitute(name, replacement)),
                        bag,
                    }
                }
            }
        }
    }
}

/// A typed user function: parameter list, declared return type and body.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncDef {
    pub params: Vec<(String, ElemType)>,
    pub return_type: ElemType,
    pub body: Expr,
}

impl FuncDef {
    /// Parses a function from its source form.
    pub fn parse(src: &str) -> Result<FuncDef> {
        parse_func(src)
    }

    /// Type checks the function and returns the inferred body type,
    /// which always equals the declared return type on success.
    pub fn typecheck(&self) -> Result<ElemType> {
        typecheck::typecheck_func(self)
    }

    /// Applies the function to argument values. The function must have
    /// been type checked; arguments must match the parameter types.
    pub fn eval(&self, args: &[Value]) -> Result<Value> {
        if args.len() != self.params.len() {
            return Err(Error::Arity(format!(
                "function of arity {} applied to {} arguments",
                self.params.len(),
                args.len()
            )));
        }
        for ((name, ty), arg) in self.params.iter().zip(args) {
            if !arg.conforms(ty) {
                return Err(Error::TypeMismatch(format!(
                    "argument for `{name}` does not conform to {ty}"
                )));
            }
        }
        let mut env: Vec<(String, Value)> = self
            .params
            .iter()
            .zip(args)
            .map(|((name, _), v)| (name.clone(), v.clone()))
            .collect();
        eval_expr(&self.body, &mut env)
    }

    /// The source form, re-parseable by [`FuncDef::parse`].
    pub fn to_source(&self) -> String {
        let params = self
            .params
            .iter()
            .map(|(n, t)| format!("{n}: {t}"))
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "({params}) -> {} => {}",
            self.return_type,
            print_expr(&self.body)
        )
    }
}
