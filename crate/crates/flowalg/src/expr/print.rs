//! Pretty-printer. `parse_expr(print_expr(e))` is structurally `e`.

use super::{BinOp, Expr, UnaryOp};

// precedence levels, loosest to tightest
const P_IF: u8 = 0;
const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_CMP: u8 = 3;
const P_ADD: u8 = 4;
const P_MUL: u8 = 5;
const P_UNARY: u8 = 6;
const P_POSTFIX: u8 = 7;
const P_ATOM: u8 = 8;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::If(..) => P_IF,
        Expr::Binary(op, ..) => match op {
            BinOp::Or => P_OR,
            BinOp::And => P_AND,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => P_CMP,
            BinOp::Add | BinOp::Sub => P_ADD,
            BinOp::Mul | BinOp::Div => P_MUL,
        },
        Expr::Unary(..) => P_UNARY,
        Expr::Proj(..) => P_POSTFIX,
        _ => P_ATOM,
    }
}

fn op_str(op: BinOp) -> &'static str {
    match op {
        BinOp::Or => "or",
        BinOp::And => "and",
        BinOp::Eq => "==",
        BinOp::Ne => "!=",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
    }
}

/// Renders an expression in concrete syntax with minimal parentheses.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write(e, 0, &mut out);
    out
}

fn write_at(e: &Expr, min: u8, out: &mut String) {
    if prec(e) < min {
        out.push('(');
        write(e, 0, out);
        out.push(')');
    } else {
        write(e, min, out);
    }
}

fn write(e: &Expr, _min: u8, out: &mut String) {
    match e {
        Expr::Var(name) => out.push_str(name),
        Expr::LitInt(i) => out.push_str(&i.to_string()),
        Expr::LitFloat(f) => out.push_str(&format!("{f:?}")),
        Expr::LitBool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::LitStr(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    other => out.push(other),
                }
            }
            out.push('"');
        }
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnaryOp::Not => '!',
                UnaryOp::Neg => '-',
            });
            write_at(inner, P_UNARY, out);
        }
        Expr::Binary(op, lhs, rhs) => {
            let p = prec(e);
            // comparisons do not associate at all, so a comparison child
            // needs parens on either side; left-associative chains only
            // need them on an equal-precedence right child
            let left_min = if p == P_CMP { p + 1 } else { p };
            write_at(lhs, left_min, out);
            out.push(' ');
            out.push_str(op_str(*op));
            out.push(' ');
            write_at(rhs, p + 1, out);
        }
        Expr::If(cond, then_branch, else_branch) => {
            out.push_str("if ");
            write_at(cond, P_OR, out);
            out.push_str(" then ");
            write_at(then_branch, P_IF, out);
            out.push_str(" else ");
            write_at(else_branch, P_IF, out);
        }
        Expr::TupleCtor(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_at(item, P_IF, out);
            }
            out.push(')');
        }
        Expr::Proj(inner, idx) => {
            // a literal base would re-lex as a float: (1).2 not 1.2
            if matches!(**inner, Expr::LitInt(_) | Expr::LitFloat(_)) {
                out.push('(');
                write(inner, 0, out);
                out.push(')');
            } else {
                write_at(inner, P_POSTFIX, out);
            }
            out.push('.');
            out.push_str(&idx.to_string());
        }
        Expr::StartsWith(a, b) => call2("startsWith", a, b, out),
        Expr::Contains(a, b) => call2("contains", a, b, out),
        Expr::Concat(a, b) => call2("concat", a, b, out),
        Expr::Size(inner) => call1("size", inner, out),
        Expr::Singleton(inner) => call1("singleton", inner, out),
        Expr::EmptyBag => out.push_str("emptyBag"),
        Expr::BagMap { var, body, bag } => {
            out.push_str("bmap(");
            out.push_str(var);
            out.push_str(" -> ");
            write_at(body, P_IF, out);
            out.push_str(", ");
            write_at(bag, P_IF, out);
            out.push(')');
        }
    }
}

fn call1(name: &str, a: &Expr, out: &mut String) {
    out.push_str(name);
    out.push('(');
    write_at(a, P_IF, out);
    out.push(')');
}

fn call2(name: &str, a: &Expr, b: &Expr, out: &mut String) {
    out.push_str(name);
    out.push('(');
    write_at(a, P_IF, out);
    out.push_str(", ");
    write_at(b, P_IF, out);
    out.push(')');
}
