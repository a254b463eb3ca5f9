//! Lexer and recursive-descent parser for the expression language.
//!
//! Precedence, tightest first: projection, unary, `* /`, `+ -`,
//! comparisons, `and`, `or`, `if`. Comparisons do not associate.

use crate::error::{Error, Result};
use crate::types::ElemType;

use super::{BinOp, Expr, FuncDef, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    If,
    Then,
    Else,
    True,
    False,
    And,
    Or,
    Not,
    Plus,
    Minus,
    Star,
    Slash,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Arrow,      // ->
    FatArrow,   // =>
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    /// suppress fraction parsing right after `.` (projection indices)
    after_dot: bool,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
            after_dot: false,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn next_token(&mut self) -> Result<Spanned> {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.bump();
        }
        let (line, col) = (self.line, self.col);
        let spanned = |tok| Spanned { tok, line, col };
        let Some(c) = self.peek() else {
            return Ok(spanned(Tok::Eof));
        };
        let was_after_dot = self.after_dot;
        self.after_dot = false;
        match c {
            b'0'..=b'9' => self.lex_number(!was_after_dot).map(spanned),
            b'"' => self.lex_string().map(spanned),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut name = String::new();
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    name.push(self.bump() as char);
                }
                let tok = match name.as_str() {
                    "if" => Tok::If,
                    "then" => Tok::Then,
                    "else" => Tok::Else,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    _ => Tok::Ident(name),
                };
                Ok(spanned(tok))
            }
            b'(' => {
                self.bump();
                Ok(spanned(Tok::LParen))
            }
            b')' => {
                self.bump();
                Ok(spanned(Tok::RParen))
            }
            b',' => {
                self.bump();
                Ok(spanned(Tok::Comma))
            }
            b'.' => {
                self.bump();
                self.after_dot = true;
                Ok(spanned(Tok::Dot))
            }
            b':' => {
                self.bump();
                Ok(spanned(Tok::Colon))
            }
            b'+' => {
                self.bump();
                Ok(spanned(Tok::Plus))
            }
            b'-' => {
                self.bump();
                if self.peek() == Some(b'>') {
                    self.bump();
                    Ok(spanned(Tok::Arrow))
                } else {
                    Ok(spanned(Tok::Minus))
                }
            }
            b'*' => {
                self.bump();
                Ok(spanned(Tok::Star))
            }
            b'/' => {
                self.bump();
                Ok(spanned(Tok::Slash))
            }
            b'=' => {
                self.bump();
                match self.peek() {
                    Some(b'=') => {
                        self.bump();
                        Ok(spanned(Tok::EqEq))
                    }
                    Some(b'>') => {
                        self.bump();
                        Ok(spanned(Tok::FatArrow))
                    }
                    _ => Err(self.err("expected `==` or `=>`")),
                }
            }
            b'!' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Ok(spanned(Tok::NotEq))
                } else {
                    Ok(spanned(Tok::Not))
                }
            }
            b'<' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Ok(spanned(Tok::Le))
                } else {
                    Ok(spanned(Tok::Lt))
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Ok(spanned(Tok::Ge))
                } else {
                    Ok(spanned(Tok::Gt))
                }
            }
            b'&' => {
                self.bump();
                if self.peek() == Some(b'&') {
                    self.bump();
                    Ok(spanned(Tok::And))
                } else {
                    Err(self.err("expected `&&`"))
                }
            }
            b'|' => {
                self.bump();
                if self.peek() == Some(b'|') {
                    self.bump();
                    Ok(spanned(Tok::Or))
                } else {
                    Err(self.err("expected `||`"))
                }
            }
            other => Err(self.err(format!("unexpected character `{}`", other as char))),
        }
    }

    fn lex_number(&mut self, allow_fraction: bool) -> Result<Tok> {
        let mut text = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            text.push(self.bump() as char);
        }
        let mut is_float = false;
        if allow_fraction
            && self.peek() == Some(b'.')
            && matches!(self.peek2(), Some(c) if c.is_ascii_digit())
        {
            is_float = true;
            text.push(self.bump() as char);
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                text.push(self.bump() as char);
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mut lookahead = self.pos + 1;
            if matches!(self.src.get(lookahead), Some(b'+' | b'-')) {
                lookahead += 1;
            }
            if matches!(self.src.get(lookahead), Some(c) if c.is_ascii_digit()) {
                is_float = true;
                text.push(self.bump() as char);
                if matches!(self.peek(), Some(b'+' | b'-')) {
                    text.push(self.bump() as char);
                }
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    text.push(self.bump() as char);
                }
            }
        }
        if is_float {
            let f: f64 = text.parse().map_err(|_| self.err("bad float literal"))?;
            if !f.is_finite() {
                return Err(self.err("float literal out of range"));
            }
            Ok(Tok::Float(f))
        } else {
            let i: i64 = text
                .parse()
                .map_err(|_| self.err("integer literal out of range"))?;
            Ok(Tok::Int(i))
        }
    }

    fn lex_string(&mut self) -> Result<Tok> {
        self.bump(); // opening quote
        let mut text = String::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated string literal")),
                Some(b'"') => {
                    self.bump();
                    return Ok(Tok::Str(text));
                }
                Some(b'\\') => {
                    self.bump();
                    match self.peek() {
                        Some(b'"') => text.push('"'),
                        Some(b'\\') => text.push('\\'),
                        Some(b'n') => text.push('\n'),
                        Some(b't') => text.push('\t'),
                        _ => return Err(self.err("unknown escape sequence")),
                    }
                    self.bump();
                }
                Some(_) => {
                    // copy a full UTF-8 scalar
                    let start = self.pos;
                    self.bump();
                    while self.pos < self.src.len() && self.src[self.pos] & 0xC0 == 0x80 {
                        self.bump();
                    }
                    text.push_str(std::str::from_utf8(&self.src[start..self.pos]).map_err(
                        |_| self.err("invalid UTF-8 in string literal"),
                    )?);
                }
            }
        }
    }
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser> {
        let mut lexer = Lexer::new(src);
        let mut tokens = Vec::new();
        loop {
            let t = lexer.next_token()?;
            let done = t.tok == Tok::Eof;
            tokens.push(t);
            if done {
                break;
            }
        }
        Ok(Parser { tokens, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> Error {
        let s = &self.tokens[self.pos];
        Error::Syntax {
            line: s.line,
            col: s.col,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::If {
            self.bump();
            let cond = self.expr()?;
            self.expect(Tok::Then, "`then`")?;
            let then_branch = self.expr()?;
            self.expect(Tok::Else, "`else`")?;
            let else_branch = self.expr()?;
            Ok(Expr::If(
                Box::new(cond),
                Box::new(then_branch),
                Box::new(else_branch),
            ))
        } else {
            self.or_expr()
        }
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.cmp_expr()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.cmp_expr()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add_expr()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn add_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn mul_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary_expr(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary_expr()?)))
            }
            Tok::Minus => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary_expr()?)))
            }
            _ => self.postfix_expr(),
        }
    }

    fn postfix_expr(&mut self) -> Result<Expr> {
        let mut e = self.atom()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            match self.bump() {
                Tok::Int(i) if i >= 1 => {
                    e = Expr::Proj(Box::new(e), i as usize);
                }
                _ => return Err(self.err_here("projection index must be a positive integer")),
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::LitInt(i))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Expr::LitFloat(f))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::LitStr(s))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::LitBool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::LitBool(false))
            }
            Tok::LParen => {
                self.bump();
                let first = self.expr()?;
                if *self.peek() == Tok::Comma {
                    let mut items = vec![first];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        items.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)` after tuple")?;
                    Ok(Expr::TupleCtor(items))
                } else {
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(first)
                }
            }
            Tok::Ident(name) => {
                self.bump();
                self.builtin_or_var(name)
            }
            _ => Err(self.err_here("expected an expression")),
        }
    }

    fn builtin_or_var(&mut self, name: String) -> Result<Expr> {
        match name.as_str() {
            "emptyBag" => return Ok(Expr::EmptyBag),
            "startsWith" | "contains" | "concat" => {
                self.expect(Tok::LParen, "`(`")?;
                let a = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let (a, b) = (Box::new(a), Box::new(b));
                return Ok(match name.as_str() {
                    "startsWith" => Expr::StartsWith(a, b),
                    "contains" => Expr::Contains(a, b),
                    _ => Expr::Concat(a, b),
                });
            }
            "size" | "singleton" => {
                self.expect(Tok::LParen, "`(`")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(if name == "size" {
                    Expr::Size(Box::new(e))
                } else {
                    Expr::Singleton(Box::new(e))
                });
            }
            "bmap" => {
                self.expect(Tok::LParen, "`(`")?;
                let var = self.expect_ident("a binder name")?;
                self.expect(Tok::Arrow, "`->`")?;
                let body = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let bag = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(Expr::BagMap {
                    var,
                    body: Box::new(body),
                    bag: Box::new(bag),
                });
            }
            _ => {}
        }
        Ok(Expr::Var(name))
    }

    fn elem_type(&mut self) -> Result<ElemType> {
        // types inside function sources reuse the standalone grammar;
        // collect tokens until the type is complete
        let mut depth = 0usize;
        let mut text = String::new();
        loop {
            match self.peek() {
                Tok::Ident(name) => {
                    text.push_str(name);
                    self.bump();
                    if *self.peek() == Tok::Lt {
                        text.push('<');
                        depth += 1;
                        self.bump();
                    } else if depth == 0 {
                        break;
                    }
                }
                Tok::Gt if depth > 0 => {
                    text.push('>');
                    depth -= 1;
                    self.bump();
                    if depth == 0 {
                        break;
                    }
                }
                Tok::Comma if depth > 0 => {
                    text.push(',');
                    self.bump();
                }
                _ => return Err(self.err_here("expected a type")),
            }
        }
        text.parse()
            .map_err(|_| self.err_here(format!("malformed type `{text}`")))
    }

    fn func(&mut self) -> Result<FuncDef> {
        self.expect(Tok::LParen, "`(` opening the parameter list")?;
        let mut params = Vec::new();
        loop {
            let name = self.expect_ident("a parameter name")?;
            self.expect(Tok::Colon, "`:` before the parameter type")?;
            let ty = self.elem_type()?;
            params.push((name, ty));
            match self.bump() {
                Tok::Comma => continue,
                Tok::RParen => break,
                _ => return Err(self.err_here("expected `,` or `)`")),
            }
        }
        self.expect(Tok::Arrow, "`->` before the return type")?;
        let return_type = self.elem_type()?;
        self.expect(Tok::FatArrow, "`=>` before the body")?;
        let body = self.expr()?;
        self.expect(Tok::Eof, "end of input")?;
        Ok(FuncDef {
            params,
            return_type,
            body,
        })
    }
}

/// Parses a bare expression.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(e)
}

/// Parses a full function definition.
pub fn parse_func(src: &str) -> Result<FuncDef> {
    Parser::new(src)?.func()
}
