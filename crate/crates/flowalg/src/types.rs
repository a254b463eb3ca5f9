//! Element types for values and dataset contents.
//!
//! The grammar is `Int | Float | Bool | Str | Tuple<t1, ..., tk> |
//! Bag<t> | List<t>`, written the same way in program files and in
//! function sources.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Semantic type of a value or of a dataset's elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElemType {
    Int,
    Float,
    Bool,
    Str,
    Tuple(Vec<ElemType>),
    Bag(Box<ElemType>),
    List(Box<ElemType>),
}

impl ElemType {
    pub fn bag(elem: ElemType) -> ElemType {
        ElemType::Bag(Box::new(elem))
    }

    pub fn list(elem: ElemType) -> ElemType {
        ElemType::List(Box::new(elem))
    }

    pub fn pair(k: ElemType, v: ElemType) -> ElemType {
        ElemType::Tuple(vec![k, v])
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ElemType::Int | ElemType::Float)
    }

    /// For `Bag<t>` or `List<t>`, the element type `t`.
    pub fn collection_elem(&self) -> Option<&ElemType> {
        match self {
            ElemType::Bag(t) | ElemType::List(t) => Some(t),
            _ => None,
        }
    }

    /// For `Tuple<k, v>`, the pair `(k, v)`.
    pub fn as_pair(&self) -> Option<(&ElemType, &ElemType)> {
        match self {
            ElemType::Tuple(items) if items.len() == 2 => Some((&items[0], &items[1])),
            _ => None,
        }
    }
}

impl fmt::Display for ElemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElemType::Int => write!(f, "Int"),
            ElemType::Float => write!(f, "Float"),
            ElemType::Bool => write!(f, "Bool"),
            ElemType::Str => write!(f, "Str"),
            ElemType::Tuple(items) => {
                write!(f, "Tuple<")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ">")
            }
            ElemType::Bag(t) => write!(f, "Bag<{t}>"),
            ElemType::List(t) => write!(f, "List<{t}>"),
        }
    }
}

impl FromStr for ElemType {
    type Err = Error;

    fn from_str(s: &str) -> Result<ElemType> {
        let mut p = TypeParser {
            src: s.as_bytes(),
            pos: 0,
        };
        let ty = p.parse()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::Decode(format!(
                "trailing input in type `{s}` at byte {}",
                p.pos
            )));
        }
        Ok(ty)
    }
}

struct TypeParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> TypeParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.pos < self.src.len() && self.src[self.pos] == c {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Decode(format!(
                "expected `{}` at byte {} of type string",
                c as char, self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Decode(format!(
                "expected a type name at byte {start}"
            )));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).unwrap())
    }

    fn parse(&mut self) -> Result<ElemType> {
        let name = self.ident()?;
        match name {
            "Int" => Ok(ElemType::Int),
            "Float" => Ok(ElemType::Float),
            "Bool" => Ok(ElemType::Bool),
            "Str" => Ok(ElemType::Str),
            "Bag" => {
                self.eat(b'<')?;
                let inner = self.parse()?;
                self.eat(b'>')?;
                Ok(ElemType::bag(inner))
            }
            "List" => {
                self.eat(b'<')?;
                let inner = self.parse()?;
                self.eat(b'>')?;
                Ok(ElemType::list(inner))
            }
            "Tuple" => {
                self.eat(b'<')?;
                let mut items = vec![self.parse()?];
                loop {
                    self.skip_ws();
                    if self.pos < self.src.len() && self.src[self.pos] == b',' {
                        self.pos += 1;
                        items.push(self.parse()?);
                    } else {
                        break;
                    }
                }
                self.eat(b'>')?;
                if items.len() < 2 {
                    return Err(Error::Decode("tuple type needs at least 2 components".into()));
                }
                Ok(ElemType::Tuple(items))
            }
            other => Err(Error::Decode(format!("unknown type name `{other}`"))),
        }
    }
}
