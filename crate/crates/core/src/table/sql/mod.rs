//! SQL subset used inside logical sources:
//!
//! ```text
//! SELECT item (, item)* FROM table (WHERE cond (AND cond)*)?
//! item := expr (AS alias)?
//! expr := column | 'text' | "text" | number | FUNC(expr, ...)
//! cond := column = lit | column <> lit | column IS [NOT] NULL
//! ```
//!
//! Functions: `REPLACE(x, from, to)`, `REGEX_EXTRACT(x, pattern, group)`,
//! `SUBSTR(x, start[, len])`. Double-quoted text is a string literal, not an
//! identifier. Identifiers are case-insensitive.

mod eval;
mod parse;

use std::fmt;

use thiserror::Error;

use super::Value;

pub use eval::eval_sql;
pub use parse::parse_sql;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SqlError {
    #[error("SQL syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown SQL function {0}")]
    UnknownFunction(String),
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown column {column} in table {table}")]
    UnknownColumn { table: String, column: String },
    #[error("invalid regex pattern {pattern:?}: {message}")]
    InvalidRegex { pattern: String, message: String },
    #[error("{function}: {message}")]
    InvalidArgument {
        function: &'static str,
        message: String,
    },
    #[error("duplicate output column {0}")]
    DuplicateOutputColumn(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Replace,
    RegexExtract,
    Substr,
}

impl Function {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "REPLACE" => Some(Function::Replace),
            "REGEX_EXTRACT" => Some(Function::RegexExtract),
            "SUBSTR" => Some(Function::Substr),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Replace => "REPLACE",
            Function::RegexExtract => "REGEX_EXTRACT",
            Function::Substr => "SUBSTR",
        }
    }

    fn arity(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Function::Replace | Function::RegexExtract => 3..=3,
            Function::Substr => 2..=3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(String),
    Literal(Value),
    Call(Function, Vec<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => f.write_str(c),
            Expr::Literal(Value::Text(s)) => write!(f, "'{}'", s.replace('\'', "''")),
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Test {
    Eq(Value),
    Ne(Value),
    IsNull,
    IsNotNull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub column: String,
    pub test: Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqlQuery {
    pub items: Vec<SelectItem>,
    pub from: String,
    /// Conjunction; empty means no WHERE clause.
    pub conditions: Vec<Condition>,
}
