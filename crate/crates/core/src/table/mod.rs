//! In-memory tables holding ingested registration data, plus the CSV
//! loader and the SQL-subset interpreter that runs mapping queries.

mod csv_io;
pub mod sql;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{append_csv_rows, load_csv, read_csv, read_csv_header, write_csv, CsvError};
pub use sql::{eval_sql, parse_sql, SqlError, SqlQuery};

/// Local storage class of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Text,
    Integer,
    Real,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Text => "text",
            ColumnType::Integer => "integer",
            ColumnType::Real => "real",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub column_type: ColumnType,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, column_type: ColumnType) -> Self {
        ColumnDef {
            name: name.into(),
            column_type,
        }
    }

    pub fn text(name: impl Into<String>) -> Self {
        Self::new(name, ColumnType::Text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Text(String),
    Integer(i64),
    Real(f64),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn column_type(&self) -> Option<ColumnType> {
        match self {
            Value::Null => None,
            Value::Text(_) => Some(ColumnType::Text),
            Value::Integer(_) => Some(ColumnType::Integer),
            Value::Real(_) => Some(ColumnType::Real),
        }
    }

    /// Text rendering used when a value is substituted into a string:
    /// integers in decimal, reals always with a fractional part.
    pub fn as_text(&self) -> Option<String> {
        match self {
            Value::Null => None,
            Value::Text(s) => Some(s.clone()),
            Value::Integer(i) => Some(i.to_string()),
            Value::Real(r) => Some(format_real(*r)),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }
}

pub(crate) fn format_real(r: f64) -> String {
    if r.is_finite() && r.fract() == 0.0 && r.abs() < 1e16 {
        format!("{r:.1}")
    } else {
        r.to_string()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_text() {
            Some(s) => f.write_str(&s),
            None => f.write_str("NULL"),
        }
    }
}

pub type Row = Vec<Value>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("duplicate column {column:?} in table {table}")]
    DuplicateColumn { table: String, column: String },
    #[error("row {row} of table {table} has {found} values, expected {expected}")]
    Arity {
        table: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row} of table {table}: column {column} expects {expected}, got {value:?}")]
    Type {
        table: String,
        row: usize,
        column: String,
        expected: ColumnType,
        value: Value,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    name: String,
    columns: Vec<ColumnDef>,
    rows: Vec<Row>,
}

impl Table {
    /// Column names must be unique, ignoring case.
    pub fn new(name: impl Into<String>, columns: Vec<ColumnDef>) -> Result<Self, TableError> {
        let name = name.into();
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.to_ascii_uppercase()) {
                return Err(TableError::DuplicateColumn {
                    table: name,
                    column: c.name.clone(),
                });
            }
        }
        Ok(Table {
            name,
            columns,
            rows: Vec::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[ColumnDef] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Case-insensitive column lookup.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// Appends a row after checking arity and per-column types.
    pub fn push_row(&mut self, row: Row) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::Arity {
                table: self.name.clone(),
                row: self.rows.len() + 1,
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        for (value, col) in row.iter().zip(&self.columns) {
            if let Some(t) = value.column_type() {
                if t != col.column_type {
                    return Err(TableError::Type {
                        table: self.name.clone(),
                        row: self.rows.len() + 1,
                        column: col.name.clone(),
                        expected: col.column_type,
                        value: value.clone(),
                    });
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn truncate(&mut self, len: usize) {
        self.rows.truncate(len);
    }
}

/// Named tables; names compare case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct TableStore {
    tables: BTreeMap<String, Table>,
}

impl TableStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a table, returning the previous one.
    pub fn insert(&mut self, table: Table) -> Option<Table> {
        self.tables.insert(table.name.to_ascii_uppercase(), table)
    }

    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.get(&name.to_ascii_uppercase())
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Table> {
        self.tables.get_mut(&name.to_ascii_uppercase())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Table> {
        self.tables.values()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

impl FromIterator<Table> for TableStore {
    fn from_iter<I: IntoIterator<Item = Table>>(iter: I) -> Self {
        let mut store = TableStore::new();
        for t in iter {
            store.insert(t);
        }
        store
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_columns_rejected_case_insensitively() {
        let err = Table::new("AWG", vec![ColumnDef::text("AWG_ID"), ColumnDef::text("awg_id")]);
        assert!(matches!(err, Err(TableError::DuplicateColumn { .. })));
    }

    #[test]
    fn push_row_checks_arity_and_type() {
        let mut t = Table::new(
            "T",
            vec![ColumnDef::text("A"), ColumnDef::new("N", ColumnType::Integer)],
        )
        .unwrap();
        t.push_row(vec![Value::Text("x".into()), Value::Integer(1)]).unwrap();
        t.push_row(vec![Value::Null, Value::Null]).unwrap();
        assert!(matches!(t.push_row(vec![Value::Null]), Err(TableError::Arity { .. })));
        assert!(matches!(
            t.push_row(vec![Value::Null, Value::Text("1".into())]),
            Err(TableError::Type { .. })
        ));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn store_lookup_ignores_case() {
        let store: TableStore = [Table::new("AWG_KULTUR", vec![]).unwrap()].into_iter().collect();
        assert!(store.get("awg_kultur").is_some());
        assert!(store.get("AWG").is_none());
    }

    #[test]
    fn real_rendering() {
        assert_eq!(Value::Real(2.0).as_text().unwrap(), "2.0");
        assert_eq!(Value::Real(0.25).as_text().unwrap(), "0.25");
        assert_eq!(Value::Integer(-3).as_text().unwrap(), "-3");
        assert_eq!(Value::Null.as_text(), None);
    }
}
