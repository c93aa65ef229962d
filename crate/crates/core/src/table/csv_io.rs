use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{ColumnDef, ColumnType, Row, Table, TableError, Value};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV header {found:?} does not match schema columns {expected:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("row {row}, column {column}: cannot parse {value:?} as {expected}")]
    BadCell {
        row: usize,
        column: String,
        value: String,
        expected: ColumnType,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Table(#[from] TableError),
}

fn open(path: &Path) -> Result<File, CsvError> {
    File::open(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads an RFC-4180 CSV file whose header names the schema columns
/// (any order, case-insensitive). Empty fields become null.
pub fn load_csv(path: &Path, table_name: &str, schema: &[ColumnDef]) -> Result<Table, CsvError> {
    read_csv(open(path)?, table_name, schema)
}

pub fn read_csv_header(path: &Path) -> Result<Vec<String>, CsvError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    Ok(reader.headers()?.iter().map(str::to_string).collect())
}

pub fn read_csv<R: Read>(input: R, table_name: &str, schema: &[ColumnDef]) -> Result<Table, CsvError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let mismatch = || CsvError::HeaderMismatch {
        expected: schema.iter().map(|c| c.name.clone()).collect(),
        found: header.clone(),
    };
    if header.len() != schema.len() {
        return Err(mismatch());
    }
    // positions[i] = CSV field index feeding schema column i
    let mut positions = Vec::with_capacity(schema.len());
    for col in schema {
        let pos = header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(&col.name))
            .ok_or_else(mismatch)?;
        positions.push(pos);
    }

    let mut table = Table::new(table_name, schema.to_vec())?;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = schema
            .iter()
            .zip(&positions)
            .map(|(col, &pos)| parse_cell(record.get(pos).unwrap_or(""), col, i + 1))
            .collect::<Result<Vec<_>, _>>()?;
        table.push_row(row)?;
    }
    Ok(table)
}

fn parse_cell(raw: &str, col: &ColumnDef, row: usize) -> Result<Value, CsvError> {
    if raw.is_empty() {
        return Ok(Value::Null);
    }
    let bad = || CsvError::BadCell {
        row,
        column: col.name.clone(),
        value: raw.to_string(),
        expected: col.column_type,
    };
    Ok(match col.column_type {
        ColumnType::Text => Value::Text(raw.to_string()),
        ColumnType::Integer => Value::Integer(raw.trim().parse().map_err(|_| bad())?),
        ColumnType::Real => Value::Real(raw.trim().parse().map_err(|_| bad())?),
    })
}

/// Writes the table with a header row; nulls become empty fields.
pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<(), CsvError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(table.columns().iter().map(|c| c.name.as_str()))?;
    write_records(&mut writer, table.rows(), table.name())
}

/// Writes rows without a header, for appending to an existing file.
pub fn append_csv_rows<W: Write>(rows: &[Row], out: W, label: &str) -> Result<(), CsvError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    write_records(&mut writer, rows, label)
}

fn write_records<W: Write>(writer: &mut csv::Writer<W>, rows: &[Row], label: &str) -> Result<(), CsvError> {
    for row in rows {
        writer.write_record(row.iter().map(|v| match v {
            Value::Real(r) => r.to_string(),
            other => other.as_text().unwrap_or_default(),
        }))?;
    }
    writer.flush().map_err(|source| CsvError::Io {
        path: label.to_string(),
        source,
    })?;
    Ok(())
}
