//! File persistence: `<name>.csv` plus a `<name>.schema.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use crate::csv::{self, Row};
use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::table::{Record, Table};
use crate::value::FieldValue;

/// A non-fatal rewrite applied while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub table: Table,
    pub warnings: Vec<LoadWarning>,
}

/// `dir/name.csv` → `dir/name.schema.json`.
pub fn schema_path_for(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("schema.json")
}

pub fn save_table(table: &Table, path: &Path) -> Result<()> {
    let schema_json = serde_json::to_string_pretty(table.schema())? + "\n";
    let schema_path = schema_path_for(path);
    fs::write(&schema_path, schema_json).map_err(|e| Error::io(&schema_path, e))?;
    fs::write(path, encode_table(table)).map_err(|e| Error::io(path, e))
}

pub fn load_table(path: &Path) -> Result<Table> {
    load_table_with_warnings(path).map(|l| l.table)
}

pub fn load_table_with_warnings(path: &Path) -> Result<Loaded> {
    let schema = load_schema(&schema_path_for(path))?;
    let (records, warnings) = read_records(path, &schema)?;
    Ok(Loaded {
        table: Table::from_stored(schema, records),
        warnings,
    })
}

pub fn load_schema(path: &Path) -> Result<Schema> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_owned(),
        line: e.line(),
        detail: e.to_string(),
    })
}

/// Reads a headed CSV file whose columns match `schema`.
pub fn read_records(path: &Path, schema: &Schema) -> Result<(Vec<Record>, Vec<LoadWarning>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_records(&text, schema).map_err(|(line, detail)| Error::Format {
        path: path.to_owned(),
        line,
        detail,
    })
}

/// Header line plus one line per record, CRLF-terminated.
pub fn encode_table(table: &Table) -> String {
    encode_records(table.schema(), table.records())
}

pub fn encode_records<'a>(schema: &Schema, records: impl IntoIterator<Item = &'a Record>) -> String {
    let mut out = String::new();
    csv::write_row(&mut out, schema.field_names().map(Some));
    for record in records {
        let cells: Vec<Option<String>> = record.values().iter().map(FieldValue::canonical).collect();
        csv::write_row(&mut out, cells.iter().map(Option::as_deref));
    }
    out
}

type DecodeError = (usize, String);

pub fn decode_records(
    text: &str,
    schema: &Schema,
) -> std::result::Result<(Vec<Record>, Vec<LoadWarning>), DecodeError> {
    let rows = csv::parse(text).map_err(|e| (e.line, e.detail))?;
    let mut rows = rows.into_iter();
    let header = rows.next().ok_or((1, "missing header row".to_string()))?;
    if header.cells.len() != schema.arity() {
        return Err((
            header.line,
            format!(
                "header has {} columns, schema has {}",
                header.cells.len(),
                schema.arity()
            ),
        ));
    }
    for (cell, name) in header.cells.iter().zip(schema.field_names()) {
        if cell.text != name {
            return Err((
                header.line,
                format!("header column `{}` does not match field `{name}`", cell.text),
            ));
        }
    }
    let mut warnings = Vec::new();
    let records = rows
        .map(|row| decode_row(row, schema, &mut warnings))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((records, warnings))
}

fn decode_row(row: Row, schema: &Schema, warnings: &mut Vec<LoadWarning>) -> std::result::Result<Record, DecodeError> {
    if row.cells.len() != schema.arity() {
        return Err((
            row.line,
            format!("row has {} columns, schema has {}", row.cells.len(), schema.arity()),
        ));
    }
    let mut values = Vec::with_capacity(row.cells.len());
    for (cell, field) in row.cells.into_iter().zip(schema.fields()) {
        let value = if cell.text.is_empty() && !cell.quoted {
            if !field.nullable {
                return Err((row.line, format!("null in non-nullable field `{}`", field.name)));
            }
            FieldValue::Null
        } else {
            let parsed = FieldValue::parse(&cell.text, field.kind)
                .map_err(|e| (row.line, format!("field `{}`: {e}", field.name)))?;
            if let Some(message) = parsed.normalized {
                warnings.push(LoadWarning {
                    line: row.line,
                    field: field.name.clone(),
                    message,
                });
            }
            parsed.value
        };
        values.push(value);
    }
    Ok(Record::new(values))
}
