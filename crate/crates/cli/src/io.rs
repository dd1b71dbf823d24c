//! CSV and JSON file formats.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use gem_core::datamodel::{format_f64, Cell, Dataset, DesignTable, DesignVariable, ImputationReport, MissingPolicy};
use gem_core::{GemError, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSchema {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

/// Design-column name to its declared kind.
pub type Schema = BTreeMap<String, ColumnSchema>;

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Records paired with their 1-based line numbers.
type Records = Vec<(u64, Vec<String>)>;

/// Header and records of a CSV file.
fn read_records(path: &Path) -> Result<(Vec<String>, Records)> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: expected an id column and at least one data column",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec.iter().map(str::to_string).collect()));
    }
    if records.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok((header, records))
}

/// Re-labels row-indexed core errors with the file and line they came from.
fn located(path: &Path, lines: &[u64], e: GemError) -> CliError {
    match &e {
        GemError::NonNumeric { row, .. } if *row < lines.len() => {
            CliError::gem(format!("{}:{}", path.display(), lines[*row]), e)
        }
        _ => CliError::gem(path.display(), e),
    }
}

/// Loads a response matrix. With `impute`, non-numeric cells are replaced by
/// the mean of the numeric cells of their column.
pub fn load_dataset(path: &Path, impute: bool) -> Result<(Dataset, ImputationReport)> {
    let (header, records) = read_records(path)?;
    let names = header[1..].to_vec();
    let lines: Vec<u64> = records.iter().map(|(l, _)| *l).collect();
    let mut ids = Vec::with_capacity(records.len());
    let mut cells = Vec::with_capacity(records.len());
    for (_, rec) in records {
        let mut it = rec.into_iter();
        ids.push(it.next().unwrap_or_default().trim().to_string());
        cells.push(
            it.map(|raw| match raw.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Cell::Value(v),
                _ => Cell::Missing(raw),
            })
            .collect(),
        );
    }
    let policy = if impute { MissingPolicy::ColumnMean } else { MissingPolicy::Reject };
    Dataset::from_cells(ids, names, cells, policy).map_err(|e| located(path, &lines, e))
}

pub fn load_schema(path: &Path) -> Result<Schema> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let schema: Schema =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for (name, col) in &schema {
        if col.kind == Kind::Continuous && col.levels.is_some() {
            return Err(CliError::Config(format!(
                "{}: continuous column `{name}` cannot declare levels",
                path.display()
            )));
        }
    }
    Ok(schema)
}

/// Loads design columns typed by `schema`; every design column must be declared
/// and every declared column must be present.
pub fn load_design(path: &Path, schema: &Schema) -> Result<DesignTable> {
    let (header, records) = read_records(path)?;
    let lines: Vec<u64> = records.iter().map(|(l, _)| *l).collect();
    for name in &header[1..] {
        if !schema.contains_key(name) {
            return Err(CliError::Data(format!(
                "{}: column `{name}` is not declared in the schema",
                path.display()
            )));
        }
    }
    if let Some(missing) = schema.keys().find(|k| !header[1..].contains(k)) {
        return Err(CliError::Data(format!(
            "{}: schema declares `{missing}` but the file has no such column",
            path.display()
        )));
    }
    let ids: Vec<String> = records.iter().map(|(_, r)| r[0].trim().to_string()).collect();
    let mut variables = Vec::with_capacity(header.len() - 1);
    for (k, name) in header.iter().enumerate().skip(1) {
        let values: Vec<&str> = records.iter().map(|(_, r)| r[k].trim()).collect();
        let col = &schema[name];
        let v = match col.kind {
            Kind::Categorical => DesignVariable::categorical(name, &values, col.levels.clone()),
            Kind::Continuous => DesignVariable::continuous_from_text(name, &values),
        }
        .map_err(|e| located(path, &lines, e))?;
        variables.push(v);
    }
    DesignTable::new(ids, variables).map_err(|e| CliError::gem(path.display(), e))
}

/// Header and rows of a CSV table written by this toolkit.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let (header, records) = read_records(path)?;
    Ok((header, records.into_iter().map(|(_, r)| r).collect()))
}

/// Renders a CSV table in memory.
pub fn table_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

/// `id_header, col...` followed by one row per matrix row.
pub fn matrix_bytes(id_header: &str, row_ids: &[String], col_names: &[String], m: &Matrix) -> Vec<u8> {
    let header: Vec<String> = std::iter::once(id_header.to_string()).chain(col_names.iter().cloned()).collect();
    let rows: Vec<Vec<String>> = (0..m.nrows())
        .map(|i| {
            std::iter::once(row_ids[i].clone())
                .chain(m.row(i).iter().map(|&v| format_f64(v)))
                .collect()
        })
        .collect();
    table_bytes(&header, &rows)
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), format_f64)
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}
