//! The CSV output format.
//!
//! ```text
//! # key = value            metadata, one per line
//! # generated_unix = ...   optional, omitted with --no-timestamp
//! t,mean_na,stderr_na      column names
//! 0.0000000000000000e0,... rows
//! ```
//!
//! Numbers are written with 17 significant digits so that reading a file
//! back reproduces every value bit for bit.

use std::fmt;
use std::io::{Read, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{AppError, AppResult};

/// Metadata key of the timestamp line.
pub const TIMESTAMP_KEY: &str = "generated_unix";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }

    fn parse(field: &str) -> Cell {
        if field.is_empty() {
            Cell::Empty
        } else if let Ok(x) = field.parse::<f64>() {
            Cell::Num(x)
        } else {
            Cell::Text(field.to_string())
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(x) => write!(f, "{x:.16e}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

/// Metadata, column names and rows of one output file. The first column is
/// the abscissa and must be numeric and strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSeries {
    metadata: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvSeries {
    pub fn new(
        metadata: Vec<(String, String)>,
        columns: Vec<String>,
        rows: Vec<Vec<Cell>>,
    ) -> AppResult<Self> {
        if columns.is_empty() {
            return Err(AppError::Csv("no columns".into()));
        }
        let mut previous = f64::NEG_INFINITY;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(AppError::Csv(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            let x = row[0]
                .as_f64()
                .ok_or_else(|| AppError::Csv(format!("row {i}: first cell is not numeric")))?;
            if !(x > previous) {
                return Err(AppError::Csv(format!(
                    "row {i}: first column not strictly increasing ({x} after {previous})"
                )));
            }
            previous = x;
        }
        for (key, value) in &metadata {
            if key.contains('=') || key.contains('\n') || value.contains('\n') {
                return Err(AppError::Csv(format!("metadata entry `{key}` is not one line")));
            }
        }
        Ok(Self {
            metadata,
            columns,
            rows,
        })
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Numeric values of column `name`, `None` where a cell is not a number.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_f64()).collect())
    }

    /// Writes the series; a timestamp line is added when `timestamp` is set.
    pub fn write_to<W: Write>(&self, mut out: W, timestamp: bool) -> AppResult<()> {
        let mut head = String::new();
        for (key, value) in &self.metadata {
            head.push_str(&format!("# {key} = {value}\n"));
        }
        if timestamp {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            head.push_str(&format!("# {TIMESTAMP_KEY} = {secs}\n"));
        }
        out.write_all(head.as_bytes())
            .map_err(|e| AppError::io("<output>", e))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|c| c.to_string()))?;
        }
        writer.flush().map_err(|e| AppError::io("<output>", e))?;
        Ok(())
    }

    pub fn render(&self, timestamp: bool) -> AppResult<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf, timestamp)?;
        String::from_utf8(buf).map_err(|e| AppError::Csv(e.to_string()))
    }

    /// Parses a file written by [`CsvSeries::write_to`]; the timestamp line
    /// is dropped.
    pub fn read_from<R: Read>(mut input: R) -> AppResult<Self> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| AppError::io("<input>", e))?;
        let mut metadata = Vec::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            body_start += line.len();
            let rest = rest.trim();
            let (key, value) = rest
                .split_once(" = ")
                .ok_or_else(|| AppError::Csv(format!("metadata line without ` = `: {rest}")))?;
            if key != TIMESTAMP_KEY {
                metadata.push((key.to_string(), value.to_string()));
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(&text.as_bytes()[body_start..]);
        let columns = reader.headers()?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(Cell::parse).collect()))
            .collect::<Result<Vec<Vec<Cell>>, _>>()?;
        Self::new(metadata, columns, rows)
    }
}
