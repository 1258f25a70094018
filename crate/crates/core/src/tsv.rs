//! Tab-separated tables with mandatory headers, shared by every file format.

use std::collections::HashMap;
use std::io::{Read, Write};

use csv::{QuoteStyle, ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use crate::{Error, Result};

/// A parsed table: header lookup plus rows tagged with their 1-based line.
pub(crate) struct Table {
    columns: HashMap<String, usize>,
    pub rows: Vec<(usize, StringRecord)>,
}

impl Table {
    pub fn read<R: Read>(reader: R, required: &[&str]) -> Result<Table> {
        Self::read_with(reader, b'\t', required)
    }

    pub fn read_with<R: Read>(reader: R, delimiter: u8, required: &[&str]) -> Result<Table> {
        let mut rdr = ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(1, e))?.clone();
        let mut columns = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            columns.insert(h.trim().to_string(), i);
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                csv_error(line, e)
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            rows.push((line, rec));
        }
        if columns.is_empty() && rows.is_empty() {
            return Ok(Table { columns, rows });
        }
        for name in required {
            if !columns.contains_key(*name) {
                return Err(Error::parse(1, format!("missing header column `{name}`")));
            }
        }
        Ok(Table { columns, rows })
    }

    pub fn has(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn headers(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn get<'r>(&self, row: &'r StringRecord, name: &str) -> Option<&'r str> {
        self.columns.get(name).and_then(|&i| row.get(i))
    }

    pub fn field<'r>(&self, line: usize, row: &'r StringRecord, name: &str) -> Result<&'r str> {
        self.get(row, name)
            .ok_or_else(|| Error::parse(line, format!("missing field `{name}`")))
    }
}

fn csv_error(line: usize, e: csv::Error) -> Error {
    Error::parse(line, e.to_string())
}

/// Writer producing the canonical TSV dialect: `\n` line ends, quoting only
/// when a field contains a tab, quote or newline.
pub(crate) fn writer<W: Write>(out: W) -> csv::Writer<W> {
    WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(QuoteStyle::Necessary)
        .terminator(Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Comma-separated counterpart of [`writer`].
pub(crate) fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    WriterBuilder::new()
        .delimiter(b',')
        .quote_style(QuoteStyle::Necessary)
        .terminator(Terminator::Any(b'\n'))
        .from_writer(out)
}

pub(crate) fn parse_bit(line: usize, column: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "yes" | "true" | "y" => Ok(true),
        "0" | "no" | "false" | "n" => Ok(false),
        other => Err(Error::parse(
            line,
            format!("column `{column}`: expected 0/1, found `{other}`"),
        )),
    }
}

pub(crate) fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}
