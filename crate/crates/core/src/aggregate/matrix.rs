use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::taxonomy::Dimension;
use crate::tsv::{self, Table};
use crate::{Error, Result};

/// Where a label matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Liberal,
    Majority,
    Conservative,
    Mace,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Liberal => "liberal",
            Provenance::Majority => "majority",
            Provenance::Conservative => "conservative",
            Provenance::Mace => "mace",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "liberal" => Ok(Provenance::Liberal),
            "majority" => Ok(Provenance::Majority),
            "conservative" => Ok(Provenance::Conservative),
            "mace" => Ok(Provenance::Mace),
            other => Err(Error::InvalidInput(format!("unknown provenance `{other}`"))),
        }
    }
}

/// Binary labels per argument on all 14 dimensions (IN binarized).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    provenance: Provenance,
    ids: Vec<String>,
    rows: Vec<[bool; 14]>,
    index: HashMap<String, usize>,
}

impl LabelMatrix {
    pub fn new(provenance: Provenance) -> Self {
        LabelMatrix {
            provenance,
            ids: Vec::new(),
            rows: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_rows<I, S>(provenance: Provenance, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, [bool; 14])>,
        S: Into<String>,
    {
        let mut m = LabelMatrix::new(provenance);
        for (id, row) in rows {
            m.push(id, row)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, id: impl Into<String>, row: [bool; 14]) -> Result<()> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.rows.push(row);
        Ok(())
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[[bool; 14]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[bool; 14]> {
        self.index.get(id).map(|&i| &self.rows[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[bool; 14])> {
        self.ids.iter().map(String::as_str).zip(self.rows.iter())
    }

    pub fn column(&self, d: Dimension) -> Vec<bool> {
        self.rows.iter().map(|r| r[d.index()]).collect()
    }

    pub fn yes_count(&self, d: Dimension) -> usize {
        self.rows.iter().filter(|r| r[d.index()]).count()
    }

    /// Rows for `ids` in that order; every id must be present.
    pub fn select(&self, ids: &[String]) -> Result<Vec<[bool; 14]>> {
        ids.iter()
            .map(|id| {
                self.get(id)
                    .copied()
                    .ok_or_else(|| Error::UnknownArgument(id.clone()))
            })
            .collect()
    }

    /// Whether both matrices cover the same argument ids, in any order.
    pub fn same_ids(&self, other: &LabelMatrix) -> bool {
        self.len() == other.len() && self.ids.iter().all(|id| other.index.contains_key(id))
    }

    pub fn write_tsv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = tsv::writer(out);
        let mut header = vec!["argument_id"];
        header.extend(Dimension::ALL.iter().map(|d| d.code()));
        header.push("provenance");
        w.write_record(&header)?;
        for (id, row) in self.iter() {
            let mut rec = vec![id];
            rec.extend(row.iter().map(|&b| tsv::bit(b)));
            rec.push(self.provenance.tag());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the TSV written by [`LabelMatrix::write_tsv`]. All rows must
    /// carry the same provenance.
    pub fn read_tsv<R: Read>(input: R) -> Result<Self> {
        let mut required = vec!["argument_id"];
        required.extend(Dimension::ALL.iter().map(|d| d.code()));
        required.push("provenance");
        let table = Table::read(input, &required)?;
        let mut out: Option<LabelMatrix> = None;
        for (line, row) in &table.rows {
            let line = *line;
            let prov = Provenance::from_str(table.field(line, row, "provenance")?)
                .map_err(|e| Error::parse(line, e.to_string()))?;
            let m = out.get_or_insert_with(|| LabelMatrix::new(prov));
            if m.provenance != prov {
                return Err(Error::parse(line, "mixed provenance values"));
            }
            let mut labels = [false; 14];
            for d in Dimension::ALL {
                labels[d.index()] = tsv::parse_bit(line, d.code(), table.field(line, row, d.code())?)?;
            }
            m.push(table.field(line, row, "argument_id")?, labels)
                .map_err(|e| Error::parse(line, e.to_string()))?;
        }
        out.ok_or_else(|| Error::InvalidInput("label file has no rows".into()))
    }
}
