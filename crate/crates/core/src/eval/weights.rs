use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::taxonomy::Dimension;
use crate::tsv::{self, Table};
use crate::{Error, Result};

pub const MIN_WEIGHT: f64 = 0.1;
pub const MAX_WEIGHT: f64 = 10.0;

/// Positive-class weight per dimension for an external trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weights: [f64; 14],
    /// Dimensions without a single positive training example.
    pub no_positives: Vec<Dimension>,
}

/// `negatives / positives` per dimension, clamped to `[0.1, 10]`. A
/// dimension with no positives gets the maximum and a warning.
pub fn class_weights(train: &[[bool; 14]]) -> Result<ClassWeights> {
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let mut weights = [0.0; 14];
    let mut no_positives = Vec::new();
    for d in Dimension::ALL {
        let pos = train.iter().filter(|r| r[d.index()]).count();
        let neg = train.len() - pos;
        weights[d.index()] = if pos == 0 {
            log::warn!("dimension {d} has no positive training example; weight clamped to {MAX_WEIGHT}");
            no_positives.push(d);
            MAX_WEIGHT
        } else {
            (neg as f64 / pos as f64).clamp(MIN_WEIGHT, MAX_WEIGHT)
        };
    }
    Ok(ClassWeights { weights, no_positives })
}

impl ClassWeights {
    pub fn get(&self, d: Dimension) -> f64 {
        self.weights[d.index()]
    }

    /// TSV `dimension weight`, one row per dimension in taxonomy order.
    pub fn write_tsv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = tsv::writer(out);
        w.write_record(["dimension", "weight"])?;
        for d in Dimension::ALL {
            w.write_record([d.code(), &self.get(d).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: Read>(input: R) -> Result<Self> {
        let table = Table::read(input, &["dimension", "weight"])?;
        let mut weights = [f64::NAN; 14];
        for (line, row) in &table.rows {
            let d: Dimension = table
                .field(*line, row, "dimension")?
                .parse()
                .map_err(|e: Error| Error::parse(*line, e.to_string()))?;
            let w = table.field(*line, row, "weight")?;
            weights[d.index()] = w
                .trim()
                .parse()
                .map_err(|_| Error::parse(*line, format!("bad weight `{w}`")))?;
        }
        if let Some(d) = Dimension::ALL.iter().find(|d| weights[d.index()].is_nan()) {
            return Err(Error::InvalidInput(format!("weight file lacks dimension {d}")));
        }
        Ok(ClassWeights {
            weights,
            no_positives: Vec::new(),
        })
    }
}
