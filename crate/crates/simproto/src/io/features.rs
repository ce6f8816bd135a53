//! Feature CSV files: header `label,f1..fD`, one sample per row.
//!
//! Labels are 1-based class ids in the file and 0-based in memory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64};
use crate::matrix::Mat;

/// Labeled feature rows. `labels[i]` is the 0-based class of row `i` of
/// `features`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub labels: Vec<usize>,
    pub features: Mat,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> FeatureSet {
        let mut features = Mat::zeros(indices.len(), self.dim());
        let mut labels = Vec::with_capacity(indices.len());
        for (r, &idx) in indices.iter().enumerate() {
            features.row_mut(r).copy_from_slice(self.features.row(idx));
            labels.push(self.labels[idx]);
        }
        FeatureSet { labels, features }
    }
}

pub fn write(path: &Path, set: &FeatureSet) -> Result<()> {
    let mut out = String::from("label");
    for i in 1..=set.dim() {
        write!(out, ",f{i}").expect("string write");
    }
    out.push('\n');
    for (row, &label) in set.features.iter_rows().zip(&set.labels) {
        write!(out, "{}", label + 1).expect("string write");
        for &v in row {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<FeatureSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::ingestion(path, "empty feature file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"label") || columns.len() < 2 {
        return Err(Error::ingestion(path, "bad feature header"));
    }
    let dim = columns.len() - 1;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::ingestion(
                path,
                format!(
                    "row {}: expected {} fields, got {}",
                    idx + 1,
                    dim + 1,
                    fields.len()
                ),
            ));
        }
        let label = fields[0]
            .parse::<usize>()
            .ok()
            .filter(|&v| v >= 1)
            .ok_or_else(|| {
                Error::ingestion(path, format!("row {}: bad label {:?}", idx + 1, fields[0]))
            })?;
        labels.push(label - 1);
        let mut row = Vec::with_capacity(dim);
        for f in &fields[1..] {
            row.push(parse_f64(f, "feature value")?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData {
            what: format!("feature file {}", path.display()),
        });
    }
    Ok(FeatureSet {
        labels,
        features: Mat::from_rows(&rows),
    })
}
