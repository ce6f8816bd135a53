//! Per-class semantic representation CSV (`class,n,s1..sL`) and its digest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64};
use crate::stats::{ClassSemanticRepresentation, DatasetSemanticSummary};

/// Canonical CSV rendering of a dataset summary.
pub fn to_csv(summary: &DatasetSemanticSummary) -> String {
    let mut out = String::from("class,n");
    for i in 1..=summary.l {
        write!(out, ",s{i}").expect("string write");
    }
    out.push('\n');
    for rep in &summary.representations {
        write!(out, "{},{}", rep.class_name, rep.instance_count).expect("string write");
        for &v in &rep.values {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

/// SHA-256 hex digest of the canonical CSV rendering. Used to tie a
/// prototype archive back to the statistics it was built from.
pub fn digest(summary: &DatasetSemanticSummary) -> String {
    let mut hasher = Sha256::new();
    hasher.update(to_csv(summary).as_bytes());
    format!("{:x}", hasher.finalize())
}

pub fn write(path: &Path, summary: &DatasetSemanticSummary) -> Result<()> {
    fs::write(path, to_csv(summary)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<DatasetSemanticSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::ingestion(path, "empty summary file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 3 || columns[0] != "class" || columns[1] != "n" {
        return Err(Error::ingestion(path, "bad summary header"));
    }
    let l = columns.len() - 2;
    let mut reps = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != l + 2 {
            return Err(Error::ingestion(
                path,
                format!(
                    "row {}: expected {} fields, got {}",
                    idx + 1,
                    l + 2,
                    fields.len()
                ),
            ));
        }
        let instance_count = fields[1]
            .parse::<usize>()
            .map_err(|_| Error::ingestion(path, format!("row {}: bad instance count", idx + 1)))?;
        let mut values = Vec::with_capacity(l);
        for f in &fields[2..] {
            values.push(parse_f64(f, "summary value")?);
        }
        reps.push(ClassSemanticRepresentation {
            class_id: idx + 1,
            class_name: fields[0].to_owned(),
            instance_count,
            values,
        });
    }
    DatasetSemanticSummary::new(l, reps)
}
