//! Prototype archive: a CSV matrix next to a JSON metadata sidecar.
//!
//! `proto.csv` holds a header row of class names followed by the `C x C`
//! matrix at 17 significant digits; `proto.json` records the metric, the
//! dimensions, the source-summary digest, and the tool version. A saved
//! prototype loads back bitwise identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64};
use crate::matrix::Mat;
use crate::prototype::{CorrelationMetric, SimilarityPrototype};

pub const MATRIX_FILE: &str = "proto.csv";
pub const META_FILE: &str = "proto.json";

/// Sidecar metadata stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub version: String,
    pub metric: CorrelationMetric,
    pub c: usize,
    pub l: usize,
    pub class_names: Vec<String>,
    pub source_digest: String,
}

/// A prototype together with its provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeArchive {
    pub prototype: SimilarityPrototype,
    pub meta: ArchiveMeta,
}

impl PrototypeArchive {
    pub fn new(prototype: SimilarityPrototype, l: usize, source_digest: String) -> Self {
        let meta = ArchiveMeta {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            metric: prototype.metric(),
            c: prototype.class_count(),
            l,
            class_names: prototype.class_names().to_vec(),
            source_digest,
        };
        PrototypeArchive { prototype, meta }
    }

    /// Write `proto.csv` and `proto.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut csv = self.meta.class_names.join(",");
        csv.push('\n');
        let matrix = self.prototype.matrix();
        for row in matrix.iter_rows() {
            let mut first = true;
            for &v in row {
                if !first {
                    csv.push(',');
                }
                csv.push_str(&fmt_f64(v));
                first = false;
            }
            csv.push('\n');
        }
        let csv_path = dir.join(MATRIX_FILE);
        fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;

        let json = serde_json::to_string_pretty(&self.meta).expect("meta serializes");
        let meta_path = dir.join(META_FILE);
        let mut json = json;
        json.push('\n');
        fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
    }

    /// Load an archive from `dir`, re-validating the prototype invariants.
    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ArchiveMeta = serde_json::from_str(&meta_text)
            .map_err(|e| Error::ingestion(&meta_path, e.to_string()))?;

        let csv_path = dir.join(MATRIX_FILE);
        let csv = fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let mut lines = csv.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::ingestion(&csv_path, "empty matrix file"))?;
        let names: Vec<String> = header.split(',').map(str::to_owned).collect();
        if names != meta.class_names {
            return Err(Error::ingestion(
                &csv_path,
                "class names disagree with proto.json",
            ));
        }
        let c = names.len();
        let mut matrix = Mat::zeros(c, c);
        let mut row_count = 0usize;
        for (i, line) in lines.filter(|l| !l.is_empty()).enumerate() {
            if i >= c {
                return Err(Error::ingestion(&csv_path, "too many matrix rows"));
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != c {
                return Err(Error::ingestion(
                    &csv_path,
                    format!("row {}: expected {c} values, got {}", i + 1, fields.len()),
                ));
            }
            for (j, f) in fields.iter().enumerate() {
                matrix[(i, j)] = parse_f64(f, "prototype entry")?;
            }
            row_count += 1;
        }
        if row_count != c {
            return Err(Error::ingestion(
                &csv_path,
                format!("expected {c} matrix rows, got {row_count}"),
            ));
        }
        let prototype = SimilarityPrototype::new(names, meta.metric, matrix)?;
        Ok(PrototypeArchive { prototype, meta })
    }
}

/// Resolve a user-supplied path to an archive directory: either the
/// directory itself or a path to one of the two files inside it.
pub fn resolve_dir(path: &Path) -> PathBuf {
    if path.is_file() {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        path.to_path_buf()
    }
}

/// Render a matrix row for reports, reusing the archive's cell format.
pub fn matrix_csv_row(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{}", fmt_f64(v)).expect("string write");
    }
    out
}
