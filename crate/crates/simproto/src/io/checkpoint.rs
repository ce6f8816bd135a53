//! Versioned text checkpoints: layer dimensions followed by row-major
//! parameter arrays at full precision.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64};
use crate::matrix::Mat;
use crate::model::{Layer, MlpClassifier};

const MAGIC: &str = "simproto checkpoint";
const VERSION: u32 = 1;

pub fn save(path: &Path, model: &MlpClassifier) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").expect("string write");
    let dims: Vec<String> = model.dims().iter().map(usize::to_string).collect();
    writeln!(out, "dims {}", dims.join(" ")).expect("string write");
    for (k, layer) in model.layers().iter().enumerate() {
        writeln!(
            out,
            "layer {k} weights {} {}",
            layer.weights.rows(),
            layer.weights.cols()
        )
        .expect("string write");
        for row in layer.weights.iter_rows() {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(out, "{}", cells.join(" ")).expect("string write");
        }
        writeln!(out, "layer {k} biases {}", layer.biases.len()).expect("string write");
        let cells: Vec<String> = layer.biases.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{}", cells.join(" ")).expect("string write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<MlpClassifier> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::ingestion(path, "empty checkpoint"))?;
    let version = header
        .strip_prefix(MAGIC)
        .map(str::trim)
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::ingestion(path, "not a checkpoint file"))?;
    if version != VERSION {
        return Err(Error::ingestion(
            path,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    let dims_line = lines
        .next()
        .ok_or_else(|| Error::ingestion(path, "missing dims line"))?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| Error::ingestion(path, "missing dims line"))?
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::ingestion(path, format!("bad dimension {t:?}")))
        })
        .collect::<Result<_>>()?;
    if dims.len() < 2 {
        return Err(Error::ingestion(path, "checkpoint needs at least 2 dims"));
    }

    let mut layers = Vec::with_capacity(dims.len() - 1);
    for k in 0..dims.len() - 1 {
        let head = lines
            .next()
            .ok_or_else(|| Error::ingestion(path, format!("missing layer {k} weights header")))?;
        let expected = format!("layer {k} weights {} {}", dims[k + 1], dims[k]);
        if head != expected {
            return Err(Error::ingestion(
                path,
                format!("expected {expected:?}, found {head:?}"),
            ));
        }
        let mut weights = Mat::zeros(dims[k + 1], dims[k]);
        for r in 0..dims[k + 1] {
            let line = lines
                .next()
                .ok_or_else(|| Error::ingestion(path, format!("layer {k} truncated")))?;
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != dims[k] {
                return Err(Error::ingestion(
                    path,
                    format!("layer {k} row {r}: expected {} values", dims[k]),
                ));
            }
            for (cidx, cell) in cells.iter().enumerate() {
                weights[(r, cidx)] = parse_f64(cell, "checkpoint weight")?;
            }
        }
        let head = lines
            .next()
            .ok_or_else(|| Error::ingestion(path, format!("missing layer {k} biases header")))?;
        let expected = format!("layer {k} biases {}", dims[k + 1]);
        if head != expected {
            return Err(Error::ingestion(
                path,
                format!("expected {expected:?}, found {head:?}"),
            ));
        }
        let line = lines
            .next()
            .ok_or_else(|| Error::ingestion(path, format!("layer {k} biases truncated")))?;
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.len() != dims[k + 1] {
            return Err(Error::ingestion(
                path,
                format!("layer {k} biases: expected {} values", dims[k + 1]),
            ));
        }
        let biases = cells
            .iter()
            .map(|c| parse_f64(c, "checkpoint bias"))
            .collect::<Result<Vec<f64>>>()?;
        layers.push(Layer { weights, biases });
    }
    MlpClassifier::from_parameters(dims, layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trips_bitwise() {
        let model = MlpClassifier::new(&[5, 7, 3], 4242).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save(&path, &model).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn garbage_is_rejected_with_the_path_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, "not a checkpoint\n").unwrap();
        let err = load(&path).unwrap_err();
        assert!(err.to_string().contains("bad.ckpt"));
    }
}
