//! `eval`: score a checkpoint against a dataset split.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use crate::commands::{ensure_out_dir, say};
use crate::config::RunConfig;
use simproto::io::archive::matrix_csv_row;
use simproto::io::dataset::{TEST_FEATURES, TRAIN_FEATURES};
use simproto::model::{evaluate, export_embeddings};

pub const EVAL_FILE: &str = "eval.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EvalMetrics {
    split: String,
    samples: usize,
    accuracy: f64,
    confusion: Vec<Vec<usize>>,
}

pub fn cmd_eval(
    cfg: &RunConfig,
    checkpoint: &Path,
    data_dir: &Path,
    split: &str,
    embeddings: bool,
    out_dir: &Path,
) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let model = simproto::io::checkpoint::load(checkpoint)?;
    let file = match split {
        "train" => TRAIN_FEATURES,
        "test" => TEST_FEATURES,
        other => bail!("unknown split {other:?}; expected train or test"),
    };
    let set = simproto::io::features::read(&data_dir.join(file))?;
    let eval = evaluate(&model, &set)?;
    let metrics = EvalMetrics {
        split: split.to_owned(),
        samples: set.len(),
        accuracy: eval.accuracy,
        confusion: eval.confusion,
    };
    let mut json = serde_json::to_string_pretty(&metrics)?;
    json.push('\n');
    std::fs::write(out_dir.join(EVAL_FILE), json)?;

    if embeddings {
        let rows = export_embeddings(&model, &set)?;
        let mut out = String::from("label");
        for i in 1..=rows[0].1.len() {
            write!(out, ",e{i}").expect("string write");
        }
        out.push('\n');
        for (label, values) in &rows {
            write!(out, "{},{}", label + 1, matrix_csv_row(values)).expect("string write");
            out.push('\n');
        }
        std::fs::write(out_dir.join(super::train::EMBEDDINGS_FILE), out)?;
    }

    say(
        cfg,
        format!(
            "{split} accuracy {:.4} on {} samples",
            metrics.accuracy, metrics.samples
        ),
    );
    Ok(())
}
