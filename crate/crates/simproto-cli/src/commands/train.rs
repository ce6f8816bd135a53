//! `train`: one full training run with its report files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::commands::{ensure_out_dir, resolve_data, run_training, say, ResolvedData};
use crate::config::RunConfig;
use simproto::io::archive::matrix_csv_row;
use simproto::io::fmt_f64;
use simproto::model::{epoch_label_matrix, export_embeddings, TrainReport};

pub const REPORT_FILE: &str = "report.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.csv";

/// Final metrics, serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub strategy: String,
    pub contrastive: String,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub test_accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

pub fn report_csv(report: &TrainReport) -> String {
    let mut out = String::from(
        "epoch,sigma_prime,mean_ce,mean_inter,mean_intra,train_accuracy,hard_labels\n",
    );
    for r in &report.epochs {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.epoch,
            fmt_f64(r.sigma_prime),
            fmt_f64(r.mean_ce),
            fmt_f64(r.mean_inter),
            fmt_f64(r.mean_intra),
            fmt_f64(r.train_accuracy),
            r.hard_labels
        )
        .expect("string write");
    }
    out
}

fn contrastive_name(cfg: &RunConfig) -> &'static str {
    match cfg.contrastive_mode() {
        simproto::ContrastiveMode::Off => "off",
        simproto::ContrastiveMode::Bcl(_) => "bcl",
        simproto::ContrastiveMode::TraditionalCl { .. } => "cl",
    }
}

pub fn cmd_train(cfg: &RunConfig, proto_path: Option<&Path>, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let data = resolve_data(cfg, proto_path, cfg.seed)?;
    let label = cfg.label_strategy()?;
    let contrastive = cfg.contrastive_mode();
    let (report, model) = run_training(cfg, label, contrastive, &data, cfg.seed)?;

    std::fs::write(out_dir.join(REPORT_FILE), report_csv(&report))?;

    let metrics = TrainMetrics {
        strategy: cfg.train.strategy.clone(),
        contrastive: contrastive_name(cfg).to_owned(),
        seed: cfg.seed,
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
        test_accuracy: report.test_accuracy,
        confusion: report.confusion.clone(),
        wall_seconds: cfg.report.timing.then_some(report.wall_seconds),
    };
    let mut json = serde_json::to_string_pretty(&metrics)?;
    json.push('\n');
    std::fs::write(out_dir.join(METRICS_FILE), json)?;

    simproto::io::checkpoint::save(&out_dir.join(CHECKPOINT_FILE), &model)?;

    if cfg.report.labels {
        export_label_schedule(cfg, &data, out_dir)?;
    }
    if cfg.report.embeddings {
        let rows = export_embeddings(&model, &data.test)?;
        let mut out = String::from("label");
        for i in 1..=rows[0].1.len() {
            write!(out, ",e{i}").expect("string write");
        }
        out.push('\n');
        for (label, values) in &rows {
            write!(out, "{},{}", label + 1, matrix_csv_row(values)).expect("string write");
            out.push('\n');
        }
        std::fs::write(out_dir.join(EMBEDDINGS_FILE), out)?;
    }

    say(
        cfg,
        format!(
            "strategy={} contrastive={} seed={} test_accuracy={:.4}",
            cfg.train.strategy,
            contrastive_name(cfg),
            cfg.seed,
            report.test_accuracy
        ),
    );
    Ok(())
}

/// Write the soft-label matrix in effect at each epoch as
/// `labels_epoch_<e>.csv` (header of class names, then the C rows).
fn export_label_schedule(cfg: &RunConfig, data: &ResolvedData, out_dir: &Path) -> Result<()> {
    let label = cfg.label_strategy()?;
    let c = data.class_names.len();
    for epoch in 1..=cfg.train.epochs {
        let (labels, _) = epoch_label_matrix(label, Some(&data.proto), c, epoch, cfg.train.cap)?;
        let mut out = data.class_names.join(",");
        out.push('\n');
        for row in labels.matrix().iter_rows() {
            out.push_str(&matrix_csv_row(row));
            out.push('\n');
        }
        std::fs::write(out_dir.join(format!("labels_epoch_{epoch:03}.csv")), out)?;
    }
    Ok(())
}
