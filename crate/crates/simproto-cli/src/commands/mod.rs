//! Command implementations shared by the binary and the integration tests.

mod bench;
mod eval;
mod gen;
mod gradcheck;
mod prototype;
mod stats;
mod train;

pub use bench::{aggregate_runs, cmd_bench, sign_test_p, BenchRow, RunRecord};
pub use eval::cmd_eval;
pub use gen::cmd_gen;
pub use gradcheck::cmd_gradcheck;
pub use prototype::cmd_prototype;
pub use stats::cmd_stats;
pub use train::{cmd_train, TrainMetrics};

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use simproto::io::archive::PrototypeArchive;
use simproto::io::dataset::{Manifest, TEST_FEATURES, TRAIN_FEATURES};
use simproto::io::features::FeatureSet;
use simproto::io::{features, summary};
use simproto::model::{train, MlpClassifier, TrainConfig, TrainReport};
use simproto::prototype::{build_prototype, SimilarityPrototype};
use simproto::softening::LabelStrategy;
use simproto::stats::summarize_dataset_par;
use simproto::ContrastiveMode;

use crate::config::RunConfig;

/// Data and prototype resolved for a training run.
pub struct ResolvedData {
    pub train: FeatureSet,
    pub test: FeatureSet,
    pub class_names: Vec<String>,
    pub l: usize,
    pub proto: SimilarityPrototype,
}

/// Load an on-disk dataset or generate one from `gen.*`, and obtain the
/// similarity prototype: from an archive when given, otherwise from the
/// dataset's own label-map statistics.
pub fn resolve_data(cfg: &RunConfig, proto_path: Option<&Path>, seed: u64) -> Result<ResolvedData> {
    if let Some(dir) = &cfg.data_dir {
        let manifest = Manifest::load(dir)?;
        let train = features::read(&dir.join(TRAIN_FEATURES))?;
        let test = features::read(&dir.join(TEST_FEATURES))?;
        let proto = match proto_path {
            Some(path) => {
                PrototypeArchive::load(&simproto::io::archive::resolve_dir(path))?.prototype
            }
            None => {
                let stats = summarize_dataset_par(dir)?;
                build_prototype(&stats, cfg.metric)?
            }
        };
        Ok(ResolvedData {
            train,
            test,
            class_names: manifest.classes.iter().map(|c| c.name.clone()).collect(),
            l: manifest.l,
            proto,
        })
    } else {
        let dataset = cfg.gen.generate(seed)?;
        let classes: Vec<(String, Vec<simproto::LabelMap>)> = dataset
            .class_names
            .iter()
            .enumerate()
            .map(|(c, name)| (name.clone(), dataset.class_maps(c).to_vec()))
            .collect();
        let stats = simproto::stats::summarize_maps(dataset.l, &classes)?;
        let proto = match proto_path {
            Some(path) => {
                PrototypeArchive::load(&simproto::io::archive::resolve_dir(path))?.prototype
            }
            None => build_prototype(&stats, cfg.metric)?,
        };
        Ok(ResolvedData {
            train: dataset.train_set(),
            test: dataset.test_set(),
            class_names: dataset.class_names.clone(),
            l: dataset.l,
            proto,
        })
    }
}

/// Build the model and run one training pass.
pub fn run_training(
    cfg: &RunConfig,
    label: LabelStrategy,
    contrastive: ContrastiveMode,
    data: &ResolvedData,
    seed: u64,
) -> Result<(TrainReport, MlpClassifier)> {
    let mut dims = vec![data.train.dim()];
    dims.extend_from_slice(&cfg.train.hidden);
    dims.push(data.class_names.len());
    let mut model = MlpClassifier::new(&dims, seed)?;
    let train_config = TrainConfig {
        strategy: label,
        contrastive,
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
        learning_rate: cfg.train.learning_rate,
        weight_decay: cfg.train.weight_decay,
        cap: cfg.train.cap,
        seed,
        shuffle: cfg.train.shuffle,
    };
    let report = train(
        &mut model,
        &data.train,
        &data.test,
        Some(&data.proto),
        &train_config,
    )?;
    Ok((report, model))
}

/// Digest of a dataset summary, shared by the stats and prototype commands.
pub fn summary_digest(stats: &simproto::DatasetSemanticSummary) -> String {
    summary::digest(stats)
}

pub(crate) fn ensure_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

pub(crate) fn say(cfg: &RunConfig, message: impl AsRef<str>) {
    if !cfg.quiet {
        println!("{}", message.as_ref());
    }
}
