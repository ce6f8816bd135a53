//! Run configuration: a flat `key = value` file with dotted section keys.
//!
//! Every CLI flag mirrors a config key and flags override the file. Unknown
//! keys are rejected. The `SIMPROTO_OUT` environment variable supplies the
//! default output root.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use simproto::contrastive::{BclConfig, IndexingMode, Reduction, SimilarityMode};
use simproto::datagen::{GeneratorSpec, PairOverlap};
use simproto::model::ContrastiveMode;
use simproto::prototype::CorrelationMetric;
use simproto::softening::{LabelStrategy, CONFIDENCE_CAP};

/// Which contrastive term a run applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastiveChoice {
    Off,
    Bcl,
    TraditionalCl,
}

/// Trainer section (`train.*`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub strategy: String,
    pub lsr_epsilon: f64,
    pub step: usize,
    pub cap: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden: Vec<usize>,
    pub shuffle: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            strategy: "hard".into(),
            lsr_epsilon: 0.1,
            step: 20,
            cap: CONFIDENCE_CAP,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            hidden: vec![64],
            shuffle: true,
        }
    }
}

/// Contrastive section (`bcl.*`).
#[derive(Debug, Clone, PartialEq)]
pub struct BclSection {
    pub mode: ContrastiveChoice,
    pub indexing: IndexingMode,
    pub similarity: SimilarityMode,
    pub reduction: Reduction,
    pub weight: f64,
}

impl Default for BclSection {
    fn default() -> Self {
        BclSection {
            mode: ContrastiveChoice::Off,
            indexing: IndexingMode::EntryLookup,
            similarity: SimilarityMode::EuclideanExpOnLogits,
            reduction: Reduction::MeanInterIntra,
            weight: 1.0,
        }
    }
}

/// Benchmark section (`bench.*`).
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSection {
    pub strategies: Vec<String>,
    pub seeds: Vec<u64>,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            strategies: vec!["hard".into(), "lsr".into(), "gls".into(), "gls+bcl".into()],
            seeds: (0..10).collect(),
        }
    }
}

/// Report section (`report.*`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSection {
    /// Include wall-clock seconds in metrics files. Disable for
    /// byte-identical reruns.
    pub timing: bool,
    /// Export the per-epoch soft-label matrices as CSV.
    pub labels: bool,
    /// Export test-split penultimate embeddings after training.
    pub embeddings: bool,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            timing: true,
            labels: false,
            embeddings: false,
        }
    }
}

/// Full configuration tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
    /// Existing dataset directory; when unset, commands that need data
    /// generate it from `gen.*`.
    pub data_dir: Option<PathBuf>,
    pub metric: CorrelationMetric,
    pub gen: GeneratorSpec,
    pub train: TrainSection,
    pub bcl: BclSection,
    pub bench: BenchSection,
    pub report: ReportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let out = std::env::var_os("SIMPROTO_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        RunConfig {
            seed: 42,
            out,
            quiet: false,
            data_dir: None,
            metric: CorrelationMetric::CosineSimilarity,
            gen: GeneratorSpec::default(),
            train: TrainSection::default(),
            bcl: BclSection::default(),
            bench: BenchSection::default(),
            report: ReportSection::default(),
        }
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => bail!("{key}: {other:?} is not a boolean"),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| anyhow!("{key}: cannot parse {value:?}"))
}

/// Parse `a:b:overlap` pair triples, 1-based class ids, comma separated.
fn parse_pairs(value: &str) -> Result<Vec<PairOverlap>> {
    let mut pairs = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 3 {
            bail!("gen.pairs: {item:?} is not of the form a:b:overlap");
        }
        let first: usize = parse_num("gen.pairs", parts[0])?;
        let second: usize = parse_num("gen.pairs", parts[1])?;
        if first == 0 || second == 0 {
            bail!("gen.pairs: class ids are 1-based");
        }
        pairs.push(PairOverlap {
            first: first - 1,
            second: second - 1,
            overlap: parse_num("gen.pairs", parts[2])?,
        });
    }
    Ok(pairs)
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<T>(key, s))
        .collect()
}

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "quiet" => self.quiet = parse_bool(key, value)?,
            "data.dir" => self.data_dir = Some(PathBuf::from(value)),
            "proto.metric" => {
                self.metric = CorrelationMetric::parse(value).map_err(|e| anyhow!("{e}"))?
            }
            "gen.classes" => self.gen.classes = parse_num(key, value)?,
            "gen.labels" => self.gen.labels = parse_num(key, value)?,
            "gen.regions" => self.gen.regions = parse_num(key, value)?,
            "gen.map_width" => self.gen.map_width = parse_num(key, value)?,
            "gen.map_height" => self.gen.map_height = parse_num(key, value)?,
            "gen.per_class" => self.gen.per_class = parse_num(key, value)?,
            "gen.pairs" => self.gen.pairs = parse_pairs(value)?,
            "gen.base_overlap" => self.gen.base_overlap = parse_num(key, value)?,
            "gen.feature_noise" => self.gen.feature_noise = parse_num(key, value)?,
            "gen.distractors" => self.gen.distractor_dims = parse_num(key, value)?,
            "gen.split" => self.gen.split_fraction = parse_num(key, value)?,
            "train.strategy" => match value {
                "hard" | "lsr" | "gls" => self.train.strategy = value.into(),
                other => bail!("train.strategy: unknown strategy {other:?}"),
            },
            "train.lsr_epsilon" => self.train.lsr_epsilon = parse_num(key, value)?,
            "train.step" => self.train.step = parse_num(key, value)?,
            "train.cap" => self.train.cap = parse_num(key, value)?,
            "train.epochs" => self.train.epochs = parse_num(key, value)?,
            "train.batch_size" => self.train.batch_size = parse_num(key, value)?,
            "train.learning_rate" => self.train.learning_rate = parse_num(key, value)?,
            "train.weight_decay" => self.train.weight_decay = parse_num(key, value)?,
            "train.hidden" => self.train.hidden = parse_list(key, value)?,
            "train.shuffle" => self.train.shuffle = parse_bool(key, value)?,
            "bcl.mode" => {
                self.bcl.mode = match value {
                    "off" => ContrastiveChoice::Off,
                    "bcl" => ContrastiveChoice::Bcl,
                    "cl" => ContrastiveChoice::TraditionalCl,
                    other => bail!("bcl.mode: unknown mode {other:?}"),
                }
            }
            "bcl.indexing" => {
                self.bcl.indexing = match value {
                    "entry" => IndexingMode::EntryLookup,
                    "row_product" => IndexingMode::RowProduct,
                    other => bail!("bcl.indexing: unknown mode {other:?}"),
                }
            }
            "bcl.similarity" => {
                self.bcl.similarity = match value {
                    "cosine" => SimilarityMode::CosineOnLogits,
                    "euclidean" => SimilarityMode::EuclideanExpOnLogits,
                    other => bail!("bcl.similarity: unknown mode {other:?}"),
                }
            }
            "bcl.reduction" => {
                self.bcl.reduction = match value {
                    "mean_inter" => Reduction::MeanInter,
                    "nonzero_inter" => Reduction::NonzeroInter,
                    "mean_inter_intra" => Reduction::MeanInterIntra,
                    "nonzero_inter_intra" => Reduction::NonzeroInterIntra,
                    other => bail!("bcl.reduction: unknown reduction {other:?}"),
                }
            }
            "bcl.weight" => self.bcl.weight = parse_num(key, value)?,
            "bench.strategies" => {
                self.bench.strategies = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect()
            }
            "bench.seeds" => self.bench.seeds = parse_list(key, value)?,
            "report.timing" => self.report.timing = parse_bool(key, value)?,
            "report.labels" => self.report.labels = parse_bool(key, value)?,
            "report.embeddings" => self.report.embeddings = parse_bool(key, value)?,
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Read a config file: `key = value` lines, `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!("{}:{}: expected 'key = value'", path.display(), lineno + 1)
            })?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    /// Apply repeatable `--set key=value` overrides.
    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<()> {
        for item in sets {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("--set {item:?}: expected key=value"))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Label strategy configured in `train.*`.
    pub fn label_strategy(&self) -> Result<LabelStrategy> {
        strategy_from_name(&self.train.strategy, &self.train, &Default::default()).map(|(s, _)| s)
    }

    /// Contrastive mode configured in `bcl.*`.
    pub fn contrastive_mode(&self) -> ContrastiveMode {
        contrastive_from_choice(self.bcl.mode, &self.bcl)
    }

    /// Resolve a compound strategy token (`hard`, `lsr`, `gls`, `cl`,
    /// `bcl`, `gls+bcl`, `lsr+cl`, ...) into a label strategy and a
    /// contrastive mode, using this config's parameters.
    pub fn resolve_strategy_token(&self, token: &str) -> Result<(LabelStrategy, ContrastiveMode)> {
        let mut label = LabelStrategy::Hard;
        let mut contrastive = ContrastiveMode::Off;
        for part in token.split('+').map(str::trim) {
            match part {
                "hard" => label = LabelStrategy::Hard,
                "lsr" => {
                    label = LabelStrategy::Lsr {
                        epsilon: self.train.lsr_epsilon,
                    }
                }
                "gls" => {
                    label = LabelStrategy::Gls {
                        step: self.train.step,
                    }
                }
                "bcl" => contrastive = contrastive_from_choice(ContrastiveChoice::Bcl, &self.bcl),
                "cl" => {
                    contrastive =
                        contrastive_from_choice(ContrastiveChoice::TraditionalCl, &self.bcl)
                }
                other => bail!("unknown strategy token {other:?} in {token:?}"),
            }
        }
        Ok((label, contrastive))
    }
}

fn strategy_from_name(
    name: &str,
    train: &TrainSection,
    _bcl: &BclSection,
) -> Result<(LabelStrategy, ())> {
    let strategy = match name {
        "hard" => LabelStrategy::Hard,
        "lsr" => LabelStrategy::Lsr {
            epsilon: train.lsr_epsilon,
        },
        "gls" => LabelStrategy::Gls { step: train.step },
        other => bail!("unknown strategy {other:?}"),
    };
    Ok((strategy, ()))
}

fn contrastive_from_choice(choice: ContrastiveChoice, bcl: &BclSection) -> ContrastiveMode {
    match choice {
        ContrastiveChoice::Off => ContrastiveMode::Off,
        ContrastiveChoice::Bcl => ContrastiveMode::Bcl(BclConfig {
            indexing: bcl.indexing,
            similarity: bcl.similarity,
            reduction: bcl.reduction,
            weight: bcl.weight,
        }),
        ContrastiveChoice::TraditionalCl => ContrastiveMode::TraditionalCl {
            similarity: bcl.similarity,
            reduction: bcl.reduction,
            weight: bcl.weight,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_parse_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# a comment\nseed = 7\ntrain.epochs = 5\ngen.pairs = 1:2:0.8, 3:4:0.6\nbcl.mode = bcl\n",
        )
        .unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.epochs, 5);
        assert_eq!(cfg.gen.pairs.len(), 2);
        assert_eq!(cfg.gen.pairs[1].first, 2);
        assert_eq!(cfg.bcl.mode, ContrastiveChoice::Bcl);

        std::fs::write(&path, "bogus.key = 1\n").unwrap();
        let err = cfg.apply_file(&path).unwrap_err();
        assert!(format!("{err:#}").contains("bogus.key"));
    }

    #[test]
    fn overrides_win_over_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_overrides(&["train.epochs=3".into(), "quiet=true".into()])
            .unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert!(cfg.quiet);
    }

    #[test]
    fn strategy_tokens_resolve() {
        let cfg = RunConfig::default();
        let (label, contrastive) = cfg.resolve_strategy_token("gls+bcl").unwrap();
        assert_eq!(label, LabelStrategy::Gls { step: 20 });
        assert!(matches!(contrastive, ContrastiveMode::Bcl(_)));

        let (label, contrastive) = cfg.resolve_strategy_token("lsr+cl").unwrap();
        assert_eq!(label, LabelStrategy::Lsr { epsilon: 0.1 });
        assert!(matches!(contrastive, ContrastiveMode::TraditionalCl { .. }));

        assert!(cfg.resolve_strategy_token("warp").is_err());
    }
}
