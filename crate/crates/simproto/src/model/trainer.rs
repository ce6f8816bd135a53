//! Deterministic training loop wiring label strategies and contrastive
//! terms into per-epoch Adam updates.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contrastive::{
    cl_baseline_thresholds, contrastive_loss_and_grad, prototype_thresholds, BclConfig, LossTerms,
    Reduction, SimilarityMode,
};
use crate::error::{Error, Result};
use crate::io::features::FeatureSet;
use crate::matrix::Mat;
use crate::model::adam::{Adam, AdamConfig};
use crate::model::mlp::{Gradients, MlpClassifier};
use crate::prototype::SimilarityPrototype;
use crate::seeding::mix_seed;
use crate::softening::{
    epoch_labels_with_cap, lsr_labels, sigma0_of, soft_cross_entropy, LabelStrategy,
    SoftLabelMatrix, SofteningSchedule, CONFIDENCE_CAP,
};

/// Contrastive term applied alongside the cross entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContrastiveMode {
    /// Cross entropy only.
    Off,
    /// Prototype-derived thresholds.
    Bcl(BclConfig),
    /// Plain contrastive baseline: same-class pairs expect similarity 1,
    /// different-class pairs expect 0.
    TraditionalCl {
        similarity: SimilarityMode,
        reduction: Reduction,
        weight: f64,
    },
}

/// Full training configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub strategy: LabelStrategy,
    pub contrastive: ContrastiveMode,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub cap: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            strategy: LabelStrategy::Hard,
            contrastive: ContrastiveMode::Off,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            cap: CONFIDENCE_CAP,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig {
                reason: "batch size must be positive".into(),
            });
        }
        if self.learning_rate <= 0.0 || self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig {
                reason: "learning rate must be positive and weight decay nonnegative".into(),
            });
        }
        if let LabelStrategy::Gls { step } = self.strategy {
            if step == 0 {
                return Err(Error::InvalidConfig {
                    reason: "STEP must be at least 1".into(),
                });
            }
        }
        if let LabelStrategy::Lsr { epsilon } = self.strategy {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(Error::InvalidConfidence { value: epsilon });
            }
        }
        Ok(())
    }

    fn needs_prototype(&self) -> bool {
        matches!(self.strategy, LabelStrategy::Gls { .. })
            || matches!(self.contrastive, ContrastiveMode::Bcl(_))
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Target-category confidence in effect: the raw schedule value for the
    /// soft-label strategy, the row confidence otherwise.
    pub sigma_prime: f64,
    pub mean_ce: f64,
    pub mean_inter: f64,
    pub mean_intra: f64,
    pub train_accuracy: f64,
    pub hard_labels: bool,
}

/// Accuracy and confusion matrix of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true_class][predicted_class]`, row sums are per-class
    /// sample counts.
    pub confusion: Vec<Vec<usize>>,
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub test_accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    pub wall_seconds: f64,
}

impl TrainReport {
    /// Equality of everything except wall-clock time.
    pub fn metrics_eq(&self, other: &TrainReport) -> bool {
        self.epochs == other.epochs
            && self.test_accuracy == other.test_accuracy
            && self.confusion == other.confusion
    }
}

/// Soft labels and recorded confidence for one epoch under a strategy.
pub fn epoch_label_matrix(
    strategy: LabelStrategy,
    proto: Option<&SimilarityPrototype>,
    class_count: usize,
    epoch: usize,
    cap: f64,
) -> Result<(SoftLabelMatrix, f64)> {
    match strategy {
        LabelStrategy::Hard => Ok((SoftLabelMatrix::identity(class_count), 1.0)),
        LabelStrategy::Lsr { epsilon } => {
            let labels = lsr_labels(class_count, epsilon)?;
            let sigma = labels.confidence(0);
            Ok((labels, sigma))
        }
        LabelStrategy::Gls { step } => {
            let proto = proto.ok_or_else(|| Error::InvalidConfig {
                reason: "soft-label schedule requires a similarity prototype".into(),
            })?;
            let sigma0 = sigma0_of(proto.matrix())?;
            let schedule = SofteningSchedule::new(sigma0, step, cap)?;
            let sigma = schedule.confidence_at(epoch)?;
            let labels = epoch_labels_with_cap(proto.matrix(), epoch, step, cap)?;
            Ok((labels, sigma))
        }
    }
}

fn batch_step(
    model: &MlpClassifier,
    features: &Mat,
    targets: &[usize],
    labels: &SoftLabelMatrix,
    proto: Option<&SimilarityPrototype>,
    contrastive: &ContrastiveMode,
) -> Result<(LossTerms, Gradients, Mat)> {
    let activations = model.forward_full(features)?;
    let logits = activations.last().expect("forward output").clone();
    if !logits.is_finite() {
        return Err(Error::NonFinite {
            context: "logits".into(),
        });
    }
    let (ce, mut dlogits) = soft_cross_entropy(&logits, targets, labels)?;
    let mut inter = 0.0;
    let mut intra = 0.0;
    let mut weight = 0.0;
    let contrastive_grad = match contrastive {
        ContrastiveMode::Off => None,
        ContrastiveMode::Bcl(cfg) => {
            let proto = proto.ok_or_else(|| Error::InvalidConfig {
                reason: "contrastive thresholds require a similarity prototype".into(),
            })?;
            if proto.class_count() != model.class_count() {
                return Err(Error::DimensionMismatch {
                    context: "prototype order vs model classes".into(),
                    expected: model.class_count(),
                    got: proto.class_count(),
                });
            }
            let thresholds = prototype_thresholds(proto, targets, cfg.indexing);
            let (i1, i2, grad) = contrastive_loss_and_grad(
                &logits,
                &thresholds,
                cfg.similarity,
                cfg.reduction,
                cfg.weight,
            )?;
            inter = i1;
            intra = i2;
            weight = cfg.weight;
            Some(grad)
        }
        ContrastiveMode::TraditionalCl {
            similarity,
            reduction,
            weight: w,
        } => {
            let thresholds = cl_baseline_thresholds(targets);
            let (i1, i2, grad) =
                contrastive_loss_and_grad(&logits, &thresholds, *similarity, *reduction, *w)?;
            inter = i1;
            intra = i2;
            weight = *w;
            Some(grad)
        }
    };
    if let Some(grad) = contrastive_grad {
        for (g, cg) in dlogits.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *g += cg;
        }
    }
    let terms = LossTerms {
        ce,
        inter,
        intra,
        total: ce + weight * (inter + intra),
    };
    let grads = model.backward(&activations, &dlogits);
    Ok((terms, grads, logits))
}

/// Loss terms and parameter gradients of the composite objective on one
/// batch.
pub fn loss_and_grad(
    model: &MlpClassifier,
    features: &Mat,
    targets: &[usize],
    labels: &SoftLabelMatrix,
    proto: Option<&SimilarityPrototype>,
    contrastive: &ContrastiveMode,
) -> Result<(LossTerms, Gradients)> {
    let (terms, grads, _) = batch_step(model, features, targets, labels, proto, contrastive)?;
    Ok((terms, grads))
}

fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Accuracy and confusion matrix on a split. Ties in the logits resolve to
/// the lowest class index.
pub fn evaluate(model: &MlpClassifier, set: &FeatureSet) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::EmptyData {
            what: "evaluation split".into(),
        });
    }
    let c = model.class_count();
    if let Some(&bad) = set.labels.iter().find(|&&t| t >= c) {
        return Err(Error::InvalidConfig {
            reason: format!("label {} outside the model's {c} classes", bad + 1),
        });
    }
    let logits = model.forward(&set.features)?;
    let mut confusion = vec![vec![0usize; c]; c];
    let mut correct = 0usize;
    for (i, &truth) in set.labels.iter().enumerate() {
        let predicted = argmax_row(logits.row(i));
        confusion[truth][predicted] += 1;
        if predicted == truth {
            correct += 1;
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / set.len() as f64,
        confusion,
    })
}

/// Penultimate-layer activations with their labels, one row per sample.
pub fn export_embeddings(
    model: &MlpClassifier,
    set: &FeatureSet,
) -> Result<Vec<(usize, Vec<f64>)>> {
    if set.is_empty() {
        return Err(Error::EmptyData {
            what: "embedding split".into(),
        });
    }
    let hidden = model.penultimate(&set.features)?;
    Ok(set
        .labels
        .iter()
        .zip(hidden.iter_rows())
        .map(|(&label, row)| (label, row.to_vec()))
        .collect())
}

/// Run the training loop. Deterministic given the seed: shuffling uses a
/// per-epoch seed derived only from `(config.seed, epoch)`, so runs that
/// differ only in strategy see identical batch sequences.
pub fn train(
    model: &mut MlpClassifier,
    train_set: &FeatureSet,
    test_set: &FeatureSet,
    proto: Option<&SimilarityPrototype>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    let started = Instant::now();
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyData {
            what: "training split".into(),
        });
    }
    if test_set.is_empty() {
        return Err(Error::EmptyData {
            what: "test split".into(),
        });
    }
    if train_set.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "training features".into(),
            expected: model.input_dim(),
            got: train_set.dim(),
        });
    }
    if config.needs_prototype() && proto.is_none() {
        return Err(Error::InvalidConfig {
            reason: "the configured strategy requires a similarity prototype".into(),
        });
    }
    let c = model.class_count();
    if let Some(&bad) = train_set.labels.iter().find(|&&t| t >= c) {
        return Err(Error::InvalidConfig {
            reason: format!("training label {} outside the model's {c} classes", bad + 1),
        });
    }

    let mut adam = Adam::new(
        model,
        AdamConfig::new(config.learning_rate, config.weight_decay),
    );
    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut records = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let (labels, sigma_prime) =
            epoch_label_matrix(config.strategy, proto, c, epoch, config.cap)?;
        if config.shuffle {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, epoch as u64));
            order.shuffle(&mut rng);
        }
        let mut ce_sum = 0.0;
        let mut inter_sum = 0.0;
        let mut intra_sum = 0.0;
        let mut batches = 0usize;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch = train_set.subset(chunk);
            let (terms, grads, logits) = batch_step(
                model,
                &batch.features,
                &batch.labels,
                &labels,
                proto,
                &config.contrastive,
            )?;
            adam.step(model, &grads);
            ce_sum += terms.ce;
            inter_sum += terms.inter;
            intra_sum += terms.intra;
            batches += 1;
            for (i, &truth) in batch.labels.iter().enumerate() {
                if argmax_row(logits.row(i)) == truth {
                    correct += 1;
                }
            }
        }
        let inv = 1.0 / batches as f64;
        records.push(EpochRecord {
            epoch,
            sigma_prime,
            mean_ce: ce_sum * inv,
            mean_inter: inter_sum * inv,
            mean_intra: intra_sum * inv,
            train_accuracy: correct as f64 / n as f64,
            hard_labels: labels.is_hard(),
        });
    }

    let eval = evaluate(model, test_set)?;
    Ok(TrainReport {
        epochs: records,
        test_accuracy: eval.accuracy,
        confusion: eval.confusion,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Relative gradient error with a small absolute floor, so near-zero
/// entries compare absolutely instead of amplifying rounding noise.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2)
}

/// One axis of the gradient-check report.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    pub axis: String,
    pub max_rel_error: f64,
    pub threshold: f64,
}

impl GradCheckEntry {
    pub fn pass(&self) -> bool {
        self.max_rel_error < self.threshold
    }
}

/// Worst finite-difference error per configuration axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub trials: usize,
    pub seed: u64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(GradCheckEntry::pass)
    }

    pub fn worst(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_rel_error)
            .fold(0.0, f64::max)
    }
}

fn random_prototype(rng: &mut ChaCha8Rng, c: usize) -> SimilarityPrototype {
    let mut m = Mat::identity(c);
    for i in 0..c {
        for j in (i + 1)..c {
            let v = rng.gen_range(0.05..0.95);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let names = (0..c).map(|i| format!("c{i}")).collect();
    SimilarityPrototype::new(
        names,
        crate::prototype::CorrelationMetric::CosineSimilarity,
        m,
    )
    .expect("random prototype is valid")
}

fn fd_max_error(
    model: &MlpClassifier,
    features: &Mat,
    targets: &[usize],
    labels: &SoftLabelMatrix,
    proto: Option<&SimilarityPrototype>,
    contrastive: &ContrastiveMode,
) -> Result<f64> {
    let (_, grads) = loss_and_grad(model, features, targets, labels, proto, contrastive)?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    let layer_count = model.layers().len();
    for k in 0..layer_count {
        let (w_rows, w_cols) = {
            let layer = &model.layers()[k];
            (layer.weights.rows(), layer.weights.cols())
        };
        for r in 0..w_rows {
            for cidx in 0..w_cols {
                let eval = |delta: f64| -> Result<f64> {
                    let mut pert = model.clone();
                    pert.layers_mut()[k].weights[(r, cidx)] += delta;
                    let (terms, _) =
                        loss_and_grad(&pert, features, targets, labels, proto, contrastive)?;
                    Ok(terms.total)
                };
                let numeric = (eval(h)? - eval(-h)?) / (2.0 * h);
                worst = worst.max(relative_error(grads.layers[k].weights[(r, cidx)], numeric));
            }
        }
        let b_len = model.layers()[k].biases.len();
        for bi in 0..b_len {
            let eval = |delta: f64| -> Result<f64> {
                let mut pert = model.clone();
                pert.layers_mut()[k].biases[bi] += delta;
                let (terms, _) =
                    loss_and_grad(&pert, features, targets, labels, proto, contrastive)?;
                Ok(terms.total)
            };
            let numeric = (eval(h)? - eval(-h)?) / (2.0 * h);
            worst = worst.max(relative_error(grads.layers[k].biases[bi], numeric));
        }
    }
    Ok(worst)
}

/// Check analytic parameter gradients against central finite differences on
/// random small instances, reporting the worst error per configuration
/// axis. Deterministic per seed.
pub fn gradient_check(trials: usize, seed: u64) -> Result<GradCheckReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig {
            reason: "gradient check needs at least one trial".into(),
        });
    }
    let mut entries = Vec::new();
    let mut axis = |name: String, contrastive: ContrastiveMode, soft: bool, threshold: f64| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, entries.len() as u64 + 1));
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let c = rng.gen_range(3..5usize);
            let b = rng.gen_range(3..6usize);
            let d = rng.gen_range(4..7usize);
            let hidden = rng.gen_range(4..7usize);
            let mut model = MlpClassifier::new(&[d, hidden, c], rng.gen())?;
            // Random biases keep every logit row away from exact zero,
            // which cosine similarity rejects as degenerate.
            for layer in model.layers_mut() {
                for bias in layer.biases.iter_mut() {
                    *bias = rng.gen_range(0.05..0.3);
                }
            }
            let mut features = Mat::zeros(b, d);
            for v in features.as_mut_slice() {
                *v = rng.gen_range(-1.5..1.5);
            }
            let targets: Vec<usize> = (0..b).map(|_| rng.gen_range(0..c)).collect();
            let proto = random_prototype(&mut rng, c);
            let labels = if soft {
                crate::softening::unify_confidence(proto.matrix(), rng.gen_range(0.55..0.9))?
            } else {
                SoftLabelMatrix::identity(c)
            };
            worst = worst.max(fd_max_error(
                &model,
                &features,
                &targets,
                &labels,
                Some(&proto),
                &contrastive,
            )?);
        }
        entries.push(GradCheckEntry {
            axis: name,
            max_rel_error: worst,
            threshold,
        });
        Ok::<(), Error>(())
    };

    axis("ce_hard".into(), ContrastiveMode::Off, false, 1e-6)?;
    axis("ce_soft".into(), ContrastiveMode::Off, true, 1e-6)?;
    for (iname, indexing) in [
        ("entry", crate::contrastive::IndexingMode::EntryLookup),
        ("rowprod", crate::contrastive::IndexingMode::RowProduct),
    ] {
        for (sname, similarity) in [
            ("cosine", SimilarityMode::CosineOnLogits),
            ("euclid", SimilarityMode::EuclideanExpOnLogits),
        ] {
            for (rname, reduction) in [
                ("mean_inter", Reduction::MeanInter),
                ("nonzero_inter", Reduction::NonzeroInter),
                ("mean_inter_intra", Reduction::MeanInterIntra),
                ("nonzero_inter_intra", Reduction::NonzeroInterIntra),
            ] {
                let cfg = BclConfig {
                    indexing,
                    similarity,
                    reduction,
                    weight: 1.0,
                };
                axis(
                    format!("bcl_{iname}_{sname}_{rname}"),
                    ContrastiveMode::Bcl(cfg),
                    true,
                    1e-4,
                )?;
            }
        }
    }
    axis(
        "cl_baseline".into(),
        ContrastiveMode::TraditionalCl {
            similarity: SimilarityMode::CosineOnLogits,
            reduction: Reduction::MeanInterIntra,
            weight: 1.0,
        },
        false,
        1e-4,
    )?;

    Ok(GradCheckReport {
        trials,
        seed,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrastive::IndexingMode;

    fn toy_separable(n_per_class: usize, seed: u64) -> (FeatureSet, FeatureSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make = |n: usize| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..n {
                for (class, center) in [(-2.0f64, 0usize), (2.0, 1usize)].map(|(c, l)| (c, l)) {
                    rows.push(vec![
                        class + rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                    ]);
                    labels.push(center);
                }
            }
            FeatureSet {
                labels,
                features: Mat::from_rows(&rows),
            }
        };
        (make(n_per_class), make(n_per_class / 2))
    }

    #[test]
    fn hard_ce_gradients_match_textbook_backprop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = MlpClassifier::new(&[4, 5, 3], 11).unwrap();
        let b = 6;
        let mut features = Mat::zeros(b, 4);
        for v in features.as_mut_slice() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let targets: Vec<usize> = (0..b).map(|_| rng.gen_range(0..3)).collect();
        let labels = SoftLabelMatrix::identity(3);
        let (_, grads) = loss_and_grad(
            &model,
            &features,
            &targets,
            &labels,
            None,
            &ContrastiveMode::Off,
        )
        .unwrap();

        // Textbook softmax cross-entropy backprop, written independently.
        let acts = model.forward_full(&features).unwrap();
        let logits = acts.last().unwrap();
        let mut dlogits = Mat::zeros(b, 3);
        for i in 0..b {
            let row = logits.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
            for j in 0..3 {
                let p = (row[j] - max).exp() / z;
                dlogits[(i, j)] = (p - if j == targets[i] { 1.0 } else { 0.0 }) / b as f64;
            }
        }
        let expected = model.backward(&acts, &dlogits);
        for (a, b) in grads.layers.iter().zip(&expected.layers) {
            assert!(a.weights.max_abs_diff(&b.weights) < 1e-12);
            for (x, y) in a.biases.iter().zip(&b.biases) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        let report = gradient_check(1, 42).unwrap();
        assert!(report.all_pass(), "{report:?}");
        assert_eq!(report.entries.len(), 19);
    }

    #[test]
    fn gradient_check_is_deterministic_per_seed() {
        let a = gradient_check(1, 9).unwrap();
        let b = gradient_check(1, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicated_batch_keeps_ce_parameter_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = MlpClassifier::new(&[3, 4, 2], 21).unwrap();
        let b = 4;
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for _ in 0..b {
            rows.push(vec![
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            targets.push(rng.gen_range(0..2));
        }
        let features = Mat::from_rows(&rows);
        let mut dup_rows = Vec::new();
        let mut dup_targets = Vec::new();
        for (r, &t) in rows.iter().zip(&targets) {
            dup_rows.push(r.clone());
            dup_rows.push(r.clone());
            dup_targets.push(t);
            dup_targets.push(t);
        }
        let dup_features = Mat::from_rows(&dup_rows);
        let labels = SoftLabelMatrix::identity(2);
        let (_, base) = loss_and_grad(
            &model,
            &features,
            &targets,
            &labels,
            None,
            &ContrastiveMode::Off,
        )
        .unwrap();
        let (_, dup) = loss_and_grad(
            &model,
            &dup_features,
            &dup_targets,
            &labels,
            None,
            &ContrastiveMode::Off,
        )
        .unwrap();
        for (a, b) in base.layers.iter().zip(&dup.layers) {
            assert!(a.weights.max_abs_diff(&b.weights) < 1e-12);
        }
    }

    #[test]
    fn evaluate_counts_argmax_with_low_index_ties() {
        // A fixed logits table via an identity model.
        let layer = crate::model::mlp::Layer {
            weights: Mat::identity(3),
            biases: vec![0.0; 3],
        };
        let model = MlpClassifier::from_parameters(vec![3, 3], vec![layer]).unwrap();
        let set = FeatureSet {
            labels: vec![0, 1, 2, 0],
            features: Mat::from_rows(&[
                vec![3.0, 1.0, 0.0], // predicted 0, correct
                vec![2.0, 2.0, 0.0], // tie 0/1 resolves to 0, wrong
                vec![0.0, 1.0, 5.0], // predicted 2, correct
                vec![0.0, 4.0, 1.0], // predicted 1, wrong
            ]),
        };
        let eval = evaluate(&model, &set).unwrap();
        assert_eq!(eval.accuracy, 0.5);
        assert_eq!(eval.confusion[0], vec![1, 1, 0]);
        assert_eq!(eval.confusion[1], vec![1, 0, 0]);
        assert_eq!(eval.confusion[2], vec![0, 0, 1]);
        let per_class: Vec<usize> = eval.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(per_class, vec![2, 1, 1]);
    }

    #[test]
    fn constant_predictor_scores_one_over_c() {
        let layer = crate::model::mlp::Layer {
            weights: Mat::zeros(4, 2),
            biases: vec![1.0, 0.0, 0.0, 0.0],
        };
        let model = MlpClassifier::from_parameters(vec![2, 4], vec![layer]).unwrap();
        let set = FeatureSet {
            labels: vec![0, 1, 2, 3],
            features: Mat::from_rows(&[
                vec![0.1, 0.2],
                vec![0.3, 0.4],
                vec![0.5, 0.6],
                vec![0.7, 0.8],
            ]),
        };
        let eval = evaluate(&model, &set).unwrap();
        assert_eq!(eval.accuracy, 0.25);
    }

    #[test]
    fn zero_epochs_reports_untrained_accuracy() {
        let (train_set, test_set) = toy_separable(8, 1);
        let mut model = MlpClassifier::new(&[2, 4, 2], 5).unwrap();
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &train_set, &test_set, None, &config).unwrap();
        assert!(report.epochs.is_empty());
        let eval = evaluate(&model, &test_set).unwrap();
        assert_eq!(report.test_accuracy, eval.accuracy);
    }

    #[test]
    fn separable_toy_problem_reaches_full_accuracy() {
        let (train_set, test_set) = toy_separable(40, 2);
        // Sanity: the data really is separable by the sign of the first
        // coordinate.
        for (row, &label) in train_set.features.iter_rows().zip(&train_set.labels) {
            assert_eq!(row[0] > 0.0, label == 1);
        }
        let mut model = MlpClassifier::new(&[2, 8, 2], 3).unwrap();
        let config = TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 5e-3,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &train_set, &test_set, None, &config).unwrap();
        assert_eq!(report.test_accuracy, 1.0);
    }

    #[test]
    fn gls_schedule_is_recorded_and_switches_to_hard() {
        let (train_set, test_set) = toy_separable(10, 4);
        let proto = random_prototype(&mut ChaCha8Rng::seed_from_u64(2), 2);
        let step = 5;
        let mut model = MlpClassifier::new(&[2, 4, 2], 6).unwrap();
        let config = TrainConfig {
            strategy: LabelStrategy::Gls { step },
            epochs: 10,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &train_set, &test_set, Some(&proto), &config).unwrap();
        let sigma0 = sigma0_of(proto.matrix()).unwrap();
        for record in &report.epochs {
            let expected = sigma0 * (1.0 - (record.epoch - 1) as f64 / step as f64)
                + CONFIDENCE_CAP * (record.epoch - 1) as f64 / step as f64;
            assert!((record.sigma_prime - expected).abs() < 1e-12);
            assert_eq!(record.hard_labels, record.epoch >= step + 2);
        }
    }

    #[test]
    fn same_seed_reproduces_the_report() {
        let (train_set, test_set) = toy_separable(10, 9);
        let proto = random_prototype(&mut ChaCha8Rng::seed_from_u64(1), 2);
        let config = TrainConfig {
            strategy: LabelStrategy::Gls { step: 4 },
            contrastive: ContrastiveMode::Bcl(BclConfig {
                indexing: IndexingMode::EntryLookup,
                ..BclConfig::default()
            }),
            epochs: 6,
            batch_size: 8,
            seed: 77,
            ..TrainConfig::default()
        };
        let run = || {
            let mut model = MlpClassifier::new(&[2, 4, 2], config.seed).unwrap();
            train(&mut model, &train_set, &test_set, Some(&proto), &config).unwrap()
        };
        let a = run();
        let b = run();
        assert!(a.metrics_eq(&b));
    }

    #[test]
    fn hard_strategy_records_unit_confidence() {
        let (train_set, test_set) = toy_separable(6, 12);
        let mut model = MlpClassifier::new(&[2, 4, 2], 1).unwrap();
        let config = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &train_set, &test_set, None, &config).unwrap();
        assert!(report
            .epochs
            .iter()
            .all(|r| r.sigma_prime == 1.0 && r.hard_labels));
    }

    #[test]
    fn embeddings_match_recomputed_hidden_layer() {
        let model = MlpClassifier::new(&[3, 4, 2], 31).unwrap();
        let set = FeatureSet {
            labels: vec![0, 1],
            features: Mat::from_rows(&[vec![0.5, -0.2, 1.0], vec![-1.0, 0.3, 0.1]]),
        };
        let rows = export_embeddings(&model, &set).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].1.len(), 4);
        let again = export_embeddings(&model, &set).unwrap();
        assert_eq!(rows, again);
        let acts = model.forward_full(&set.features).unwrap();
        for (i, (_, emb)) in rows.iter().enumerate() {
            for (j, &v) in emb.iter().enumerate() {
                assert!((v - acts[1][(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn training_on_empty_split_fails() {
        let set = FeatureSet {
            labels: vec![],
            features: Mat::zeros(0, 2),
        };
        let (train_set, _) = toy_separable(4, 3);
        let mut model = MlpClassifier::new(&[2, 4, 2], 0).unwrap();
        let config = TrainConfig::default();
        assert!(train(&mut model, &set, &train_set, None, &config).is_err());
        assert!(train(&mut model, &train_set, &set, None, &config).is_err());
    }
}
