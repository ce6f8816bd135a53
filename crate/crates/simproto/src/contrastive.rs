//! Batch-level contrastive loss guided by the similarity prototype.
//!
//! Within a mini-batch, the pairwise similarity of predictions is compared
//! against prototype-derived thresholds. Cross-class pairs must not exceed
//! the statistical similarity of their classes (inter term); same-class
//! pairs must reach at least the class's maximum cross-class similarity
//! (intra term). Both terms are hinges, reduced either over all `B^2`
//! entries or over the strictly positive ones.

use crate::error::{Error, Result};
use crate::matrix::{dot, euclidean_distance, norm, Mat};
use crate::prototype::SimilarityPrototype;
use crate::softening::{soft_cross_entropy, SoftLabelMatrix};

/// How a pair of targets indexes the prototype to form its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexingMode {
    /// Threshold is the prototype entry `S[target_i][target_j]`.
    EntryLookup,
    /// Threshold is the dot product of prototype rows `target_i` and
    /// `target_j`.
    RowProduct,
}

/// Similarity measure applied to pairs of logit rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMode {
    CosineOnLogits,
    EuclideanExpOnLogits,
}

/// Averaging flavor for a hinge-loss matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    /// Sum over all entries divided by `B^2`.
    Mean,
    /// Sum divided by the count of strictly positive entries; 0 when none.
    Nonzero,
}

/// Reduction choice for the combined objective. The `*Inter` variants drop
/// the intra term entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    MeanInter,
    NonzeroInter,
    MeanInterIntra,
    NonzeroInterIntra,
}

impl Reduction {
    pub fn kind(&self) -> ReductionKind {
        match self {
            Reduction::MeanInter | Reduction::MeanInterIntra => ReductionKind::Mean,
            Reduction::NonzeroInter | Reduction::NonzeroInterIntra => ReductionKind::Nonzero,
        }
    }

    pub fn includes_intra(&self) -> bool {
        matches!(
            self,
            Reduction::MeanInterIntra | Reduction::NonzeroInterIntra
        )
    }
}

/// Full configuration of the contrastive term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BclConfig {
    pub indexing: IndexingMode,
    pub similarity: SimilarityMode,
    pub reduction: Reduction,
    /// Scale of the contrastive term in the combined objective. The
    /// formulation fixes this at 1; it is exposed for experiments only.
    pub weight: f64,
}

impl Default for BclConfig {
    fn default() -> Self {
        BclConfig {
            indexing: IndexingMode::EntryLookup,
            similarity: SimilarityMode::EuclideanExpOnLogits,
            reduction: Reduction::MeanInterIntra,
            weight: 1.0,
        }
    }
}

/// Logits and targets for one mini-batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPredictions {
    logits: Mat,
    targets: Vec<usize>,
}

impl BatchPredictions {
    /// Validates finite logits and in-range targets.
    pub fn new(logits: Mat, targets: Vec<usize>) -> Result<Self> {
        if logits.rows() != targets.len() {
            return Err(Error::DimensionMismatch {
                context: "batch targets".into(),
                expected: logits.rows(),
                got: targets.len(),
            });
        }
        if !logits.is_finite() {
            return Err(Error::NonFinite {
                context: "batch logits".into(),
            });
        }
        let c = logits.cols();
        if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
            return Err(Error::InvalidConfig {
                reason: format!("target class {} outside [1, {c}]", bad + 1),
            });
        }
        Ok(BatchPredictions { logits, targets })
    }

    pub fn batch_size(&self) -> usize {
        self.targets.len()
    }

    pub fn class_count(&self) -> usize {
        self.logits.cols()
    }

    pub fn logits(&self) -> &Mat {
        &self.logits
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

/// Per-pair threshold matrices: `inter` bounds cross-class similarity from
/// above, `intra` bounds same-class similarity from below.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchThresholds {
    pub inter: Mat,
    pub intra: Mat,
}

/// Diagonal matrix whose entry `c` is the maximum similarity between class
/// `c` and any other class; zero elsewhere.
pub fn self_similarity_matrix(proto: &SimilarityPrototype) -> Mat {
    let c = proto.class_count();
    let mut out = Mat::zeros(c, c);
    for i in 0..c {
        let mut best = 0.0f64;
        for k in 0..c {
            if k != i {
                best = best.max(proto.value(i, k));
            }
        }
        out[(i, i)] = best;
    }
    out
}

/// Expand a `C x C` matrix to per-pair `B x B` thresholds using the batch
/// targets.
pub fn batch_thresholds(s: &Mat, targets: &[usize], indexing: IndexingMode) -> Mat {
    let b = targets.len();
    let mut out = Mat::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            out[(i, j)] = match indexing {
                IndexingMode::EntryLookup => s[(targets[i], targets[j])],
                IndexingMode::RowProduct => dot(s.row(targets[i]), s.row(targets[j])),
            };
        }
    }
    out
}

/// Both threshold matrices for a batch under the prototype.
pub fn prototype_thresholds(
    proto: &SimilarityPrototype,
    targets: &[usize],
    indexing: IndexingMode,
) -> BatchThresholds {
    BatchThresholds {
        inter: batch_thresholds(proto.matrix(), targets, indexing),
        intra: batch_thresholds(&self_similarity_matrix(proto), targets, indexing),
    }
}

/// Same-class indicator for every ordered sample pair: 1 where the targets
/// agree (including the diagonal), 0 elsewhere. Symmetric by construction.
pub fn pair_relation(targets: &[usize]) -> Mat {
    let b = targets.len();
    let mut out = Mat::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            if targets[i] == targets[j] {
                out[(i, j)] = 1.0;
            }
        }
    }
    out
}

/// Thresholds of the plain contrastive-loss baseline: same-class pairs
/// expect similarity 1, different-class pairs expect 0.
pub fn cl_baseline_thresholds(targets: &[usize]) -> BatchThresholds {
    let relation = pair_relation(targets);
    BatchThresholds {
        inter: relation.clone(),
        intra: relation,
    }
}

/// Pairwise similarity of logit rows.
///
/// Cosine output is clamped to `[-1, 1]`; the exponential Euclidean variant
/// shares the prototype's `exp(-distance)` codomain so thresholds and
/// similarities are comparable. Diagonal entries are exactly 1.
pub fn pairwise_similarity(logits: &Mat, mode: SimilarityMode) -> Result<Mat> {
    let b = logits.rows();
    let mut out = Mat::zeros(b, b);
    match mode {
        SimilarityMode::CosineOnLogits => {
            let norms: Vec<f64> = (0..b).map(|i| norm(logits.row(i))).collect();
            if let Some(row) = norms.iter().position(|&n| n == 0.0) {
                return Err(Error::DegenerateRow { row });
            }
            for i in 0..b {
                out[(i, i)] = 1.0;
                for j in (i + 1)..b {
                    let v = (dot(logits.row(i), logits.row(j)) / (norms[i] * norms[j]))
                        .clamp(-1.0, 1.0);
                    out[(i, j)] = v;
                    out[(j, i)] = v;
                }
            }
        }
        SimilarityMode::EuclideanExpOnLogits => {
            for i in 0..b {
                out[(i, i)] = 1.0;
                for j in (i + 1)..b {
                    let v = (-euclidean_distance(logits.row(i), logits.row(j))).exp();
                    out[(i, j)] = v;
                    out[(j, i)] = v;
                }
            }
        }
    }
    Ok(out)
}

fn reduce(hinged: &Mat, kind: ReductionKind) -> f64 {
    let mut sum = 0.0;
    let mut positive = 0usize;
    for &v in hinged.as_slice() {
        sum += v;
        if v > 0.0 {
            positive += 1;
        }
    }
    match kind {
        ReductionKind::Mean => sum / (hinged.rows() * hinged.cols()) as f64,
        ReductionKind::Nonzero => {
            if positive == 0 {
                0.0
            } else {
                sum / positive as f64
            }
        }
    }
}

fn reduction_weight(hinged: &Mat, kind: ReductionKind) -> f64 {
    match kind {
        ReductionKind::Mean => 1.0 / (hinged.rows() * hinged.cols()) as f64,
        ReductionKind::Nonzero => {
            let positive = hinged.as_slice().iter().filter(|&&v| v > 0.0).count();
            if positive == 0 {
                0.0
            } else {
                1.0 / positive as f64
            }
        }
    }
}

/// Inter-class hinge: entries where predicted similarity exceeds its
/// threshold, reduced.
pub fn inter_loss(p_matrix: &Mat, thresholds: &Mat, kind: ReductionKind) -> f64 {
    let mut hinged = Mat::zeros(p_matrix.rows(), p_matrix.cols());
    for (h, (&p, &t)) in hinged
        .as_mut_slice()
        .iter_mut()
        .zip(p_matrix.as_slice().iter().zip(thresholds.as_slice()))
    {
        *h = (p - t).max(0.0);
    }
    reduce(&hinged, kind)
}

/// Intra-class hinge: entries where predicted similarity falls short of its
/// threshold, reduced.
pub fn intra_loss(p_matrix: &Mat, intra_thresholds: &Mat, kind: ReductionKind) -> f64 {
    let mut hinged = Mat::zeros(p_matrix.rows(), p_matrix.cols());
    for (h, (&p, &t)) in hinged
        .as_mut_slice()
        .iter_mut()
        .zip(p_matrix.as_slice().iter().zip(intra_thresholds.as_slice()))
    {
        *h = (t - p).max(0.0);
    }
    reduce(&hinged, kind)
}

/// Contrastive loss values and the gradient with respect to the logits.
///
/// Returns `(inter, intra, grad)`, where `intra` is 0 when the reduction
/// excludes it and `grad` is already scaled by `weight`. The hinge
/// subgradient at exactly zero is taken as zero.
pub fn contrastive_loss_and_grad(
    logits: &Mat,
    thresholds: &BatchThresholds,
    similarity: SimilarityMode,
    reduction: Reduction,
    weight: f64,
) -> Result<(f64, f64, Mat)> {
    let b = logits.rows();
    let c = logits.cols();
    let p = pairwise_similarity(logits, similarity)?;
    let kind = reduction.kind();

    let mut inter_hinged = Mat::zeros(b, b);
    for (h, (&pv, &tv)) in inter_hinged
        .as_mut_slice()
        .iter_mut()
        .zip(p.as_slice().iter().zip(thresholds.inter.as_slice()))
    {
        *h = (pv - tv).max(0.0);
    }
    let inter = reduce(&inter_hinged, kind);
    let inter_w = reduction_weight(&inter_hinged, kind);

    let include_intra = reduction.includes_intra();
    let (intra, intra_w, intra_hinged) = if include_intra {
        let mut hinged = Mat::zeros(b, b);
        for (h, (&pv, &tv)) in hinged
            .as_mut_slice()
            .iter_mut()
            .zip(p.as_slice().iter().zip(thresholds.intra.as_slice()))
        {
            *h = (tv - pv).max(0.0);
        }
        let value = reduce(&hinged, kind);
        let w = reduction_weight(&hinged, kind);
        (value, w, Some(hinged))
    } else {
        (0.0, 0.0, None)
    };

    // dL/dP for the weighted sum of both hinges.
    let mut dp = Mat::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            let mut g = 0.0;
            if inter_hinged[(i, j)] > 0.0 {
                g += inter_w;
            }
            if let Some(h) = &intra_hinged {
                if h[(i, j)] > 0.0 {
                    g -= intra_w;
                }
            }
            dp[(i, j)] = weight * g;
        }
    }

    // Backpropagate through the pairwise similarity. Diagonal entries are
    // constant 1 and carry no gradient.
    let mut grad = Mat::zeros(b, c);
    match similarity {
        SimilarityMode::CosineOnLogits => {
            let norms: Vec<f64> = (0..b).map(|i| norm(logits.row(i))).collect();
            for i in 0..b {
                for j in 0..b {
                    if i == j || dp[(i, j)] == 0.0 {
                        continue;
                    }
                    let g = dp[(i, j)];
                    let pij = p[(i, j)];
                    let zi = logits.row(i);
                    let zj = logits.row(j);
                    for k in 0..c {
                        let ui = zi[k] / norms[i];
                        let uj = zj[k] / norms[j];
                        grad[(i, k)] += g * (uj - pij * ui) / norms[i];
                        grad[(j, k)] += g * (ui - pij * uj) / norms[j];
                    }
                }
            }
        }
        SimilarityMode::EuclideanExpOnLogits => {
            for i in 0..b {
                for j in 0..b {
                    if i == j || dp[(i, j)] == 0.0 {
                        continue;
                    }
                    let d = euclidean_distance(logits.row(i), logits.row(j));
                    if d == 0.0 {
                        continue;
                    }
                    let g = dp[(i, j)] * p[(i, j)] / d;
                    for k in 0..c {
                        let diff = logits.row(i)[k] - logits.row(j)[k];
                        grad[(i, k)] -= g * diff;
                        grad[(j, k)] += g * diff;
                    }
                }
            }
        }
    }

    Ok((inter, intra, grad))
}

/// Loss terms of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub ce: f64,
    pub inter: f64,
    pub intra: f64,
    pub total: f64,
}

/// Combined objective: soft cross entropy plus the weighted contrastive
/// terms, with the exact gradient with respect to the logits.
pub fn combined_loss(
    batch: &BatchPredictions,
    labels: &SoftLabelMatrix,
    proto: &SimilarityPrototype,
    config: &BclConfig,
) -> Result<(LossTerms, Mat)> {
    if proto.class_count() != batch.class_count() {
        return Err(Error::DimensionMismatch {
            context: "prototype order vs logit width".into(),
            expected: batch.class_count(),
            got: proto.class_count(),
        });
    }
    let (ce, mut grad) = soft_cross_entropy(batch.logits(), batch.targets(), labels)?;
    let thresholds = prototype_thresholds(proto, batch.targets(), config.indexing);
    let (inter, intra, contrastive_grad) = contrastive_loss_and_grad(
        batch.logits(),
        &thresholds,
        config.similarity,
        config.reduction,
        config.weight,
    )?;
    for (g, cg) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(contrastive_grad.as_slice())
    {
        *g += cg;
    }
    let total = ce + config.weight * (inter + intra);
    Ok((
        LossTerms {
            ce,
            inter,
            intra,
            total,
        },
        grad,
    ))
}
