//! Similarity-guided label softening.
//!
//! A similarity prototype turns into per-class soft labels in two steps:
//! every diagonal entry is rewritten so that all classes share one target
//! confidence, then rows are normalized into distributions. The target
//! confidence follows a linear per-epoch schedule from the prototype's own
//! maximum confidence up to a cap, after which labels become hard.
//!
//! Off-diagonal mass stays proportional to the prototype row, so more
//! similar classes always receive more label mass than less similar ones.

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Confidence ceiling: once the scheduled confidence exceeds this value the
/// labels switch to hard one-hot rows.
pub const CONFIDENCE_CAP: f64 = 0.99;

/// Row-stochastic `C x C` matrix; row `c` is the soft label distribution
/// used for samples of class `c`.
///
/// Rows always sum to 1 (within 1e-9) and are nonnegative. For schedules
/// with target confidence above 0.5 the diagonal is also each row's strict
/// maximum; below that a single dominant neighbor can tie or exceed it, so
/// dominance is not enforced structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelMatrix {
    rows: Mat,
}

impl SoftLabelMatrix {
    pub fn new(rows: Mat) -> Result<Self> {
        if rows.rows() != rows.cols() {
            return Err(Error::DimensionMismatch {
                context: "soft label matrix".into(),
                expected: rows.rows(),
                got: rows.cols(),
            });
        }
        for (r, row) in rows.iter_rows().enumerate() {
            let mut sum = 0.0;
            for &v in row {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!("soft label row {r}"),
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig {
                    reason: format!("soft label row {r} sums to {sum}, not 1"),
                });
            }
        }
        Ok(SoftLabelMatrix { rows })
    }

    /// Hard labels: the identity matrix.
    pub fn identity(c: usize) -> Self {
        SoftLabelMatrix {
            rows: Mat::identity(c),
        }
    }

    pub fn class_count(&self) -> usize {
        self.rows.rows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.rows
    }

    pub fn row(&self, c: usize) -> &[f64] {
        self.rows.row(c)
    }

    /// True when every row is a one-hot diagonal row.
    pub fn is_hard(&self) -> bool {
        let c = self.class_count();
        (0..c).all(|i| (0..c).all(|j| self.rows[(i, j)] == if i == j { 1.0 } else { 0.0 }))
    }

    /// Target-category confidence of row `c`.
    pub fn confidence(&self, c: usize) -> f64 {
        self.rows[(c, c)]
    }
}

fn check_square(s: &Mat, context: &str) -> Result<usize> {
    if s.rows() != s.cols() {
        return Err(Error::DimensionMismatch {
            context: context.into(),
            expected: s.rows(),
            got: s.cols(),
        });
    }
    Ok(s.rows())
}

fn check_symmetric(s: &Mat) -> Result<()> {
    for i in 0..s.rows() {
        for j in (i + 1)..s.cols() {
            let delta = (s[(i, j)] - s[(j, i)]).abs();
            if delta > 1e-12 {
                return Err(Error::AsymmetricMatrix { i, j, delta });
            }
        }
    }
    Ok(())
}

/// Divide each row of a nonnegative square matrix by its own sum.
pub fn row_normalize(s: &Mat) -> Result<SoftLabelMatrix> {
    let c = check_square(s, "row normalization input")?;
    let mut out = Mat::zeros(c, c);
    for r in 0..c {
        let row = s.row(r);
        let mut sum = 0.0;
        for &v in row {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("row {r} of normalization input"),
                });
            }
            sum += v;
        }
        if sum <= 0.0 {
            return Err(Error::DegenerateRow { row: r });
        }
        for (o, &v) in out.row_mut(r).iter_mut().zip(row) {
            *o = v / sum;
        }
    }
    SoftLabelMatrix::new(out)
}

/// Target-category confidence of class `c` after row normalization:
/// `S[c][c] / sum_i S[i][c]`.
///
/// Implemented through the row sum; the prototype is symmetric, so row and
/// column sums coincide (asymmetric inputs are rejected at load).
pub fn target_confidence(s: &Mat, c: usize) -> Result<f64> {
    let n = check_square(s, "target confidence input")?;
    if c >= n {
        return Err(Error::DimensionMismatch {
            context: "class index".into(),
            expected: n,
            got: c,
        });
    }
    let sum: f64 = s.row(c).iter().sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateRow { row: c });
    }
    Ok(s[(c, c)] / sum)
}

/// Rewrite every diagonal so all rows share the target confidence
/// `sigma_prime`, then row-normalize.
///
/// Each diagonal becomes `sigma'/(1 - sigma') * sum_{i != c} S[i][c]`; after
/// normalization every row's diagonal equals `sigma'` and its off-diagonal
/// mass `1 - sigma'` is split proportionally to the prototype row.
pub fn unify_confidence(s: &Mat, sigma_prime: f64) -> Result<SoftLabelMatrix> {
    let c = check_square(s, "confidence unification input")?;
    if !(sigma_prime > 0.0 && sigma_prime < 1.0) {
        return Err(Error::InvalidConfidence { value: sigma_prime });
    }
    check_symmetric(s)?;
    let mut rewritten = s.clone();
    let factor = sigma_prime / (1.0 - sigma_prime);
    for r in 0..c {
        let off_sum: f64 = s
            .row(r)
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != r)
            .map(|(_, &v)| v)
            .sum();
        if off_sum <= 0.0 {
            return Err(Error::DegenerateRow { row: r });
        }
        rewritten[(r, r)] = factor * off_sum;
    }
    row_normalize(&rewritten)
}

/// The prototype's own maximum target-category confidence: the largest
/// diagonal of the row-normalized matrix.
pub fn sigma0_of(s: &Mat) -> Result<f64> {
    let normalized = row_normalize(s)?;
    let c = normalized.class_count();
    Ok((0..c)
        .map(|i| normalized.confidence(i))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Linear confidence schedule from `sigma0` at epoch 1 toward `cap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SofteningSchedule {
    pub sigma0: f64,
    pub step: usize,
    pub cap: f64,
}

impl SofteningSchedule {
    pub fn new(sigma0: f64, step: usize, cap: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0 < 1.0) || sigma0 >= cap {
            return Err(Error::InvalidConfidence { value: sigma0 });
        }
        if step == 0 {
            return Err(Error::InvalidConfig {
                reason: "schedule STEP must be at least 1".into(),
            });
        }
        if !(cap > 0.0 && cap < 1.0) {
            return Err(Error::InvalidConfidence { value: cap });
        }
        Ok(SofteningSchedule { sigma0, step, cap })
    }

    /// Scheduled confidence `sigma0 + (cap - sigma0) * (epoch - 1) / STEP`.
    ///
    /// Evaluated in interpolation form so epoch 1 yields `sigma0` exactly
    /// and epoch `STEP + 1` yields `cap` exactly.
    pub fn confidence_at(&self, epoch: usize) -> Result<f64> {
        if epoch < 1 {
            return Err(Error::InvalidEpoch {
                epoch: epoch as i64,
            });
        }
        let ratio = (epoch - 1) as f64 / self.step as f64;
        Ok(self.sigma0 * (1.0 - ratio) + self.cap * ratio)
    }

    /// True when the scheduled confidence has passed the cap and labels are
    /// hard.
    pub fn is_hard_at(&self, epoch: usize) -> Result<bool> {
        Ok(self.confidence_at(epoch)? > self.cap)
    }
}

/// Soft labels for a given epoch of the schedule: unified-confidence labels
/// while the scheduled confidence is at most the cap, the identity matrix
/// afterwards.
pub fn epoch_labels_with_cap(
    s: &Mat,
    epoch: usize,
    step: usize,
    cap: f64,
) -> Result<SoftLabelMatrix> {
    let sigma0 = sigma0_of(s)?;
    let schedule = SofteningSchedule::new(sigma0, step, cap)?;
    let sigma = schedule.confidence_at(epoch)?;
    if sigma > cap {
        Ok(SoftLabelMatrix::identity(s.rows()))
    } else {
        unify_confidence(s, sigma)
    }
}

/// [`epoch_labels_with_cap`] at the default cap of 0.99.
pub fn epoch_labels(s: &Mat, epoch: usize, step: usize) -> Result<SoftLabelMatrix> {
    epoch_labels_with_cap(s, epoch, step, CONFIDENCE_CAP)
}

/// Uniform label smoothing: `1 - eps + eps/C` on the diagonal, `eps/C`
/// elsewhere.
pub fn lsr_labels(c: usize, epsilon: f64) -> Result<SoftLabelMatrix> {
    if c < 2 {
        return Err(Error::InvalidConfig {
            reason: format!("label smoothing needs at least 2 classes, got {c}"),
        });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfidence { value: epsilon });
    }
    let off = epsilon / c as f64;
    let diag = 1.0 - epsilon + off;
    let mut rows = Mat::zeros(c, c);
    for i in 0..c {
        for j in 0..c {
            rows[(i, j)] = if i == j { diag } else { off };
        }
    }
    SoftLabelMatrix::new(rows)
}

/// Label policy for one training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelStrategy {
    /// One-hot labels every epoch.
    Hard,
    /// Uniform smoothing with the given weight, constant across epochs.
    Lsr { epsilon: f64 },
    /// Prototype-derived soft labels on the linear confidence schedule.
    Gls { step: usize },
}

/// Cross-entropy of soft labels against logits, with its gradient.
///
/// `loss = -(1/B) sum_i sum_j labels[target_i][j] * log softmax(logits_i)[j]`
/// and the per-sample logit gradient is `(softmax(logits_i) - labels_row)/B`.
/// Softmax uses log-sum-exp stabilization; logits are unbounded.
pub fn soft_cross_entropy(
    logits: &Mat,
    targets: &[usize],
    labels: &SoftLabelMatrix,
) -> Result<(f64, Mat)> {
    let b = logits.rows();
    let c = logits.cols();
    if targets.len() != b {
        return Err(Error::DimensionMismatch {
            context: "target count".into(),
            expected: b,
            got: targets.len(),
        });
    }
    if labels.class_count() != c {
        return Err(Error::DimensionMismatch {
            context: "label matrix order".into(),
            expected: c,
            got: labels.class_count(),
        });
    }
    if !logits.is_finite() {
        return Err(Error::NonFinite {
            context: "logits".into(),
        });
    }
    if b == 0 {
        return Err(Error::EmptyData {
            what: "logit batch".into(),
        });
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
        return Err(Error::InvalidConfig {
            reason: format!("target class {} outside [1, {c}]", bad + 1),
        });
    }

    let inv_b = 1.0 / b as f64;
    let mut grad = Mat::zeros(b, c);
    let mut loss = 0.0;
    for (i, &target) in targets.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for &v in row {
            z += (v - max).exp();
        }
        let log_z = z.ln();
        let q = labels.row(target);
        let g = grad.row_mut(i);
        for j in 0..c {
            let log_p = row[j] - max - log_z;
            loss -= q[j] * log_p;
            g[j] = inv_b * ((row[j] - max).exp() / z - q[j]);
        }
    }
    Ok((loss * inv_b, grad))
}
