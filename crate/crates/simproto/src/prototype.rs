//! Inter-class similarity prototypes.
//!
//! Given class-level semantic representations, the prototype is the
//! symmetric `C x C` matrix of pairwise label correlations with unit
//! diagonal. Two correlation measures are supported: cosine similarity of
//! the representations, and an exponentially transformed Euclidean distance
//! `exp(-||a - b||)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, euclidean_distance, norm, Mat};
use crate::stats::DatasetSemanticSummary;

/// Correlation measure used to compare two class representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationMetric {
    #[serde(rename = "cosine")]
    CosineSimilarity,
    #[serde(rename = "euclidean")]
    EuclideanExp,
}

impl CorrelationMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorrelationMetric::CosineSimilarity => "cosine",
            CorrelationMetric::EuclideanExp => "euclidean",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(CorrelationMetric::CosineSimilarity),
            "euclidean" => Ok(CorrelationMetric::EuclideanExp),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown metric {other:?}; expected cosine or euclidean"),
            }),
        }
    }
}

impl std::fmt::Display for CorrelationMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "correlation inputs".into(),
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Cosine similarity `a.b / (|a||b|)` of two nonnegative vectors.
///
/// The result is clamped to at most 1 so that rounding never pushes a
/// self-similar pair above the unit diagonal.
pub fn cosine_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateRepresentation {
            class: "(unnamed)".into(),
        });
    }
    Ok((dot(a, b) / (na * nb)).min(1.0))
}

/// Exponentially transformed Euclidean distance `exp(-||a - b||)`.
///
/// Always in `(0, 1]`, with 1 exactly when the vectors coincide.
pub fn euclidean_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    Ok((-euclidean_distance(a, b)).exp())
}

/// Dispatch on the configured metric.
pub fn correlation(metric: CorrelationMetric, a: &[f64], b: &[f64]) -> Result<f64> {
    match metric {
        CorrelationMetric::CosineSimilarity => cosine_correlation(a, b),
        CorrelationMetric::EuclideanExp => euclidean_correlation(a, b),
    }
}

/// Symmetric `C x C` inter-class correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPrototype {
    class_names: Vec<String>,
    metric: CorrelationMetric,
    matrix: Mat,
}

impl SimilarityPrototype {
    /// Wrap an existing matrix, enforcing the structural invariants:
    /// square shape, exact unit diagonal, entries in `[0, 1]`, and symmetry
    /// within 1e-12.
    pub fn new(class_names: Vec<String>, metric: CorrelationMetric, matrix: Mat) -> Result<Self> {
        let c = class_names.len();
        if matrix.rows() != c || matrix.cols() != c {
            return Err(Error::DimensionMismatch {
                context: "prototype matrix".into(),
                expected: c,
                got: matrix.rows(),
            });
        }
        for i in 0..c {
            if matrix[(i, i)] != 1.0 {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "prototype diagonal must be exactly 1; entry ({i}, {i}) is {}",
                        matrix[(i, i)]
                    ),
                });
            }
            for j in 0..c {
                let v = matrix[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidConfig {
                        reason: format!("prototype entry ({i}, {j}) = {v} outside [0, 1]"),
                    });
                }
                let delta = (matrix[(i, j)] - matrix[(j, i)]).abs();
                if delta > 1e-12 {
                    return Err(Error::AsymmetricMatrix { i, j, delta });
                }
            }
        }
        Ok(SimilarityPrototype {
            class_names,
            metric,
            matrix,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn metric(&self) -> CorrelationMetric {
        self.metric
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }
}

/// Build the similarity prototype from a dataset summary.
///
/// Each unordered pair is computed once and mirrored, making symmetry
/// exact; diagonal entries are the constant 1 rather than a computed
/// self-correlation.
pub fn build_prototype(
    summary: &DatasetSemanticSummary,
    metric: CorrelationMetric,
) -> Result<SimilarityPrototype> {
    let c = summary.class_count();
    if c < 2 {
        return Err(Error::InvalidConfig {
            reason: format!("a prototype needs at least 2 classes, got {c}"),
        });
    }
    for rep in &summary.representations {
        if norm(&rep.values) == 0.0 {
            return Err(Error::DegenerateRepresentation {
                class: rep.class_name.clone(),
            });
        }
    }
    let mut matrix = Mat::identity(c);
    for i in 0..c {
        for j in (i + 1)..c {
            let v = correlation(
                metric,
                &summary.representations[i].values,
                &summary.representations[j].values,
            )?;
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    SimilarityPrototype::new(summary.class_names(), metric, matrix)
}
