//! Inter-class similarity prototypes for scene recognition, with the two
//! training strategies they drive.
//!
//! The pipeline: per-image segmentation label maps reduce to binary object
//! presence vectors ([`stats`]); averaging them per class gives semantic
//! representations whose pairwise correlations form a similarity
//! prototype ([`prototype`]). The prototype then guides training two ways:
//!
//! * [`softening`] turns it into row-stochastic soft labels with a unified
//!   target confidence that rises linearly per epoch until labels become
//!   hard;
//! * [`contrastive`] derives per-pair similarity thresholds for a
//!   batch-level hinge loss on prediction similarities.
//!
//! [`model`] provides a deterministic desk-scale MLP trainer wiring both
//! strategies into Adam updates, [`datagen`] generates synthetic datasets
//! with closed-form statistics oracles, and [`io`] holds the on-disk
//! formats (PGM label maps, manifests, CSVs, prototype archives,
//! checkpoints).

pub mod contrastive;
pub mod datagen;
pub mod error;
pub mod io;
pub mod matrix;
pub mod model;
pub mod prototype;
pub mod seeding;
pub mod softening;
pub mod stats;

pub use contrastive::{
    combined_loss, BatchPredictions, BatchThresholds, BclConfig, IndexingMode, LossTerms,
    Reduction, ReductionKind, SimilarityMode,
};
pub use error::{Error, Result};
pub use io::features::FeatureSet;
pub use matrix::Mat;
pub use model::{ContrastiveMode, MlpClassifier, TrainConfig, TrainReport};
pub use prototype::{build_prototype, CorrelationMetric, SimilarityPrototype};
pub use softening::{LabelStrategy, SoftLabelMatrix, CONFIDENCE_CAP};
pub use stats::{DatasetSemanticSummary, LabelMap};
