//! Desk-scale classifier: a small rectifier MLP, Adam updates, and the
//! deterministic training loop that applies label strategies and the
//! contrastive term per epoch.

mod adam;
mod mlp;
mod trainer;

pub use adam::{Adam, AdamConfig};
pub use mlp::{Gradients, Layer, MlpClassifier};
pub use trainer::{
    epoch_label_matrix, evaluate, export_embeddings, gradient_check, loss_and_grad, relative_error,
    train, ContrastiveMode, EpochRecord, Evaluation, GradCheckEntry, GradCheckReport, TrainConfig,
    TrainReport,
};
