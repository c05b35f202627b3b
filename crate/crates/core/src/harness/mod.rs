//! Desk-scale distillation: a two-layer MLP trained with manual
//! backpropagation, a Gaussian-cluster dataset with optional label noise, and
//! trainers for the teacher and for students under each objective.

mod dataset;
mod mlp;
mod train;

pub use dataset::{DatasetSpec, SyntheticDataset};
pub use mlp::{argmax, Activations, Mlp, MlpGrads};
pub use train::{
    batch_gradient, distill, evaluate_accuracy, learning_rate_at, train_teacher, Augmentation,
    BatchEvaluation, DistillMode, DistillSettings, EpochMetrics, GammaSource, StepSample,
    TrainConfig, TrainedModel,
};
