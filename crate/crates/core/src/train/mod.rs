//! Dataset streaming, the multi-task loss, training and evaluation.

pub mod eval;
pub mod latent;
pub mod loss;
pub mod sampling;
pub mod trainer;

pub use eval::{evaluate, predict_graphs, Binning, Bucket, EvalConfig, EvalReport, Metrics, Record};
pub use latent::{centroid, export_latent, spearman, LatentExport};
pub use loss::{loss, LossValue, TaskMode};
pub use sampling::{sample_batch, Label, Sample, SamplingConfig, Workers};
pub use trainer::{train, LogRow, TrainConfig, TrainOutcome};
