//! Graph neural network: message-passing convolutions, node pooling, a
//! projector to a fixed-size latent vector and two heads (α regression and
//! five-way model classification).

pub mod aggregate;
pub mod config;
pub mod conv;
pub mod model;

pub use config::{Aggregator, ConvConfig, GnnConfig, PoolOp, Source, PRESETS};
pub use conv::{ConvCache, ConvLayer};
pub use model::{sidecar_path, BatchOutput, Gnn, GnnCache, GraphBatch, Prediction, TrajGraph};
