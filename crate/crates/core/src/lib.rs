//! Simulation-based inference of anomalous diffusion with graph neural networks.
//!
//! A trajectory is turned into a sparse directed graph whose nodes carry
//! engineered features (time, normalised positions, cumulative step
//! statistics). A message-passing encoder maps the graph to a fixed-size
//! latent vector, from which two heads estimate the anomalous exponent α and
//! the generating model class (ATTM, CTRW, FBM, LW, SBM).
//!
//! The crate is organised bottom-up:
//!
//! - [`sim`]: random-walk simulators, localisation noise, ensemble MSD.
//! - [`features`]: step clipping and per-node feature matrices.
//! - [`graph`]: causal geometric and random-regular wiring.
//! - [`nn`]: dense layers, batch norm, MLPs, Adam, gradient checking and
//!   checkpoints.
//! - [`gnn`]: graph convolutions, the encoder and the two task heads.
//! - [`train`]: streamed datasets, the multi-task loss, the training loop and
//!   the evaluation harness.
//! - [`io`] and [`config`]: file formats and run configuration.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod features;
pub mod gnn;
pub mod graph;
pub mod io;
pub mod nn;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
