//! Grouped Dynamical Graph Echo State Network (GDGESN) for dissemination
//! process classification on discrete-time temporal graphs.
//!
//! Pipeline: snapshot merging (sliding-window logical OR) builds
//! multi-timescale views of each temporal graph; a fixed grid of random
//! reservoir encoders turns them into vertex embeddings; sum-pooled
//! final-time states feed a closed-form ridge readout. An SI epidemic
//! generator provides labeled synthetic datasets, and the evaluation
//! harness runs the shuffled 10-fold cross-validation protocol.

pub mod cli;
pub mod error;
pub mod evaluation_harness;
pub mod readout_classifier;
pub mod reservoir_encoder;
pub mod rng;
pub mod si_generator;
pub mod snapshot_merging;
pub mod temporal_graph;

pub use error::{Error, Result};
