//! Drilling accident forecasting from mud-log telemetry.
//!
//! Sliding windows of each channel are split into short τ-segments, described
//! by wavelet coefficients and quantized with a per-channel k-means codebook.
//! Codeword histograms over a longer t-segment form the feature vector fed to
//! one-vs-rest gradient-boosted tree ensembles, one per accident type.

pub mod artifact;
pub mod codebook;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod dwt;
pub mod error;
pub mod eval;
pub mod features;
pub mod kmeans;
pub mod model;
pub mod rng;
pub mod synth;
pub mod telemetry;

pub use error::{Error, Result};
