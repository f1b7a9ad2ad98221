//! Inductive user embeddings learned from social-graph edges, plus the
//! network analyses used to study polarization, homophily and social
//! approval on interaction networks.
//!
//! The crate is organised by subsystem:
//!
//! - [`graph`]: typed, weighted, directed interaction multigraph.
//! - [`features`]: per-user and per-record feature tables and transforms.
//! - [`embedder`]: the Siamese edge-contrastive user representation model.
//! - [`heads`]: supervised heads, metrics and the repeated-split harness.
//! - [`labeling`]: hashtag/media pseudo-labels and label propagation.
//! - [`analytics`]: random-walk controversy, assortativity and group ratios.
//! - [`engagement`]: expected-engagement residuals and toxicity deltas.
//! - [`cluster`]: k-means with silhouette/elbow diagnostics.
//! - [`matrix_file`]: the little-endian `SLLM` embedding matrix format.

pub mod analytics;
pub mod cluster;
pub mod embedder;
pub mod engagement;
pub mod error;
pub mod features;
pub mod graph;
pub mod heads;
pub mod labeling;
pub mod matrix_file;
pub mod stats;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
