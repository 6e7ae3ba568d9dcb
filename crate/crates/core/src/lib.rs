//! Evaluation engine for frozen video-model embeddings.
//!
//! Works entirely from serialized embedding sets: sampling plans for the
//! exporter, linear and attentive probes, KNN evaluation, temporal
//! localization and segmentation metrics, and embedding-space analyses.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod numkit;
pub mod store;
pub mod plan;
pub mod metrics;
pub mod synth;
pub mod probe;
pub mod knn;
pub mod analyze;
pub mod presets;

pub use numkit::{Matrix, Rng};
pub use store::{load_embedding_set, write_embedding_set, EmbeddingRecord, EmbeddingSet, Level};

use sha2::{Digest, Sha256};

/// sha256 (hex) of the canonical JSON form of `value`. Object keys are
/// sorted, so equal configs hash equally regardless of field order.
pub fn config_hash<T: serde::Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("config serializes to JSON");
    sha256_hex(v.to_string().as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
