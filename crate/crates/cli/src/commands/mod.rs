pub mod knn;
pub mod lda;
pub mod metrics;
pub mod plan;
pub mod probe;
pub mod scatter;
pub mod synth;
pub mod viz;

use std::path::Path;

use anyhow::{Context, Result};

use vidprobe_core::{load_embedding_set, EmbeddingSet};

pub fn load_set(role: &str, path: &Path) -> Result<EmbeddingSet> {
    load_embedding_set(path).with_context(|| format!("loading {role} set from {}", path.display()))
}

/// Display name of class `c`, falling back to its index.
pub fn class_name(set: &EmbeddingSet, c: Option<usize>) -> String {
    match c {
        Some(c) => set.class_names.get(c).cloned().unwrap_or_else(|| c.to_string()),
        None => String::new(),
    }
}
