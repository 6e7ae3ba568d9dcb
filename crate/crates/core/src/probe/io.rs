//! Head files: a JSON header with shapes and the producing config, followed by the
//! parameters as base64-encoded little-endian `f32`.

use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{AttentiveHead, LinearHead, ProbeError, ProbeHead};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadFile {
    pub kind: String,
    pub dim: usize,
    pub classes: usize,
    pub heads: usize,
    pub config_hash: String,
    pub seed: u64,
    pub class_names: Vec<String>,
    pub num_params: usize,
    pub params_f32_b64: String,
}

fn file_err(path: &Path, msg: impl Into<String>) -> ProbeError {
    ProbeError::HeadFile {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

pub fn save_head(
    head: &ProbeHead,
    path: impl AsRef<Path>,
    config_hash: &str,
    seed: u64,
    class_names: &[String],
) -> Result<(), ProbeError> {
    let path = path.as_ref();
    let (kind, dim, classes, heads, flat) = match head {
        ProbeHead::Linear(h) => ("linear", h.dim, h.classes, 1, h.flatten()),
        ProbeHead::Attentive(h) => ("attentive", h.dim, h.classes, h.heads, h.flatten()),
    };
    let bytes: Vec<u8> = flat.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    let file = HeadFile {
        kind: kind.into(),
        dim,
        classes,
        heads,
        config_hash: config_hash.into(),
        seed,
        class_names: class_names.to_vec(),
        num_params: flat.len(),
        params_f32_b64: base64::engine::general_purpose::STANDARD.encode(bytes),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| file_err(path, e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| file_err(path, e.to_string()))
}

/// Loads a head; parameters come back as the `f32` values that were stored.
pub fn load_head(path: impl AsRef<Path>) -> Result<(ProbeHead, HeadFile), ProbeError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e.to_string()))?;
    let file: HeadFile = serde_json::from_str(&text).map_err(|e| file_err(path, e.to_string()))?;
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(&file.params_f32_b64)
        .map_err(|e| file_err(path, e.to_string()))?;
    if bytes.len() != file.num_params * 4 {
        return Err(file_err(path, "parameter payload length mismatch"));
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    let head = match file.kind.as_str() {
        "linear" => {
            let mut h = LinearHead::zeros(file.dim, file.classes);
            if h.num_params() != flat.len() {
                return Err(file_err(path, "shape does not match parameter count"));
            }
            h.assign_flat(&flat);
            ProbeHead::Linear(h)
        }
        "attentive" => {
            let mut h = AttentiveHead::zeros(file.dim, file.classes, file.heads)?;
            if h.num_params() != flat.len() {
                return Err(file_err(path, "shape does not match parameter count"));
            }
            h.assign_flat(&flat);
            ProbeHead::Attentive(h)
        }
        other => return Err(file_err(path, format!("unknown head kind '{other}'"))),
    };
    Ok((head, file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;

    #[test]
    fn round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = Rng::new(3, 0);
        let h = AttentiveHead::init_normal(4, 3, 2, 0.1, &mut rng).unwrap();
        let head = ProbeHead::Attentive(h.clone());
        let p = dir.path().join("head.json");
        save_head(&head, &p, "abc", 7, &["a".into(), "b".into(), "c".into()]).unwrap();
        let (loaded, meta) = load_head(&p).unwrap();
        assert_eq!((meta.seed, meta.config_hash.as_str()), (7, "abc"));
        let ProbeHead::Attentive(l) = &loaded else {
            panic!("kind changed")
        };
        for (a, b) in h.flatten().iter().zip(l.flatten()) {
            assert_eq!(f64::from(*a as f32), b);
        }
        // a second round trip is the identity
        save_head(&loaded, &p, "abc", 7, &[]).unwrap();
        assert_eq!(load_head(&p).unwrap().0, loaded);
    }

    #[test]
    fn corrupt_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("head.json");
        save_head(&ProbeHead::Linear(LinearHead::zeros(2, 2)), &p, "", 0, &[]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap().replace("\"num_params\": 6", "\"num_params\": 5");
        std::fs::write(&p, text).unwrap();
        assert!(load_head(&p).is_err());
    }
}
