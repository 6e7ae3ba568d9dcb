//! The two formats shared with the external exporter: store directories it
//! writes and plan JSON it reads. Files here are produced the way a foreign
//! writer would, without going through this crate's serializers.

use std::fmt::Write as _;

use serde_json::{json, Value};

use vidprobe_core::plan::{plan_multiclip, VideoPlan};
use vidprobe_core::{load_embedding_set, sha256_hex, Level};

/// Writes a store directory by hand, one f32 block of `clips × dim` per video.
fn foreign_export(dir: &std::path::Path, videos: usize, clips: usize, dim: usize) -> Vec<u8> {
    std::fs::write(
        dir.join("meta.json"),
        json!({ "dataset": "exported", "dim": dim, "level": "clip", "dtype": "f32le", "classes": ["a", "b"] })
            .to_string(),
    )
    .unwrap();
    let mut index = String::new();
    let mut data = Vec::new();
    for v in 0..videos {
        let offset = v * clips * dim;
        writeln!(index, r#"{{"id":"video_{v:03}","label":{},"clips":{clips},"tokens":1,"offset":{offset}}}"#, v % 2).unwrap();
        for k in 0..clips * dim {
            data.extend_from_slice(&((v * 1000 + k) as f32 * 0.25).to_le_bytes());
        }
    }
    std::fs::write(dir.join("index.jsonl"), index).unwrap();
    std::fs::write(dir.join("data.bin"), &data).unwrap();
    data
}

#[test]
fn exported_directory_loads_with_matching_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = foreign_export(dir.path(), 10, 5, 3);
    let set = load_embedding_set(dir.path()).unwrap();
    assert_eq!(set.len(), 10);
    assert_eq!(set.level, Level::Clip);
    assert!(set.records.iter().all(|r| r.clips == 5));
    assert_eq!(set.checksum(), sha256_hex(&bytes));
    assert_eq!(set.block(7)[4], (7 * 1000 + 4) as f32 * 0.25);
    assert_eq!(set.labels().unwrap()[3], 1);
}

#[test]
fn truncated_export_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = foreign_export(dir.path(), 4, 2, 3);
    std::fs::write(dir.path().join("data.bin"), &bytes[..bytes.len() - 4]).unwrap();
    assert!(load_embedding_set(dir.path()).is_err());
}

/// What the exporter's reversed manifest does: flip every frame list.
fn reverse_frames(plan: &mut Value) {
    for video in plan.as_array_mut().unwrap() {
        for clip in video["clips"].as_array_mut().unwrap() {
            clip["frames"].as_array_mut().unwrap().reverse();
        }
    }
}

#[test]
fn reversed_plan_is_an_involution_and_still_parses() {
    let plans: Vec<VideoPlan> = (0..20)
        .map(|i| VideoPlan {
            video_id: format!("v{i}"),
            clips: plan_multiclip(2.0 + i as f64 * 0.7, 30.0, 0.5, 0.25, 4).unwrap(),
            views: Vec::new(),
        })
        .collect();
    let total: usize = plans.iter().map(|p| p.clips.len()).sum();
    assert!(total >= 100);
    let original = serde_json::to_value(&plans).unwrap();
    let mut flipped = original.clone();
    reverse_frames(&mut flipped);
    let parsed: Vec<VideoPlan> = serde_json::from_value(flipped.clone()).unwrap();
    for (a, b) in plans.iter().zip(&parsed) {
        assert_eq!(a.video_id, b.video_id);
        assert_eq!(a.clips.len(), b.clips.len());
        for (x, y) in a.clips.iter().zip(&b.clips) {
            let mut r = x.frame_indices.clone();
            r.reverse();
            assert_eq!(r, y.frame_indices);
        }
    }
    reverse_frames(&mut flipped);
    assert_eq!(flipped, original);
}

#[test]
fn plan_layout_is_stable() {
    let plan = VideoPlan {
        video_id: "a".into(),
        clips: plan_multiclip(1.0, 4.0, 0.5, 0.5, 2).unwrap(),
        views: Vec::new(),
    };
    let v = serde_json::to_value(&plan).unwrap();
    assert_eq!(v["video_id"], "a");
    assert_eq!(v["clips"][0]["clip_index"], 0);
    assert_eq!(v["clips"][1]["start_sec"], 0.5);
    assert!(v["clips"][1]["frames"].is_array());
    assert!(v["views"].as_array().unwrap().is_empty());
}
