//! Named hyperparameter bundles, one per benchmark column of the probing
//! and temporal-task tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::PostProcess;
use crate::probe::{Optimizer, TrainConfig};

/// Column-oriented transcription of the source tables.
pub const VENDORED_TABLES: &str = include_str!("../data/hyperparameter_tables.json");

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown preset '{name}'; available: {}", available.join(", "))]
pub struct UnknownPreset {
    pub name: String,
    pub available: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Lp,
    Ap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePreset {
    pub name: String,
    pub benchmark: String,
    pub protocol: Protocol,
    pub train_num_clips: usize,
    /// `(m spatial, n temporal)`; `None` for image benchmarks.
    pub views: Option<(usize, usize)>,
    pub num_frames: Option<usize>,
    pub temporal_stride: Option<usize>,
    pub horizontal_flip: bool,
    pub random_resize: (f64, f64),
    pub aspect_ratio: (f64, f64),
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub scheduler: String,
    pub lr: f64,
    pub final_lr: f64,
    pub weight_decay: f64,
}

impl ProbePreset {
    /// Training bundle: SGD with momentum 0.9 for LP, AdamW for AP.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let base = match self.protocol {
            Protocol::Lp => TrainConfig::linear_default(),
            Protocol::Ap => TrainConfig::attentive_default(),
        };
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            warmup_epochs: self.warmup_epochs,
            lr: self.lr,
            final_lr: self.final_lr,
            weight_decay: self.weight_decay,
            seed,
            ..base
        }
    }

    pub fn optimizer(&self) -> Optimizer {
        self.train_config(0).optimizer
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalTask {
    Tal,
    Tas,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalPreset {
    pub name: String,
    pub benchmark: String,
    pub task: TemporalTask,
    pub fps: f64,
    pub embedding_type: String,
    pub clip_sec: f64,
    pub stride_sec: f64,
    pub postprocess: Option<PostProcess>,
    /// `None` means variable-length sequences.
    pub max_len: Option<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_epochs: Option<usize>,
    pub lr: f64,
    pub lr_decay: String,
    pub weight_decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Preset {
    Probe(ProbePreset),
    Temporal(TemporalPreset),
}

impl Preset {
    pub fn name(&self) -> &str {
        match self {
            Self::Probe(p) => &p.name,
            Self::Temporal(p) => &p.name,
        }
    }
}

// benchmark, views, stride, flip, (lp batch, epochs, warmup, lr, wd), (ap ...)
type ProbeRow = (
    &'static str,
    Option<(usize, usize)>,
    Option<usize>,
    bool,
    (usize, usize, usize, f64, f64),
    (usize, usize, usize, f64, f64),
);

const PROBE_ROWS: [ProbeRow; 6] = [
    ("k400", Some((3, 4)), Some(4), true, (1024, 150, 10, 0.1, 0.0), (256, 20, 0, 0.001, 1e-5)),
    ("mit", Some((3, 4)), Some(1), false, (1024, 50, 10, 0.1, 0.0), (256, 20, 0, 0.001, 1e-5)),
    ("ssv2", Some((3, 1)), Some(1), false, (1024, 50, 10, 0.075, 0.0), (256, 20, 0, 0.001, 1e-5)),
    ("dv48", Some((3, 4)), Some(4), false, (1024, 300, 10, 0.02, 0.0), (256, 50, 0, 0.001, 1e-5)),
    ("ek", Some((3, 4)), Some(1), true, (1024, 150, 10, 0.1, 0.0), (256, 50, 0, 0.001, 1e-5)),
    ("in1k", None, None, true, (4096, 90, 0, 0.1, 0.0), (512, 20, 0, 0.001, 0.001)),
];

fn probe_preset(row: &ProbeRow, protocol: Protocol) -> ProbePreset {
    let (bench, views, stride, flip, lp, ap) = *row;
    let (batch, epochs, warmup, lr, wd) = match protocol {
        Protocol::Lp => lp,
        Protocol::Ap => ap,
    };
    let suffix = match protocol {
        Protocol::Lp => "lp",
        Protocol::Ap => "ap",
    };
    ProbePreset {
        name: format!("{bench}-{suffix}"),
        benchmark: bench.into(),
        protocol,
        train_num_clips: 1,
        views,
        num_frames: views.map(|_| 16),
        temporal_stride: stride,
        horizontal_flip: flip,
        random_resize: (0.3, 1.0),
        aspect_ratio: match protocol {
            Protocol::Lp => (0.75, 1.33),
            Protocol::Ap => (0.5, 2.0),
        },
        batch_size: batch,
        epochs,
        warmup_epochs: warmup,
        scheduler: "cosine decay".into(),
        lr,
        final_lr: 0.0,
        weight_decay: wd,
    }
}

fn temporal_presets() -> Vec<TemporalPreset> {
    let tal = |bench: &str, clip, stride, post, max_len, batch, epochs, lr| TemporalPreset {
        name: format!("{bench}-tal"),
        benchmark: bench.into(),
        task: TemporalTask::Tal,
        fps: 30.0,
        embedding_type: "clip".into(),
        clip_sec: clip,
        stride_sec: stride,
        postprocess: Some(post),
        max_len: Some(max_len),
        batch_size: batch,
        epochs,
        warmup_epochs: Some(2),
        lr,
        lr_decay: "cosine annealing".into(),
        weight_decay: 0.05,
    };
    let tas = |bench: &str, fps, clip, stride, lr| TemporalPreset {
        name: format!("{bench}-tas"),
        benchmark: bench.into(),
        task: TemporalTask::Tas,
        fps,
        embedding_type: "clip".into(),
        clip_sec: clip,
        stride_sec: stride,
        postprocess: None,
        max_len: None,
        batch_size: 1,
        epochs: 120,
        warmup_epochs: None,
        lr,
        lr_decay: "reduce on plateau".into(),
        weight_decay: 1e-4,
    };
    vec![
        tal("thumos14", 0.5, 0.125, PostProcess::Crop, 2304, 2, 45, 0.001),
        tal("activitynet", 0.5, 0.25, PostProcess::Resize, 192, 16, 10, 1e-4),
        tas("50salads", 30.0, 1.0, 0.25, 5e-4),
        tas("gtea", 15.0, 0.5, 0.125, 5e-4),
        tas("breakfast", 15.0, 0.5, 0.125, 1e-4),
    ]
}

pub fn all_presets() -> Vec<Preset> {
    let mut out = Vec::new();
    for row in &PROBE_ROWS {
        out.push(Preset::Probe(probe_preset(row, Protocol::Lp)));
        out.push(Preset::Probe(probe_preset(row, Protocol::Ap)));
    }
    out.extend(temporal_presets().into_iter().map(Preset::Temporal));
    out
}

pub fn preset_names() -> Vec<String> {
    all_presets().iter().map(|p| p.name().to_string()).collect()
}

pub fn load_preset(name: &str) -> Result<Preset, UnknownPreset> {
    all_presets()
        .into_iter()
        .find(|p| p.name() == name)
        .ok_or_else(|| UnknownPreset {
            name: name.into(),
            available: preset_names(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn tables() -> Value {
        serde_json::from_str(VENDORED_TABLES).unwrap()
    }

    fn f(v: &Value) -> f64 {
        v.as_f64().unwrap()
    }

    fn u(v: &Value) -> usize {
        v.as_u64().unwrap() as usize
    }

    fn pair(v: &Value) -> (f64, f64) {
        (f(&v[0]), f(&v[1]))
    }

    #[test]
    fn probe_presets_equal_vendored_tables() {
        let t = tables();
        let probe = &t["probe"];
        let cols = probe["columns"].as_array().unwrap();
        assert_eq!(cols.len(), 6);
        for (j, col) in cols.iter().enumerate() {
            let bench = col.as_str().unwrap();
            for (proto, key) in [(Protocol::Lp, "lp"), (Protocol::Ap, "ap")] {
                let Preset::Probe(p) = load_preset(&format!("{bench}-{key}")).unwrap() else {
                    panic!("wrong family")
                };
                let per = &probe["per_benchmark"];
                let sec = &probe[key];
                assert_eq!(p.protocol, proto);
                assert_eq!(p.train_num_clips, u(&probe["shared"]["train_num_clips"]));
                assert_eq!(p.random_resize, pair(&probe["shared"]["random_resize"]));
                assert_eq!(p.scheduler, probe["shared"]["scheduler"].as_str().unwrap());
                assert_eq!(p.final_lr, f(&probe["shared"]["final_lr"]));
                let views = &per["views"][j];
                assert_eq!(
                    p.views,
                    (!views.is_null()).then(|| (u(&views[0]), u(&views[1])))
                );
                assert_eq!(p.num_frames, per["num_frames"][j].as_u64().map(|v| v as usize));
                assert_eq!(p.temporal_stride, per["temporal_stride"][j].as_u64().map(|v| v as usize));
                assert_eq!(p.horizontal_flip, per["horizontal_flip"][j].as_bool().unwrap());
                assert_eq!(p.aspect_ratio, pair(&sec["aspect_ratio"]));
                assert_eq!(p.batch_size, u(&sec["batch_size"][j]));
                assert_eq!(p.epochs, u(&sec["epochs"][j]));
                assert_eq!(p.warmup_epochs, u(&sec["warmup"][j]));
                assert_eq!(p.lr, f(&sec["lr"][j]));
                assert_eq!(p.weight_decay, f(&sec["weight_decay"][j]));
            }
        }
    }

    #[test]
    fn temporal_presets_equal_vendored_tables() {
        let t = &tables()["temporal"];
        for (j, col) in t["columns"].as_array().unwrap().iter().enumerate() {
            let task = t["task"][j].as_str().unwrap();
            let name = format!("{}-{task}", col.as_str().unwrap());
            let Preset::Temporal(p) = load_preset(&name).unwrap() else {
                panic!("wrong family")
            };
            assert_eq!(serde_json::to_value(p.task).unwrap(), t["task"][j]);
            assert_eq!(p.fps, f(&t["fps"][j]));
            assert_eq!(p.embedding_type, t["embedding_type"].as_str().unwrap());
            assert_eq!(p.clip_sec, f(&t["clip_sec"][j]));
            assert_eq!(p.stride_sec, f(&t["stride_sec"][j]));
            assert_eq!(serde_json::to_value(p.postprocess).unwrap(), t["postprocess"][j]);
            assert_eq!(p.max_len, t["max_len"][j].as_u64().map(|v| v as usize));
            assert_eq!(p.batch_size, u(&t["batch_size"][j]));
            assert_eq!(p.epochs, u(&t["epochs"][j]));
            assert_eq!(p.warmup_epochs, t["warmup_epochs"][j].as_u64().map(|v| v as usize));
            assert_eq!(p.lr, f(&t["lr"][j]));
            assert_eq!(p.lr_decay, t["lr_decay"][j].as_str().unwrap());
            assert_eq!(p.weight_decay, f(&t["weight_decay"][j]));
        }
    }

    #[test]
    fn every_table_column_has_a_preset() {
        assert_eq!(all_presets().len(), 6 * 2 + 5);
        let names = preset_names();
        let unique: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
    }

    #[test]
    fn documented_examples() {
        let Preset::Probe(p) = load_preset("k400-lp").unwrap() else { panic!() };
        assert_eq!((p.epochs, p.lr, p.batch_size, p.warmup_epochs, p.weight_decay), (150, 0.1, 1024, 10, 0.0));
        let Preset::Probe(p) = load_preset("k400-ap").unwrap() else { panic!() };
        assert_eq!((p.epochs, p.lr, p.batch_size, p.warmup_epochs, p.weight_decay), (20, 0.001, 256, 0, 1e-5));
        let Preset::Probe(p) = load_preset("dv48-lp").unwrap() else { panic!() };
        assert_eq!((p.epochs, p.lr, p.batch_size, p.warmup_epochs), (300, 0.02, 1024, 10));
        let Preset::Probe(p) = load_preset("ssv2-lp").unwrap() else { panic!() };
        assert_eq!((p.epochs, p.lr, p.views), (50, 0.075, Some((3, 1))));
        let Preset::Temporal(p) = load_preset("thumos14-tal").unwrap() else { panic!() };
        assert_eq!((p.fps, p.clip_sec, p.stride_sec, p.postprocess, p.max_len), (30.0, 0.5, 0.125, Some(PostProcess::Crop), Some(2304)));
        let Preset::Temporal(p) = load_preset("gtea-tas").unwrap() else { panic!() };
        assert_eq!((p.fps, p.clip_sec, p.stride_sec), (15.0, 0.5, 0.125));
    }

    #[test]
    fn unknown_lists_available() {
        let e = load_preset("k600-lp").unwrap_err();
        assert!(e.to_string().contains("k400-lp") && e.to_string().contains("gtea-tas"));
    }

    #[test]
    fn train_config_uses_protocol_optimizer() {
        let Preset::Probe(p) = load_preset("ek-ap").unwrap() else { panic!() };
        let c = p.train_config(3);
        assert!(matches!(c.optimizer, Optimizer::AdamW { .. }));
        assert_eq!((c.epochs, c.seed), (50, 3));
        c.validate().unwrap();
    }
}
