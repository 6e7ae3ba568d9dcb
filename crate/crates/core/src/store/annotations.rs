use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StoreError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Action instances of one video, either ground truth or predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSet {
    #[serde(rename = "id")]
    pub video_id: String,
    pub duration_sec: f64,
    pub segments: Vec<Segment>,
}

/// Per-frame class labels of one video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameLabelSeq {
    #[serde(rename = "id")]
    pub video_id: String,
    pub fps: f64,
    pub labels: Vec<usize>,
}

impl FrameLabelSeq {
    pub fn duration_sec(&self) -> f64 {
        self.labels.len() as f64 / self.fps
    }
}

#[derive(Serialize, Deserialize)]
struct Videos<T> {
    videos: Vec<T>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StoreError> {
    if !path.exists() {
        return Err(StoreError::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| StoreError::Malformed {
        file: path.display().to_string(),
        line: Some(e.line()),
        msg: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let body = serde_json::to_string_pretty(value).expect("annotations serialize");
    fs::write(path, body + "\n").map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl SegmentSet {
    pub fn validate(&self, num_classes: Option<usize>) -> Result<(), StoreError> {
        let err = |msg: String| StoreError::Annotation {
            video: self.video_id.clone(),
            msg,
        };
        if !(self.duration_sec >= 0.0) {
            return Err(err(format!("duration {} must be >= 0", self.duration_sec)));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.start >= 0.0 && s.start < s.end) {
                return Err(err(format!(
                    "segment {i}: start {} must satisfy 0 <= start < end {}",
                    s.start, s.end
                )));
            }
            if s.end > self.duration_sec {
                return Err(err(format!(
                    "segment {i}: end {} exceeds duration {}",
                    s.end, self.duration_sec
                )));
            }
            if let Some(c) = num_classes {
                if s.label >= c {
                    return Err(err(format!("segment {i}: label {} >= {c} classes", s.label)));
                }
            }
            if let Some(score) = s.score {
                if !(0.0..=1.0).contains(&score) {
                    return Err(err(format!("segment {i}: score {score} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

impl FrameLabelSeq {
    pub fn validate(&self, num_classes: Option<usize>) -> Result<(), StoreError> {
        let err = |msg: String| StoreError::Annotation {
            video: self.video_id.clone(),
            msg,
        };
        if !(self.fps > 0.0) {
            return Err(err(format!("fps {} must be > 0", self.fps)));
        }
        if self.labels.is_empty() {
            return Err(err("empty label sequence".into()));
        }
        if let Some(c) = num_classes {
            if let Some((i, l)) = self.labels.iter().enumerate().find(|(_, &l)| l >= c) {
                return Err(err(format!("frame {i}: label {l} >= {c} classes")));
            }
        }
        Ok(())
    }
}

/// Loads `{"videos":[{"id","duration_sec","segments":[...]}]}`.
pub fn load_segment_annotations(
    path: impl AsRef<Path>,
    num_classes: Option<usize>,
) -> Result<Vec<SegmentSet>, StoreError> {
    let doc: Videos<SegmentSet> = read_json(path.as_ref())?;
    for v in &doc.videos {
        v.validate(num_classes)?;
    }
    Ok(doc.videos)
}

pub fn write_segment_annotations(
    path: impl AsRef<Path>,
    sets: &[SegmentSet],
) -> Result<(), StoreError> {
    write_json(
        path.as_ref(),
        &Videos {
            videos: sets.to_vec(),
        },
    )
}

/// Loads `{"videos":[{"id","fps","labels":[...]}]}`.
pub fn load_frame_labels(
    path: impl AsRef<Path>,
    num_classes: Option<usize>,
) -> Result<Vec<FrameLabelSeq>, StoreError> {
    let doc: Videos<FrameLabelSeq> = read_json(path.as_ref())?;
    for v in &doc.videos {
        v.validate(num_classes)?;
    }
    Ok(doc.videos)
}

pub fn write_frame_labels(
    path: impl AsRef<Path>,
    seqs: &[FrameLabelSeq],
) -> Result<(), StoreError> {
    write_json(
        path.as_ref(),
        &Videos {
            videos: seqs.to_vec(),
        },
    )
}
