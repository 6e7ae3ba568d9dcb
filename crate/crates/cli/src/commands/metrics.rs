use anyhow::{Context, Result};
use serde_json::json;

use crate::args::{GlobalOpts, MetricsCommand};
use crate::report::{pct, InputInfo, Report};
use crate::usage;
use vidprobe_core::metrics::{detection_map_sweep, tas_scores, TasOptions};
use vidprobe_core::store::{load_frame_labels, load_segment_annotations};

pub fn run(g: &GlobalOpts, cmd: &MetricsCommand) -> Result<()> {
    match cmd {
        MetricsCommand::Tal { pred, gt, tiou, classes } => {
            if tiou.is_empty() || tiou.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
                return Err(usage("--tiou values must lie in (0, 1]"));
            }
            let p = load_segment_annotations(pred, *classes).context("loading predictions")?;
            let t = load_segment_annotations(gt, *classes).context("loading ground truth")?;
            let mut report = Report::new("metrics tal", json!({ "tiou": tiou, "classes": classes }));
            report.input(InputInfo::file("pred", pred)?);
            report.input(InputInfo::file("gt", gt)?);
            let sweep = detection_map_sweep(&p, &t, tiou)?;
            let mut header = vec!["".to_string()];
            let mut row = vec!["mAP".to_string()];
            for r in &sweep.rows {
                header.push(format!("{}", r.tiou));
                row.push(pct(100.0 * r.map));
            }
            header.push("Avg.".into());
            row.push(pct(100.0 * sweep.average));
            report.table("detection mAP (%) by tIoU", &[header, row]);
            report.results(serde_json::to_value(&sweep)?);
            let path = report.write(&g.out)?;
            println!("avg mAP {:.2} -> {}", 100.0 * sweep.average, path.display());
        }
        MetricsCommand::Tas { pred, gt, background, classes } => {
            let p = load_frame_labels(pred, *classes).context("loading predictions")?;
            let t = load_frame_labels(gt, *classes).context("loading ground truth")?;
            let by_id: std::collections::HashMap<&str, _> =
                p.iter().map(|s| (s.video_id.as_str(), s)).collect();
            let pairs = t
                .iter()
                .map(|gt| {
                    by_id
                        .get(gt.video_id.as_str())
                        .map(|p| (*p, gt))
                        .with_context(|| format!("no prediction for video '{}'", gt.video_id))
                })
                .collect::<Result<Vec<_>>>()?;
            let opts = TasOptions { background: *background };
            let mut report = Report::new("metrics tas", json!({ "tas": opts, "classes": classes }));
            report.input(InputInfo::file("pred", pred)?);
            report.input(InputInfo::file("gt", gt)?);
            let s = tas_scores(&pairs, &opts)?;
            let mut header = vec!["".to_string()];
            let mut row = vec!["score".to_string()];
            for (k, v) in &s.f1_at {
                header.push(format!("F1@{k}"));
                row.push(pct(*v));
            }
            header.extend(["mF1".into(), "Edit".into(), "Acc".into()]);
            row.extend([pct(s.mf1), pct(s.edit), pct(s.acc)]);
            report.table("temporal segmentation", &[header, row]);
            report.results(serde_json::to_value(&s)?);
            let path = report.write(&g.out)?;
            println!("mF1 {:.2} edit {:.2} acc {:.2} -> {}", s.mf1, s.edit, s.acc, path.display());
        }
    }
    Ok(())
}
