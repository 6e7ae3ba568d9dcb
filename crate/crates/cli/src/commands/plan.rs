use anyhow::{Context, Result};
use serde::Deserialize;
use serde_json::json;

use crate::args::{GlobalOpts, PlanArgs, PlanMode};
use crate::report::{write_text, InputInfo, Report};
use crate::usage;
use vidprobe_core::plan::{
    frame_count, plan_multiclip, plan_uniform, plan_views, ClipPlan, TemporalSampling, VideoPlan,
};
use vidprobe_core::presets::{load_preset, Preset};

#[derive(Debug, Deserialize)]
struct VideoEntry {
    id: String,
    duration_sec: f64,
    fps: f64,
    short_side: Option<usize>,
    long_side: Option<usize>,
}

fn parse_views(s: &str) -> Result<(usize, usize)> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("--views expects MxN, got '{s}'")))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| usage(format!("bad --views '{s}'")));
    Ok((parse(m)?, parse(n)?))
}

pub fn run(g: &GlobalOpts, a: &PlanArgs) -> Result<()> {
    let preset = a
        .preset
        .as_deref()
        .map(load_preset)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    let text = std::fs::read_to_string(&a.videos)
        .with_context(|| format!("reading {}", a.videos.display()))?;
    let videos: Vec<VideoEntry> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.videos.display()))?;

    let mut fps_override = a.fps;
    let mut settings = json!({ "mode": format!("{:?}", a.mode).to_lowercase(), "frames": a.frames });
    let plans: Vec<VideoPlan> = match a.mode {
        PlanMode::Uniform => videos
            .iter()
            .map(|v| {
                let fps = fps_override.unwrap_or(v.fps);
                Ok(VideoPlan {
                    video_id: v.id.clone(),
                    clips: vec![ClipPlan {
                        clip_index: 0,
                        start_sec: 0.0,
                        frame_indices: plan_uniform(frame_count(v.duration_sec, fps), a.frames)?,
                    }],
                    views: Vec::new(),
                })
            })
            .collect::<Result<_>>()?,
        PlanMode::Multiclip => {
            let (mut clip, mut stride) = (None, None);
            match &preset {
                Some(Preset::Temporal(p)) => {
                    clip = Some(p.clip_sec);
                    stride = Some(p.stride_sec);
                    fps_override = fps_override.or(Some(p.fps));
                }
                Some(Preset::Probe(p)) => {
                    return Err(usage(format!("preset '{}' has no clip schedule", p.name)))
                }
                None => {}
            }
            let clip = a.clip_sec.or(clip).ok_or_else(|| usage("multiclip needs --clip-sec or a TAL/TAS preset"))?;
            let stride = a.stride_sec.or(stride).ok_or_else(|| usage("multiclip needs --stride-sec or a TAL/TAS preset"))?;
            settings["clip_sec"] = json!(clip);
            settings["stride_sec"] = json!(stride);
            videos
                .iter()
                .map(|v| {
                    let fps = fps_override.unwrap_or(v.fps);
                    Ok(VideoPlan {
                        video_id: v.id.clone(),
                        clips: plan_multiclip(v.duration_sec, fps, clip, stride, a.frames)?,
                        views: Vec::new(),
                    })
                })
                .collect::<Result<_>>()?
        }
        PlanMode::Views => {
            let (mut views, mut stride, mut frames) = (None, None, a.frames);
            match &preset {
                Some(Preset::Probe(p)) => {
                    views = p.views;
                    stride = p.temporal_stride;
                    frames = p.num_frames.unwrap_or(frames);
                }
                Some(Preset::Temporal(p)) => {
                    return Err(usage(format!("preset '{}' has no view schedule", p.name)))
                }
                None => {}
            }
            let (m, n) = match &a.views {
                Some(s) => parse_views(s)?,
                None => views.ok_or_else(|| usage("views mode needs --views or a video probe preset"))?,
            };
            let stride = a
                .temporal_stride
                .or(stride)
                .ok_or_else(|| usage("views mode needs --temporal-stride or a video probe preset"))?;
            settings["views"] = json!([m, n]);
            settings["temporal_stride"] = json!(stride);
            settings["frames"] = json!(frames);
            videos
                .iter()
                .map(|v| {
                    let fps = fps_override.unwrap_or(v.fps);
                    let short = v.short_side.unwrap_or(a.short_side);
                    let long = v.long_side.unwrap_or(a.long_side);
                    let views = plan_views(
                        v.duration_sec,
                        fps,
                        short,
                        long,
                        m,
                        n,
                        TemporalSampling::Strided { n_frames: frames, stride },
                    )?;
                    let clips = views.iter().filter(|w| w.view_id.0 == 0).map(|w| w.temporal_clip.clone()).collect();
                    Ok(VideoPlan { video_id: v.id.clone(), clips, views })
                })
                .collect::<Result<_>>()?
        }
    };
    settings["fps"] = json!(fps_override);
    settings["preset"] = json!(a.preset);

    let mut report = Report::new("plan", json!({ "plan": settings }));
    report.input(InputInfo::file("videos", &a.videos)?);
    std::fs::create_dir_all(&g.out)?;
    write_text(&g.out.join("plan.json"), &(serde_json::to_string_pretty(&plans)? + "\n"))?;
    let clips: usize = plans.iter().map(|p| p.clips.len()).sum();
    let views: usize = plans.iter().map(|p| p.views.len()).sum();
    report.results(json!({ "videos": plans.len(), "clips": clips, "views": views }));
    report.table(
        "sampling plan",
        &[
            vec!["videos".into(), "clips".into(), "views".into()],
            vec![plans.len().to_string(), clips.to_string(), views.to_string()],
        ],
    );
    let path = report.write(&g.out)?;
    println!("{} videos, {clips} clips -> {}", plans.len(), path.display());
    Ok(())
}
