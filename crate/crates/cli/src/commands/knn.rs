use anyhow::Result;
use serde_json::json;

use crate::args::{GlobalOpts, KnnArgs, MetricArg, ModeArg};
use crate::report::{pct, InputInfo, Report};
use crate::usage;
use vidprobe_core::knn::{knn_evaluate, KnnConfig, KnnMetric, KnnMode, KNN_MODES};

fn mode_name(m: KnnMode) -> &'static str {
    match m {
        KnnMode::Uniform => "uniform",
        KnnMode::Clip => "clip",
        KnnMode::Video => "video",
    }
}

pub fn run(g: &GlobalOpts, a: &KnnArgs) -> Result<()> {
    let metric = match a.metric {
        MetricArg::Cosine => KnnMetric::Cosine,
        MetricArg::L2 => KnnMetric::L2,
    };
    let modes: Vec<KnnMode> = match a.mode {
        ModeArg::Uniform => vec![KnnMode::Uniform],
        ModeArg::Clip => vec![KnnMode::Clip],
        ModeArg::Video => vec![KnnMode::Video],
        ModeArg::All => KNN_MODES.to_vec(),
    };
    let base = KnnConfig {
        k: a.k,
        metric,
        mode: modes[0],
        clip_length_sec: a.clip_length_sec,
    };
    base.validate().map_err(|e| usage(e.to_string()))?;
    let train = super::load_set("train", &a.train)?;
    let eval = super::load_set("eval", &a.eval)?;
    let benchmark = a.benchmark.clone().unwrap_or_else(|| eval.dataset_name.clone());
    let config = json!({
        "knn": {
            "k": a.k,
            "metric": metric,
            "modes": modes,
            "clip_length_sec": a.clip_length_sec,
        },
        "benchmark": benchmark,
        "model": a.model,
    });
    let mut report = Report::new("knn", config);
    report.input(InputInfo::set("train", &a.train, &train));
    report.input(InputInfo::set("eval", &a.eval, &eval));

    let mut per_mode = serde_json::Map::new();
    let mut rows = vec![vec!["mode".to_string(), "top1".into(), "k".into(), "n".into()]];
    let mut top1 = None;
    for mode in modes {
        let r = knn_evaluate(&train, &eval, &KnnConfig { mode, ..base.clone() })?;
        rows.push(vec![mode_name(mode).into(), pct(r.top1), r.k_used.to_string(), r.n.to_string()]);
        if mode == KnnMode::Video || top1.is_none() {
            top1 = Some(r.top1);
        }
        per_mode.insert(
            mode_name(mode).into(),
            json!({ "top1": r.top1, "k_used": r.k_used, "n": r.n }),
        );
    }
    report.results(json!({
        "benchmark": benchmark,
        "model": a.model,
        "protocol": "knn",
        "top1": top1,
        "modes": per_mode,
    }));
    report.table(&format!("KNN on {benchmark}"), &rows);
    let path = report.write(&g.out)?;
    println!("top1 {:.2} -> {}", top1.unwrap_or(0.0), path.display());
    Ok(())
}
