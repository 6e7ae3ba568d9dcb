use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vidprobe"))
        .arg("--out")
        .arg(out)
        .args(["--workers", "1"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap()
}

fn synth_small(dir: &Path) -> (String, String) {
    let g = dir.join("g");
    let o = run(&g, &["synth", "gaussians", "--classes", "4", "--dim", "8", "--per-class", "40", "--eval-per-class", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (g.join("train").display().to_string(), g.join("eval").display().to_string())
}

#[test]
fn synth_then_knn_is_near_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    assert!(run(&g, &["synth", "gaussians"]).status.success());
    let truth: Value = serde_json::from_slice(&std::fs::read(g.join("truth.json")).unwrap()).unwrap();
    assert!(truth["bayes_accuracy"].as_f64().unwrap() > 0.999);
    let k = dir.path().join("k");
    let (train, eval) = (g.join("train").display().to_string(), g.join("eval").display().to_string());
    let o = run(&k, &["knn", "--train", &train, "--eval", &eval]);
    assert!(o.status.success());
    let r = report(&k);
    assert_eq!(r["command"], "knn");
    assert!(r["results"]["top1"].as_f64().unwrap() >= 99.0);
    assert_eq!(r["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn preset_values_are_echoed_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let (train, eval) = synth_small(dir.path());
    let out = dir.path().join("p");
    let o = run(&out, &["probe", "linear", "--train", &train, "--eval", &eval, "--preset", "ssv2-lp", "--epochs", "2", "--warmup-epochs", "0", "--batch-size", "64"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let cfg = &r["config"];
    assert_eq!(cfg["preset"]["lr"], 0.075);
    assert_eq!(cfg["preset"]["epochs"], 50);
    assert_eq!(cfg["preset"]["views"], serde_json::json!([3, 1]));
    assert_eq!(cfg["train"]["lr"], 0.075);
    assert_eq!(cfg["train"]["epochs"], 2);
    assert_eq!(r["results"]["benchmark"], "ssv2");
    assert!(out.join("head.json").exists() && out.join("predictions.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    // usage
    assert_eq!(run(&out, &["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&out, &["knn", "--train", "a"]).status.code(), Some(2));
    let (train, eval) = synth_small(dir.path());
    let o = run(&out, &["probe", "linear", "--train", &train, "--eval", &eval, "--preset", "gtea-tas"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&out, &["probe", "linear", "--train", &train, "--eval", &eval, "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k400-lp"));
    // validation
    let missing = dir.path().join("missing").display().to_string();
    assert_eq!(run(&out, &["knn", "--train", &missing, "--eval", &eval]).status.code(), Some(3));
    // numeric: decay plus heavy momentum at a huge step size blows up the weights
    let o = run(&out, &["probe", "linear", "--train", &train, "--eval", &eval, "--lr", "1e6", "--momentum", "0.99", "--weight-decay", "10", "--epochs", "50", "--warmup-epochs", "0"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn report_text_and_timing_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (train, eval) = synth_small(dir.path());
    let out = dir.path().join("k");
    assert!(run(&out, &["knn", "--train", &train, "--eval", &eval, "--mode", "all", "--k", "5"]).status.success());
    let text = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.contains("uniform") && text.contains("clip") && text.contains("video"));
    let timing: Value = serde_json::from_slice(&std::fs::read(out.join("timing.json")).unwrap()).unwrap();
    assert!(timing["elapsed_sec"].as_f64().unwrap() >= 0.0);
    assert!(!std::fs::read_to_string(out.join("report.json")).unwrap().contains("elapsed"));
}

#[test]
fn scatter_pairs_appearance_with_motion() {
    let dir = tempfile::tempdir().unwrap();
    let (train, eval) = synth_small(dir.path());
    let mut reports = Vec::new();
    for bench in ["k400", "ssv2", "mit"] {
        let out = dir.path().join(bench);
        let o = run(&out, &["probe", "linear", "--train", &train, "--eval", &eval, "--benchmark", bench, "--model", "m1", "--epochs", "2"]);
        assert!(o.status.success());
        reports.push(out.join("report.json").display().to_string());
    }
    let out = dir.path().join("s");
    let mut args = vec!["report", "scatter", "--reports"];
    args.extend(reports.iter().map(String::as_str));
    assert!(run(&out, &args).status.success());
    let csv = std::fs::read_to_string(out.join("scatter.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    // dv48 is missing, so only the k400:ssv2 pair yields a point
    assert_eq!(lines.len(), 2, "{csv}");
    assert_eq!(lines[0], "id,x,y,label");
    assert!(lines[1].starts_with("m1,") && lines[1].ends_with(",k400-vs-ssv2/linear"));
}

#[test]
fn plan_views_from_preset() {
    let dir = tempfile::tempdir().unwrap();
    let videos = dir.path().join("videos.json");
    std::fs::write(&videos, r#"[{"id":"a","duration_sec":10,"fps":30,"short_side":240,"long_side":320}]"#).unwrap();
    let out = dir.path().join("plan");
    let o = run(&out, &["plan", "--videos", videos.to_str().unwrap(), "--mode", "views", "--preset", "k400-lp"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plan: Value = serde_json::from_slice(&std::fs::read(out.join("plan.json")).unwrap()).unwrap();
    let views = plan[0]["views"].as_array().unwrap();
    assert_eq!(views.len(), 12);
    assert_eq!(plan[0]["clips"].as_array().unwrap().len(), 4);
    let frames = views[0]["temporal_clip"]["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 16);
    assert_eq!(frames[1].as_u64().unwrap() - frames[0].as_u64().unwrap(), 4);
    let o = run(&out, &["plan", "--videos", videos.to_str().unwrap(), "--mode", "views"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn metrics_tal_reports_average_column() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.json");
    std::fs::write(&gt, r#"{"videos":[{"id":"a","duration_sec":30,"segments":[{"start":0,"end":10,"label":0}]}]}"#).unwrap();
    let pred = dir.path().join("pred.json");
    std::fs::write(
        &pred,
        r#"{"videos":[{"id":"a","duration_sec":30,"segments":[{"start":0,"end":10,"label":0,"score":0.9},{"start":20,"end":30,"label":0,"score":0.8}]}]}"#,
    )
    .unwrap();
    let out = dir.path().join("m");
    let o = run(&out, &["metrics", "tal", "--pred", pred.to_str().unwrap(), "--gt", gt.to_str().unwrap(), "--tiou", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["results"]["average"], 1.0);
    assert!(std::fs::read_to_string(out.join("report.txt")).unwrap().contains("Avg."));
    let o = run(&out, &["metrics", "tal", "--pred", pred.to_str().unwrap(), "--gt", gt.to_str().unwrap(), "--tiou", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}
