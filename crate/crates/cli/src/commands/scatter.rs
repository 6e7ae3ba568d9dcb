use std::collections::BTreeMap;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::args::{GlobalOpts, ReportCommand};
use crate::report::{pct, write_points, InputInfo, Report};
use crate::usage;

/// Benchmarks read as appearance-centric; the rest as motion-centric.
const APPEARANCE: [&str; 2] = ["k400", "mit"];

struct Entry {
    model: String,
    protocol: String,
    benchmark: String,
    top1: f64,
}

fn read_entry(path: &std::path::Path) -> Result<Entry> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let r = &v["results"];
    let field = |k: &str| {
        r[k].as_str()
            .map(str::to_string)
            .with_context(|| format!("{}: results.{k} missing; not a probe or knn report", path.display()))
    };
    Ok(Entry {
        model: field("model")?,
        protocol: field("protocol")?,
        benchmark: field("benchmark")?,
        top1: r["top1"]
            .as_f64()
            .with_context(|| format!("{}: results.top1 missing", path.display()))?,
    })
}

pub fn run(g: &GlobalOpts, cmd: &ReportCommand) -> Result<()> {
    let ReportCommand::Scatter { reports, pairs } = cmd;
    let pairs: Vec<(String, String)> = pairs
        .iter()
        .map(|p| {
            p.split_once(':')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| usage(format!("--pairs expects appearance:motion, got '{p}'")))
        })
        .collect::<Result<_>>()?;
    for (a, m) in &pairs {
        if !APPEARANCE.contains(&a.as_str()) || APPEARANCE.contains(&m.as_str()) {
            log::warn!("pair {a}:{m} does not put an appearance benchmark against a motion benchmark");
        }
    }
    let mut report = Report::new("report scatter", json!({ "pairs": pairs }));
    // (model, protocol) -> benchmark -> top1; later reports override earlier ones
    let mut table: BTreeMap<(String, String), BTreeMap<String, f64>> = BTreeMap::new();
    for path in reports {
        let e = read_entry(path)?;
        report.input(InputInfo::file("report", path)?);
        table.entry((e.model, e.protocol)).or_default().insert(e.benchmark, e.top1);
    }
    let mut points = Vec::new();
    let mut rows = vec![vec!["model".to_string(), "protocol".into(), "pair".into(), "appearance".into(), "motion".into()]];
    let mut results = Vec::new();
    for ((model, protocol), scores) in &table {
        for (a, m) in &pairs {
            if let (Some(x), Some(y)) = (scores.get(a), scores.get(m)) {
                let label = format!("{a}-vs-{m}/{protocol}");
                points.push((model.clone(), *x, *y, label.clone()));
                rows.push(vec![model.clone(), protocol.clone(), format!("{a}:{m}"), pct(*x), pct(*y)]);
                results.push(json!({
                    "model": model, "protocol": protocol, "appearance": a, "motion": m, "x": x, "y": y,
                }));
            }
        }
    }
    write_points(&g.out.join("scatter.csv"), &points)?;
    report.results(json!({ "points": results }));
    report.table("appearance vs motion top-1", &rows);
    let path = report.write(&g.out)?;
    println!("{} points -> {}", points.len(), path.display());
    Ok(())
}
