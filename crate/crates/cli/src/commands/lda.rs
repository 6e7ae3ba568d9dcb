use anyhow::Result;
use serde_json::json;

use crate::args::{GlobalOpts, LdaArgs};
use crate::report::{pct, write_points, InputInfo, Report};
use vidprobe_core::analyze::{reversal_separability, ReversalConfig};

pub fn run(g: &GlobalOpts, a: &LdaArgs) -> Result<()> {
    let cfg = ReversalConfig {
        ridge: a.ridge,
        folds: a.folds,
        seed: g.seed,
    };
    let forward = super::load_set("forward", &a.forward)?;
    let reversed = super::load_set("reversed", &a.reversed)?;
    let mut report = Report::new("lda-reversal", json!({ "lda": cfg }));
    report.input(InputInfo::set("forward", &a.forward, &forward));
    report.input(InputInfo::set("reversed", &a.reversed, &reversed));
    let r = reversal_separability(&forward, &reversed, &cfg)?;

    let mut points = Vec::with_capacity(2 * r.projections.len());
    for p in &r.projections {
        points.push((p.id.clone(), p.forward, 0.0, "forward".to_string()));
    }
    for p in &r.projections {
        points.push((p.id.clone(), p.reversed, 0.0, "reversed".to_string()));
    }
    write_points(&g.out.join("projections.csv"), &points)?;

    report.results(json!({
        "accuracy": r.accuracy,
        "folds": r.folds,
        "fold_accuracy": r.fold_accuracy,
        "degenerate_folds": r.degenerate_folds,
        "ridge": r.model.as_ref().map(|m| m.ridge),
        "threshold": r.model.as_ref().map(|m| m.threshold),
        "pairs": r.projections.len(),
    }));
    let mut rows = vec![vec!["fold".to_string(), "accuracy".into()]];
    for (i, acc) in r.fold_accuracy.iter().enumerate() {
        rows.push(vec![i.to_string(), pct(*acc)]);
    }
    rows.push(vec!["all".into(), pct(r.accuracy)]);
    report.table("forward vs reversed LDA (cross-validated)", &rows);
    if r.degenerate_folds > 0 {
        report.line(&format!(
            "{} fold(s) had identical class means and predict a single class",
            r.degenerate_folds
        ));
    }
    let path = report.write(&g.out)?;
    println!("accuracy {:.2} -> {}", r.accuracy, path.display());
    Ok(())
}
