use anyhow::Result;
use serde_json::json;

use crate::args::{GlobalOpts, VizCommand};
use crate::report::{write_points, InputInfo, Report};
use crate::usage;
use vidprobe_core::analyze::{cluster_purity, pca_project, tsne, video_matrix, TsneConfig};
use vidprobe_core::EmbeddingSet;

fn purity(set: &EmbeddingSet, coords: &[Vec<f64>], k: usize) -> Result<Option<f64>> {
    match set.labels() {
        Some(labels) if coords.len() > k => Ok(Some(cluster_purity(coords, &labels, k)?)),
        _ => Ok(None),
    }
}

fn points(set: &EmbeddingSet, coords: &[Vec<f64>]) -> Vec<(String, f64, f64, String)> {
    set.records
        .iter()
        .zip(coords)
        .map(|(r, c)| (r.id.clone(), c[0], c[1], super::class_name(set, r.label)))
        .collect()
}

pub fn run(g: &GlobalOpts, cmd: &VizCommand) -> Result<()> {
    match cmd {
        VizCommand::Tsne {
            input,
            perplexity,
            iterations,
            learning_rate,
            early_exaggeration,
            exaggeration_steps,
            purity_k,
        } => {
            let cfg = TsneConfig {
                perplexity: *perplexity,
                iterations: *iterations,
                learning_rate: *learning_rate,
                early_exaggeration: *early_exaggeration,
                exaggeration_steps: *exaggeration_steps,
                seed: g.seed,
            };
            if cfg.iterations < cfg.exaggeration_steps {
                return Err(usage("--iterations must be >= --exaggeration-steps"));
            }
            let set = super::load_set("input", input)?;
            let mut report = Report::new("viz tsne", json!({ "tsne": cfg, "purity_k": purity_k }));
            report.input(InputInfo::set("input", input, &set));
            let r = tsne(&video_matrix(&set), &cfg)?;
            let coords: Vec<Vec<f64>> = r.coords.iter().map(|c| c.to_vec()).collect();
            let purity = purity(&set, &coords, *purity_k)?;
            write_points(&g.out.join("coords.csv"), &points(&set, &coords))?;
            report.results(json!({
                "n": coords.len(),
                "initial_kl": r.initial_kl(),
                "final_kl": r.final_kl(),
                "kl_trace": r.kl_trace,
                "purity": purity,
            }));
            report.table(
                "t-SNE",
                &[
                    vec!["n".into(), "initial KL".into(), "final KL".into(), "purity".into()],
                    vec![
                        coords.len().to_string(),
                        format!("{:.4}", r.initial_kl()),
                        format!("{:.4}", r.final_kl()),
                        purity.map_or("-".into(), |p| format!("{p:.4}")),
                    ],
                ],
            );
            let path = report.write(&g.out)?;
            println!("final KL {:.4} -> {}", r.final_kl(), path.display());
        }
        VizCommand::Pca { input, purity_k } => {
            let set = super::load_set("input", input)?;
            let mut report = Report::new("viz pca", json!({ "pca": { "k": 2 }, "purity_k": purity_k }));
            report.input(InputInfo::set("input", input, &set));
            let p = pca_project(&video_matrix(&set), 2)?;
            let purity = purity(&set, &p.coords, *purity_k)?;
            write_points(&g.out.join("coords.csv"), &points(&set, &p.coords))?;
            report.results(json!({ "n": p.coords.len(), "variance": p.variance, "purity": purity }));
            report.table(
                "PCA",
                &[
                    vec!["n".into(), "var 1".into(), "var 2".into(), "purity".into()],
                    vec![
                        p.coords.len().to_string(),
                        format!("{:.4}", p.variance[0]),
                        format!("{:.4}", p.variance[1]),
                        purity.map_or("-".into(), |v| format!("{v:.4}")),
                    ],
                ],
            );
            let path = report.write(&g.out)?;
            println!("pca -> {}", path.display());
        }
    }
    Ok(())
}
