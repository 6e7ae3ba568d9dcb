use anyhow::Result;
use serde_json::json;

use crate::args::{GlobalOpts, SynthCommand};
use crate::report::{write_text, Report};
use vidprobe_core::synth::{
    gen_class_gaussians, gen_motion_pairs, gen_token_signal_set, SynthSpec, TokenSignalSpec, Truth,
};
use vidprobe_core::{write_embedding_set, EmbeddingSet};

fn emit(
    g: &GlobalOpts,
    kind: &str,
    config: serde_json::Value,
    sets: &[(&str, &EmbeddingSet)],
    truth: &Truth,
    extra: serde_json::Value,
) -> Result<()> {
    let mut report = Report::new(&format!("synth {kind}"), config);
    let mut rows = vec![vec!["set".to_string(), "records".into(), "dim".into(), "checksum".into()]];
    let mut written = serde_json::Map::new();
    for (name, set) in sets {
        let dir = g.out.join(name);
        write_embedding_set(set, &dir)?;
        rows.push(vec![name.to_string(), set.len().to_string(), set.dim.to_string(), set.checksum()]);
        written.insert(
            name.to_string(),
            json!({ "path": dir.display().to_string(), "records": set.len(), "checksum": set.checksum() }),
        );
    }
    write_text(&g.out.join("truth.json"), &(serde_json::to_string_pretty(truth)? + "\n"))?;
    report.results(json!({ "sets": written, "truth": truth, "extra": extra }));
    report.table(&format!("synthetic {kind}"), &rows);
    report.line(&format!("Bayes accuracy {:.6}", truth.bayes_accuracy));
    let path = report.write(&g.out)?;
    println!("bayes {:.6} -> {}", truth.bayes_accuracy, path.display());
    Ok(())
}

pub fn run(g: &GlobalOpts, cmd: &SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::Gaussians { classes, dim, per_class, eval_per_class, sep, clips, tokens } => {
            let spec = SynthSpec {
                n_classes: *classes,
                dim: *dim,
                per_class: *per_class,
                eval_per_class: *eval_per_class,
                separation: *sep,
                clips_per_video: *clips,
                tokens: *tokens,
                seed: g.seed,
            };
            let out = gen_class_gaussians(&spec)?;
            emit(g, "gaussians", json!({ "synth": spec }), &[("train", &out.train), ("eval", &out.eval)], &out.truth, json!(null))
        }
        SynthCommand::MotionPairs { n, dim, strength } => {
            let out = gen_motion_pairs(*n, *dim, *strength, g.seed)?;
            let cfg = json!({ "synth": { "n": n, "dim": dim, "strength": strength, "seed": g.seed } });
            emit(g, "motion-pairs", cfg, &[("forward", &out.forward), ("reversed", &out.reversed)], &out.truth, json!(null))
        }
        SynthCommand::TokenSignal { per_class, eval_per_class, classes, tokens, dim } => {
            let spec = TokenSignalSpec {
                n_per_class: *per_class,
                eval_per_class: *eval_per_class,
                n_classes: *classes,
                tokens: *tokens,
                dim: *dim,
                seed: g.seed,
            };
            let out = gen_token_signal_set(&spec)?;
            emit(
                g,
                "token-signal",
                json!({ "synth": spec }),
                &[("train", &out.train), ("eval", &out.eval)],
                &out.truth,
                json!({ "pooled_bayes_accuracy": out.pooled_bayes_accuracy }),
            )
        }
    }
}
