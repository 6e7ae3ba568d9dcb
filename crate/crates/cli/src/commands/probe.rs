use anyhow::{bail, Result};
use serde_json::json;

use crate::args::{GlobalOpts, ProbeCommand, ProbeInputs};
use crate::report::{pct, InputInfo, Report};
use crate::usage;
use vidprobe_core::config_hash;
use vidprobe_core::presets::{load_preset, Preset, ProbePreset, Protocol};
use vidprobe_core::probe::{
    evaluate_probe, save_head, train_attentive_probe, train_linear_probe, Optimizer, ProbeHead,
    TrainConfig,
};

fn resolve_preset(name: Option<&str>, protocol: Protocol) -> Result<Option<ProbePreset>> {
    let Some(name) = name else { return Ok(None) };
    match load_preset(name).map_err(|e| usage(e.to_string()))? {
        Preset::Probe(p) if p.protocol == protocol => Ok(Some(p)),
        Preset::Probe(p) => Err(usage(format!(
            "preset '{name}' is for {:?} probing; use the matching probe command",
            p.protocol
        ))),
        Preset::Temporal(_) => Err(usage(format!("preset '{name}' is not a probe preset"))),
    }
}

fn apply_overrides(cfg: &mut TrainConfig, i: &ProbeInputs) {
    if let Some(v) = i.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = i.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = i.warmup_epochs {
        cfg.warmup_epochs = v;
    }
    if let Some(v) = i.lr {
        cfg.lr = v;
    }
    if let Some(v) = i.final_lr {
        cfg.final_lr = v;
    }
    if let Some(v) = i.weight_decay {
        cfg.weight_decay = v;
    }
}

pub fn run(g: &GlobalOpts, cmd: &ProbeCommand) -> Result<()> {
    let (kind, protocol, inputs) = match cmd {
        ProbeCommand::Linear { inputs, .. } => ("linear", Protocol::Lp, inputs),
        ProbeCommand::Attentive { inputs, .. } => ("attentive", Protocol::Ap, inputs),
    };
    let preset = resolve_preset(inputs.preset.as_deref(), protocol)?;
    // defaults < preset < flags
    let mut cfg = match (&preset, protocol) {
        (Some(p), _) => p.train_config(g.seed),
        (None, Protocol::Lp) => TrainConfig::linear_default(),
        (None, Protocol::Ap) => TrainConfig::attentive_default(),
    };
    cfg.seed = g.seed;
    apply_overrides(&mut cfg, inputs);
    match cmd {
        ProbeCommand::Linear { momentum: Some(m), .. } => {
            cfg.optimizer = Optimizer::Sgd { momentum: *m };
        }
        ProbeCommand::Attentive { heads, init_std, .. } => {
            if let Some(h) = heads {
                cfg.heads = *h;
            }
            if let Some(s) = init_std {
                cfg.init_std = *s;
            }
        }
        _ => {}
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let train = super::load_set("train", &inputs.train)?;
    let eval = super::load_set("eval", &inputs.eval)?;
    if train.class_names != eval.class_names {
        bail!("train and eval sets have different class names");
    }
    if train.dim != eval.dim {
        bail!("train dim {} differs from eval dim {}", train.dim, eval.dim);
    }
    let benchmark = inputs
        .benchmark
        .clone()
        .or_else(|| preset.as_ref().map(|p| p.benchmark.clone()))
        .unwrap_or_else(|| eval.dataset_name.clone());
    let config = json!({
        "probe": kind,
        "train": cfg,
        "preset": preset,
        "benchmark": benchmark,
        "model": inputs.model,
    });
    let mut report = Report::new(&format!("probe {kind}"), config.clone());
    report.input(InputInfo::set("train", &inputs.train, &train));
    report.input(InputInfo::set("eval", &inputs.eval, &eval));

    let (head, trace) = match protocol {
        Protocol::Lp => {
            let (h, t) = train_linear_probe(&train, &cfg)?;
            (ProbeHead::Linear(h), t)
        }
        Protocol::Ap => {
            let (h, t) = train_attentive_probe(&train, &cfg)?;
            (ProbeHead::Attentive(h), t)
        }
    };
    let result = evaluate_probe(&head, &eval)?;
    std::fs::create_dir_all(&g.out)?;
    save_head(&head, g.out.join("head.json"), &config_hash(&config), cfg.seed, &train.class_names)?;

    let mut csv = String::from("id,predicted,label\n");
    for (r, p) in eval.records.iter().zip(&result.predictions) {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.id,
            super::class_name(&eval, Some(*p)),
            super::class_name(&eval, r.label)
        ));
    }
    crate::report::write_text(&g.out.join("predictions.csv"), &csv)?;

    let per_class: serde_json::Map<String, serde_json::Value> = eval
        .class_names
        .iter()
        .zip(&result.per_class_top1)
        .map(|(n, v)| (n.clone(), json!(v)))
        .collect();
    report.results(json!({
        "benchmark": benchmark,
        "model": inputs.model,
        "protocol": kind,
        "top1": result.top1,
        "top5": result.top5,
        "n": result.n,
        "per_class_top1": per_class,
        "final_epoch_loss": trace.epoch_loss.last(),
        "epoch_loss": trace.epoch_loss,
        "steps_per_epoch": trace.steps_per_epoch,
    }));
    report.table(
        &format!("{kind} probe on {benchmark}"),
        &[
            vec!["model".into(), "top1".into(), "top5".into(), "n".into()],
            vec![inputs.model.clone(), pct(result.top1), pct(result.top5), result.n.to_string()],
        ],
    );
    let path = report.write(&g.out)?;
    println!("top1 {:.2} top5 {:.2} -> {}", result.top1, result.top5, path.display());
    Ok(())
}
