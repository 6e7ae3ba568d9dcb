//! `report.json` plus an aligned-text rendering. Wall-clock timing goes to
//! a separate `timing.json` so reports stay byte-identical across runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use vidprobe_core::{config_hash, sha256_hex, EmbeddingSet};

#[derive(Serialize)]
pub struct InputInfo {
    pub role: String,
    pub path: String,
    pub checksum: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<usize>,
}

impl InputInfo {
    pub fn set(role: &str, path: &Path, set: &EmbeddingSet) -> Self {
        Self {
            role: role.into(),
            path: path.display().to_string(),
            checksum: set.checksum(),
            dataset: Some(set.dataset_name.clone()),
            records: Some(set.len()),
        }
    }

    /// A non-store input file, checksummed over its raw bytes.
    pub fn file(role: &str, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Self {
            role: role.into(),
            path: path.display().to_string(),
            checksum: sha256_hex(&bytes),
            dataset: None,
            records: None,
        })
    }
}

pub struct Report {
    command: String,
    config: Value,
    inputs: Vec<InputInfo>,
    results: Value,
    text: String,
    started: Instant,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.into(),
            config,
            inputs: Vec::new(),
            results: Value::Null,
            text: String::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, info: InputInfo) {
        self.inputs.push(info);
    }

    pub fn results(&mut self, results: Value) {
        self.results = results;
    }

    /// Appends a titled table; the first row is the header.
    pub fn table(&mut self, title: &str, rows: &[Vec<String>]) {
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
            .collect();
        let _ = writeln!(self.text, "{title}");
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if c == 0 {
                        format!("{cell:<w$}", w = widths[c])
                    } else {
                        format!("{cell:>w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(self.text, "  {}", line.join("  ").trim_end());
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
                let _ = writeln!(self.text, "  {}", "-".repeat(total));
            }
        }
        self.text.push('\n');
    }

    pub fn line(&mut self, s: &str) {
        self.text.push_str(s);
        self.text.push('\n');
    }

    pub fn write(self, out: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let doc = json!({
            "tool": { "name": "vidprobe", "version": env!("CARGO_PKG_VERSION") },
            "command": self.command,
            "config": self.config,
            "config_hash": config_hash(&self.config),
            "inputs": self.inputs,
            "results": self.results,
        });
        let path = out.join("report.json");
        write_text(&path, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        let header = format!(
            "vidprobe {} | {}\nconfig {}\n\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            config_hash(&self.config)
        );
        write_text(&out.join("report.txt"), &(header + &self.text))?;
        let timing = json!({ "command": self.command, "elapsed_sec": self.started.elapsed().as_secs_f64() });
        write_text(&out.join("timing.json"), &(serde_json::to_string_pretty(&timing)? + "\n"))?;
        Ok(path)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Plot data as `id,x,y,label`.
pub fn write_points(path: &Path, rows: &[(String, f64, f64, String)]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["id", "x", "y", "label"])?;
    for (id, x, y, label) in rows {
        w.write_record([id.as_str(), &x.to_string(), &y.to_string(), label.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn pct(v: f64) -> String {
    format!("{v:.2}")
}
