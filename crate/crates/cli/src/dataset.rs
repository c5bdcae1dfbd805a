//! Tabular artifacts. Every file opens with `#` lines carrying the toolkit
//! version and the full experiment config, so any output can be traced back
//! to the run that produced it.

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use mbrb::engine::{RBDataset, SequenceRecord};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::Failure;

pub const TOOLKIT: &str = concat!("mbrb ", env!("CARGO_PKG_VERSION"));
const CONFIG_PREFIX: &str = "#|";
const WARNING_PREFIX: &str = "# warning: ";

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    s: usize,
    index: usize,
    survivals: u64,
    shots: u64,
    sequence: String,
    realized_digest: String,
}

/// Provenance block: a title line, warnings, then the config, one TOML
/// line per `#|` line.
pub fn provenance(kind: &str, config: &ExperimentConfig, warnings: &[String]) -> String {
    let mut out = format!("# {TOOLKIT} {kind}\n");
    for w in warnings {
        out.push_str(&format!("{WARNING_PREFIX}{w}\n"));
    }
    for line in config.to_toml().lines() {
        if line.is_empty() {
            out.push_str(CONFIG_PREFIX);
        } else {
            out.push_str(&format!("{CONFIG_PREFIX} {line}"));
        }
        out.push('\n');
    }
    out
}

pub fn render_dataset(config: &ExperimentConfig, dataset: &RBDataset) -> anyhow::Result<Vec<u8>> {
    let mut out = provenance("dataset", config, &dataset.warnings).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in &dataset.records {
            w.serialize(Row {
                s: r.length,
                index: r.index,
                survivals: r.survivals,
                shots: r.shots,
                sequence: r.sequence.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                realized_digest: format!("{:016x}", r.realized_digest),
            })?;
        }
        w.flush()?;
    }
    Ok(out)
}

pub struct LoadedDataset {
    pub config: ExperimentConfig,
    pub dataset: RBDataset,
}

pub fn parse_dataset(text: &str) -> anyhow::Result<LoadedDataset> {
    let mut config_lines = Vec::new();
    let mut warnings = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.strip_prefix(CONFIG_PREFIX) {
            config_lines.push(rest.strip_prefix(' ').unwrap_or(rest));
        } else if let Some(w) = line.strip_prefix(WARNING_PREFIX) {
            warnings.push(w.to_string());
        }
    }
    if config_lines.is_empty() {
        bail!("dataset has no embedded config");
    }
    let config = ExperimentConfig::parse(&config_lines.join("\n")).context("embedded config")?;
    let rb = config.to_rb_config()?;

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (n, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.with_context(|| format!("dataset row {}", n + 1))?;
        if row.shots == 0 || row.survivals > row.shots {
            bail!("dataset row {}: survivals {} of {} shots", n + 1, row.survivals, row.shots);
        }
        let sequence = row
            .sequence
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| anyhow!("dataset row {}: {e}", n + 1)))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let realized_digest =
            u64::from_str_radix(&row.realized_digest, 16).with_context(|| format!("dataset row {}: digest", n + 1))?;
        records.push(SequenceRecord {
            length: row.s,
            index: row.index,
            sequence,
            realized_digest,
            survivals: row.survivals,
            shots: row.shots,
        });
    }
    Ok(LoadedDataset { config, dataset: RBDataset { config: rb, records, warnings } })
}

pub fn read_dataset(path: &Path) -> Result<LoadedDataset, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read dataset {}", path.display()))
        .map_err(Failure::Io)?;
    parse_dataset(&text).with_context(|| format!("invalid dataset {}", path.display())).map_err(Failure::Validation)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let write = || -> std::io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(bytes)?;
        f.sync_all()
    };
    write().with_context(|| format!("cannot write {}", path.display())).map_err(Failure::Io)
}
