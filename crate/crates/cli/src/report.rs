use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::experiments::ExperimentOutput;

#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

/// Writes `<experiment>.csv` and `<experiment>.summary.json` into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput, dir: &Path, wall: Duration) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = cfg.experiment.label();
    let csv = dir.join(format!("{name}.csv"));
    let summary = dir.join(format!("{name}.summary.json"));
    out.table.write_csv(&csv)?;
    let doc = json!({
        "experiment": name,
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
        "versions": { "esd-lab": crate::VERSION, "esd-core": esd_core::VERSION },
        "wall_time_s": wall.as_secs_f64(),
        "rows": out.table.rows.len(),
        "columns": out.table.header,
        "csv": csv.file_name().map(|f| f.to_string_lossy().into_owned()),
        "config": cfg,
        "results": out.summary,
    });
    std::fs::write(&summary, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", summary.display()))?;
    Ok(OutputPaths { csv, summary })
}
