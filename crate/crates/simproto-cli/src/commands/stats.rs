//! `stats`: per-class semantic representations of a dataset directory.

use std::path::Path;

use anyhow::Result;

use crate::commands::{ensure_out_dir, say};
use crate::config::RunConfig;

pub const STATS_FILE: &str = "stats.csv";

pub fn cmd_stats(cfg: &RunConfig, dataset_dir: &Path, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let stats = simproto::stats::summarize_dataset_par(dataset_dir)?;
    let path = out_dir.join(STATS_FILE);
    simproto::io::summary::write(&path, &stats)?;
    say(
        cfg,
        format!(
            "{} classes over {} labels -> {}",
            stats.class_count(),
            stats.l,
            path.display()
        ),
    );
    Ok(())
}
