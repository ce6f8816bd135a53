//! `gen`: write a synthetic dataset in the standard layout.

use std::path::Path;

use anyhow::Result;

use crate::commands::{ensure_out_dir, say};
use crate::config::RunConfig;

pub fn cmd_gen(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let dataset = cfg.gen.generate(cfg.seed)?;
    let manifest = simproto::io::dataset::write_dataset(out_dir, &dataset)?;
    say(
        cfg,
        format!(
            "wrote {} classes x {} maps ({} labels) to {}",
            manifest.class_count(),
            cfg.gen.per_class,
            dataset.l,
            out_dir.display()
        ),
    );
    Ok(())
}
