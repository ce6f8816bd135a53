//! `prototype`: build and archive the inter-class similarity matrix.

use std::path::Path;

use anyhow::{bail, Result};

use crate::commands::{ensure_out_dir, say, summary_digest};
use crate::config::RunConfig;
use simproto::io::archive::PrototypeArchive;
use simproto::prototype::build_prototype;

/// `input` is either a dataset directory (containing a `manifest`) or a
/// statistics CSV written by the `stats` command.
pub fn cmd_prototype(cfg: &RunConfig, input: &Path, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let stats = if input.is_dir() {
        if !input.join("manifest").exists() {
            bail!(
                "{} is a directory without a manifest; expected a dataset root or a stats CSV",
                input.display()
            );
        }
        simproto::stats::summarize_dataset_par(input)?
    } else {
        simproto::io::summary::read(input)?
    };
    let digest = summary_digest(&stats);
    let proto = build_prototype(&stats, cfg.metric)?;
    let archive = PrototypeArchive::new(proto, stats.l, digest);
    archive.save(out_dir)?;
    say(
        cfg,
        format!(
            "{} prototype over {} classes -> {}",
            cfg.metric,
            archive.meta.c,
            out_dir.display()
        ),
    );
    Ok(())
}
