//! `gradcheck`: finite-difference verification report.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;

use crate::commands::{ensure_out_dir, say};
use crate::config::RunConfig;
use simproto::io::fmt_f64;
use simproto::model::gradient_check;

pub const GRADCHECK_FILE: &str = "gradcheck.csv";

pub fn cmd_gradcheck(cfg: &RunConfig, trials: usize, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let report = gradient_check(trials, cfg.seed)?;
    let mut out = String::from("axis,max_rel_error,threshold,pass\n");
    for entry in &report.entries {
        writeln!(
            out,
            "{},{},{},{}",
            entry.axis,
            fmt_f64(entry.max_rel_error),
            fmt_f64(entry.threshold),
            entry.pass()
        )
        .expect("string write");
        say(
            cfg,
            format!(
                "{:<40} {:>12.3e}  (< {:.0e}) {}",
                entry.axis,
                entry.max_rel_error,
                entry.threshold,
                if entry.pass() { "ok" } else { "FAIL" }
            ),
        );
    }
    std::fs::write(out_dir.join(GRADCHECK_FILE), out)?;
    say(
        cfg,
        format!(
            "worst relative error {:.3e} over {} axes x {} trials",
            report.worst(),
            report.entries.len(),
            report.trials
        ),
    );
    Ok(())
}
