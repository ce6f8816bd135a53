//! On-disk formats: PGM label maps, dataset manifests, summary and feature
//! CSVs, prototype archives, and model checkpoints.
//!
//! All numeric text output uses 17 significant digits so that written
//! values parse back to the exact same `f64`.

pub mod archive;
pub mod checkpoint;
pub mod dataset;
pub mod features;
pub mod pgm;
pub mod summary;

/// Render an `f64` with 17 significant digits (round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parse an `f64` written by [`fmt_f64`] (or any standard decimal form).
pub fn parse_f64(s: &str, context: &str) -> crate::error::Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| crate::error::Error::InvalidConfig {
            reason: format!("{context}: {s:?} is not a number"),
        })
}
