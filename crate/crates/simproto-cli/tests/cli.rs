//! Command-level integration tests: file outputs, determinism, and error
//! surfaces.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use simproto_cli::commands;
use simproto_cli::config::RunConfig;

fn quiet_config() -> RunConfig {
    RunConfig {
        quiet: true,
        ..RunConfig::default()
    }
}

fn small_gen(cfg: &mut RunConfig, per_class: usize) {
    cfg.gen.per_class = per_class;
    cfg.train.epochs = 3;
    cfg.report.timing = false;
}

/// Recursively collect relative path -> file bytes.
fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn gen_is_deterministic_and_manifest_counts_match() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 5);
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    commands::cmd_gen(&cfg, dir_a.path()).unwrap();
    commands::cmd_gen(&cfg, dir_b.path()).unwrap();
    assert_eq!(tree_bytes(dir_a.path()), tree_bytes(dir_b.path()));

    // Manifest counts match directory contents.
    let manifest = simproto::io::dataset::Manifest::load(dir_a.path()).unwrap();
    assert_eq!(manifest.class_count(), 7);
    for class in &manifest.classes {
        let files = std::fs::read_dir(dir_a.path().join(&class.name))
            .unwrap()
            .count();
        assert_eq!(files, class.count);
    }

    // A different seed changes the data.
    let mut other = cfg.clone();
    other.seed += 1;
    let dir_c = tempfile::tempdir().unwrap();
    commands::cmd_gen(&other, dir_c.path()).unwrap();
    assert_ne!(tree_bytes(dir_a.path()), tree_bytes(dir_c.path()));
}

#[test]
fn stats_output_is_stable_and_matches_the_library() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 4);
    let data = tempfile::tempdir().unwrap();
    commands::cmd_gen(&cfg, data.path()).unwrap();

    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    commands::cmd_stats(&cfg, data.path(), out_a.path()).unwrap();
    commands::cmd_stats(&cfg, data.path(), out_b.path()).unwrap();
    let bytes_a = std::fs::read(out_a.path().join("stats.csv")).unwrap();
    let bytes_b = std::fs::read(out_b.path().join("stats.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b);

    // The written values parse back to exactly the library's summary.
    let parsed = simproto::io::summary::read(&out_a.path().join("stats.csv")).unwrap();
    let direct = simproto::stats::summarize_dataset(data.path()).unwrap();
    assert_eq!(parsed, direct);
    assert_eq!(parsed.class_count(), 7);
}

#[test]
fn prototype_archive_round_trips_and_matches_build() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 4);
    let data = tempfile::tempdir().unwrap();
    commands::cmd_gen(&cfg, data.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    commands::cmd_prototype(&cfg, data.path(), out.path()).unwrap();

    let archive = simproto::io::archive::PrototypeArchive::load(out.path()).unwrap();
    let stats = simproto::stats::summarize_dataset(data.path()).unwrap();
    let direct = simproto::prototype::build_prototype(&stats, cfg.metric).unwrap();
    assert_eq!(
        archive.prototype.matrix().as_slice(),
        direct.matrix().as_slice()
    );
    assert_eq!(
        archive.meta.source_digest,
        simproto::io::summary::digest(&stats)
    );

    // Save -> load -> save reproduces identical bytes.
    let again = tempfile::tempdir().unwrap();
    archive.save(again.path()).unwrap();
    assert_eq!(
        std::fs::read(out.path().join("proto.csv")).unwrap(),
        std::fs::read(again.path().join("proto.csv")).unwrap()
    );
}

#[test]
fn prototype_from_stats_csv_equals_prototype_from_dataset() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 4);
    let data = tempfile::tempdir().unwrap();
    commands::cmd_gen(&cfg, data.path()).unwrap();
    let stats_out = tempfile::tempdir().unwrap();
    commands::cmd_stats(&cfg, data.path(), stats_out.path()).unwrap();

    let from_dir = tempfile::tempdir().unwrap();
    let from_csv = tempfile::tempdir().unwrap();
    commands::cmd_prototype(&cfg, data.path(), from_dir.path()).unwrap();
    commands::cmd_prototype(&cfg, &stats_out.path().join("stats.csv"), from_csv.path()).unwrap();
    assert_eq!(
        std::fs::read(from_dir.path().join("proto.csv")).unwrap(),
        std::fs::read(from_csv.path().join("proto.csv")).unwrap()
    );
}

#[test]
fn train_hard_records_unit_confidence_and_reruns_identically() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 6);
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    commands::cmd_train(&cfg, None, out_a.path()).unwrap();
    commands::cmd_train(&cfg, None, out_b.path()).unwrap();

    let report = std::fs::read_to_string(out_a.path().join("report.csv")).unwrap();
    for line in report.lines().skip(1) {
        let sigma: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(sigma, 1.0);
    }
    for file in ["report.csv", "metrics.json", "checkpoint.txt"] {
        assert_eq!(
            std::fs::read(out_a.path().join(file)).unwrap(),
            std::fs::read(out_b.path().join(file)).unwrap(),
            "{file} differs between identical runs"
        );
    }
}

#[test]
fn train_gls_sigma_column_follows_the_schedule() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 6);
    cfg.train.strategy = "gls".into();
    cfg.train.step = 2;
    cfg.train.epochs = 6;
    cfg.report.labels = true;
    let out = tempfile::tempdir().unwrap();
    commands::cmd_train(&cfg, None, out.path()).unwrap();

    // Recompute sigma0 from the same data and check the recorded schedule.
    let data = commands::resolve_data(&cfg, None, cfg.seed).unwrap();
    let sigma0 = simproto::softening::sigma0_of(data.proto.matrix()).unwrap();
    let report = std::fs::read_to_string(out.path().join("report.csv")).unwrap();
    for (i, line) in report.lines().skip(1).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let sigma: f64 = fields[1].parse().unwrap();
        let ratio = i as f64 / cfg.train.step as f64;
        let expected = sigma0 * (1.0 - ratio) + cfg.train.cap * ratio;
        assert!((sigma - expected).abs() < 1e-12, "epoch {}", i + 1);
        let hard: bool = fields[6].parse().unwrap();
        assert_eq!(hard, i + 1 >= cfg.train.step + 2);
    }

    // Per-epoch label exports cover every epoch and are row stochastic.
    for epoch in 1..=cfg.train.epochs {
        let text = std::fs::read_to_string(out.path().join(format!("labels_epoch_{epoch:03}.csv")))
            .unwrap();
        for line in text.lines().skip(1) {
            let sum: f64 = line.split(',').map(|v| v.parse::<f64>().unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn eval_reproduces_training_test_accuracy() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 6);
    let data = tempfile::tempdir().unwrap();
    commands::cmd_gen(&cfg, data.path()).unwrap();
    cfg.data_dir = Some(data.path().to_path_buf());
    let out = tempfile::tempdir().unwrap();
    commands::cmd_train(&cfg, None, out.path()).unwrap();

    let eval_out = tempfile::tempdir().unwrap();
    commands::cmd_eval(
        &cfg,
        &out.path().join("checkpoint.txt"),
        data.path(),
        "test",
        true,
        eval_out.path(),
    )
    .unwrap();
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("metrics.json")).unwrap())
            .unwrap();
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_out.path().join("eval.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["test_accuracy"], eval["accuracy"]);
    assert_eq!(metrics["confusion"], eval["confusion"]);

    // Embeddings have one row per test sample, width = hidden + label.
    let embeddings = std::fs::read_to_string(eval_out.path().join("embeddings.csv")).unwrap();
    let rows: Vec<&str> = embeddings.lines().collect();
    assert_eq!(rows.len() - 1, eval["samples"].as_u64().unwrap() as usize);
    assert_eq!(rows[0].split(',').count(), 1 + cfg.train.hidden[0]);
}

#[test]
fn bench_table_equals_per_run_reaggregation() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 6);
    cfg.bench.strategies = vec!["hard".into(), "hard".into(), "gls".into()];
    cfg.bench.seeds = vec![3, 4];
    let out = tempfile::tempdir().unwrap();
    let rows = commands::cmd_bench(&cfg, out.path()).unwrap();
    assert_eq!(rows.len(), 3);
    // The duplicate hard strategy pairs with the baseline at delta 0.
    assert_eq!(rows[1].delta_vs_hard, Some(0.0));

    // Re-aggregate from the per-run files and compare with the table.
    let mut records = Vec::new();
    for entry in std::fs::read_dir(out.path()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if name.starts_with("run_") {
            let record: commands::RunRecord =
                serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
            records.push(record);
        }
    }
    assert_eq!(records.len(), 6);
    let reaggregated = commands::aggregate_runs(&records);
    assert_eq!(reaggregated, rows);

    // Mean equals the hand-average of the per-run accuracies.
    for row in &rows {
        let accs: Vec<f64> = records
            .iter()
            .filter(|r| {
                r.strategy == row.strategy
                    && rows
                        .iter()
                        .position(|x| std::ptr::eq(x, row))
                        .map(|i| r.strategy_index == i)
                        .unwrap_or(false)
            })
            .map(|r| r.test_accuracy)
            .collect();
        let mean: f64 = accs.iter().sum::<f64>() / accs.len() as f64;
        assert_eq!(mean, row.mean_accuracy);
    }
}

#[test]
fn bench_single_run_has_no_stddev() {
    let mut cfg = quiet_config();
    small_gen(&mut cfg, 6);
    cfg.bench.strategies = vec!["gls".into()];
    cfg.bench.seeds = vec![9];
    let out = tempfile::tempdir().unwrap();
    let rows = commands::cmd_bench(&cfg, out.path()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].seeds, 1);
    assert_eq!(rows[0].stddev_accuracy, None);
    assert_eq!(rows[0].delta_vs_hard, None);
    let table = std::fs::read_to_string(out.path().join("bench.csv")).unwrap();
    let last = table.lines().last().unwrap();
    assert!(last.ends_with(",,"), "empty stddev/delta/p cells: {last}");
}

#[test]
fn gradcheck_writes_a_deterministic_report() {
    let cfg = quiet_config();
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    commands::cmd_gradcheck(&cfg, 1, out_a.path()).unwrap();
    commands::cmd_gradcheck(&cfg, 1, out_b.path()).unwrap();
    let a = std::fs::read(out_a.path().join("gradcheck.csv")).unwrap();
    let b = std::fs::read(out_b.path().join("gradcheck.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().count() > 10);
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",true"), "axis failed: {line}");
    }
}

// Binary-level checks: exit codes and error text.

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simproto"))
}

#[test]
fn missing_dataset_fails_with_nonzero_exit_and_named_path() {
    let out = tempfile::tempdir().unwrap();
    let missing = out.path().join("nowhere");
    let output = binary()
        .args(["stats", missing.to_str().unwrap(), "--out"])
        .arg(out.path())
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nowhere"), "stderr: {stderr}");
}

#[test]
fn unknown_config_key_fails_with_the_key_named() {
    let out = tempfile::tempdir().unwrap();
    let output = binary()
        .args(["gen", "--set", "gen.bogus=1", "--out"])
        .arg(out.path())
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("gen.bogus"), "stderr: {stderr}");
}

#[test]
fn env_var_supplies_the_default_output_root() {
    let root = tempfile::tempdir().unwrap();
    let status = binary()
        .env("SIMPROTO_OUT", root.path())
        .args(["gen", "--set", "gen.per_class=4", "--quiet"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(root.path().join("manifest").exists());
}

#[test]
fn binary_runs_the_full_pipeline() {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    let run = root.path().join("run");
    let status = binary()
        .args(["gen", "--set", "gen.per_class=5", "--quiet", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    let status = binary()
        .args(["train", "--set", "train.epochs=2", "--quiet", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&run)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(run.join("metrics.json").exists());
    assert!(run.join("checkpoint.txt").exists());
}
