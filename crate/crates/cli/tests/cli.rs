//! End-to-end checks of the `ganforge` binary: artifact layout, exit
//! codes, idempotence, and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ganforge")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ganforge-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("GANFORGE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn make_cache(dir: &Path, per_class: usize) -> PathBuf {
    let cache = dir.join("cache");
    ok(&[
        "dataset",
        "--toy",
        "glyphs",
        "--classes",
        "2",
        "--per-class",
        &per_class.to_string(),
        "--noise",
        "0.6",
        "--seed",
        "5",
        "--out",
        cache.to_str().unwrap(),
    ]);
    cache
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn dataset_command_writes_cache_and_is_idempotent() {
    let dir = scratch("dataset");
    let cache = make_cache(&dir, 8);
    assert!(cache.join("manifest.json").exists());
    assert!(cache.join("images.gft").exists());
    assert!(cache.join("labels.gft").exists());
    assert!(cache.join("config.toml").exists());
    let first = read_tree(&cache);
    ok(&[
        "dataset", "--toy", "glyphs", "--classes", "2", "--per-class", "8", "--noise", "0.6",
        "--seed", "5", "--out", cache.to_str().unwrap(),
    ]);
    assert_eq!(read_tree(&cache), first, "rerun changed cache bytes");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn dataset_rejects_unknown_toy_with_exit_2() {
    let dir = scratch("dataset-bad");
    let out = run(&["dataset", "--toy", "nonsense", "--out", dir.join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn train_gan_writes_history_grids_checkpoints() {
    let dir = scratch("train");
    let cache = make_cache(&dir, 8);
    let rundir = dir.join("run");
    ok(&[
        "train-gan", "--data", cache.to_str().unwrap(), "--out", rundir.to_str().unwrap(),
        "--epochs", "2", "--batch", "8", "--latent", "8", "--width", "2", "--seed", "7",
        "--checkpoint-every", "2", "--grid-every", "1",
    ]);
    let history = std::fs::read_to_string(rundir.join("history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "epoch,d_loss,g_loss,d_real_mean,d_fake_mean,seconds");
    assert_eq!(lines.len(), 3, "2 epochs -> 2 rows");
    assert!(rundir.join("checkpoint_ep0001.gfc").exists());
    assert!(rundir.join("checkpoint_ep0002.gfc").exists());
    assert!(rundir.join("samples_ep0001.pgm").exists());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn train_gan_missing_cache_exits_4() {
    let dir = scratch("train-missing");
    let out = run(&[
        "train-gan", "--data", dir.join("nope").to_str().unwrap(), "--out",
        dir.join("run").to_str().unwrap(), "--epochs", "1",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn evaluate_self_test_reports_zero_fid() {
    let dir = scratch("eval-self");
    let cache = make_cache(&dir, 8);
    let out = ok(&[
        "evaluate", "--data", cache.to_str().unwrap(), "--self-test", "--extractor", "rp:16",
        "--out", dir.join("eval").to_str().unwrap(), "--seed", "3",
    ]);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("FID 0.000000"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("eval/report.json")).unwrap()).unwrap();
    assert!(report["fid"].as_f64().unwrap() <= 1e-6);
    for key in ["is_mean", "is_std", "fid", "kid_mean", "kid_std", "precision", "recall", "extractor_id"] {
        assert!(report.get(key).is_some(), "report missing {key}");
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn evaluate_supports_multiple_extractors() {
    let dir = scratch("eval-extractors");
    let cache = make_cache(&dir, 8);
    let run1 = dir.join("rawpix");
    let run2 = dir.join("rp64");
    ok(&[
        "evaluate", "--data", cache.to_str().unwrap(), "--self-test", "--extractor", "raw-pixels",
        "--out", run1.to_str().unwrap(),
    ]);
    ok(&[
        "evaluate", "--data", cache.to_str().unwrap(), "--self-test", "--extractor", "rp:64",
        "--out", run2.to_str().unwrap(),
    ]);
    let a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run1.join("report.json")).unwrap()).unwrap();
    let b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run2.join("report.json")).unwrap()).unwrap();
    assert_ne!(a["extractor_id"], b["extractor_id"]);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn evaluate_default_extractor_requires_classifier_exit_4() {
    let dir = scratch("eval-noclf");
    let cache = make_cache(&dir, 8);
    let out = run(&[
        "evaluate", "--data", cache.to_str().unwrap(), "--self-test", "--out",
        dir.join("eval").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn embed_pca_writes_csv_svg_pair_with_source_flags() {
    let dir = scratch("embed");
    let cache = make_cache(&dir, 8);
    let rundir = dir.join("gan");
    ok(&[
        "train-gan", "--data", cache.to_str().unwrap(), "--out", rundir.to_str().unwrap(),
        "--epochs", "1", "--batch", "8", "--latent", "8", "--width", "2", "--seed", "7",
        "--checkpoint-every", "1", "--grid-every", "9",
    ]);
    let emb = dir.join("embed");
    ok(&[
        "embed", "--data", cache.to_str().unwrap(), "--checkpoint",
        rundir.join("checkpoint_ep0001.gfc").to_str().unwrap(), "--method", "pca",
        "--extractor", "rp:16", "--n-synth", "6", "--out", emb.to_str().unwrap(), "--seed", "2",
    ]);
    let csv = std::fs::read_to_string(emb.join("pca_layout.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 16 + 6);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",synthetic")).count(), 6);
    assert!(emb.join("pca_layout.svg").exists());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn embed_tsne_reruns_are_byte_identical() {
    let dir = scratch("embed-det");
    let cache = make_cache(&dir, 8);
    let (e1, e2) = (dir.join("e1"), dir.join("e2"));
    for out in [&e1, &e2] {
        ok(&[
            "embed", "--data", cache.to_str().unwrap(), "--method", "tsne", "--extractor",
            "rp:8", "--perp", "5", "--iters", "60", "--out", out.to_str().unwrap(), "--seed", "7",
        ]);
    }
    assert_eq!(read_tree(&e1), read_tree(&e2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn embed_rejects_tsne_on_tiny_sets_exit_4() {
    let dir = scratch("embed-tiny");
    let cache = dir.join("cache");
    ok(&[
        "dataset", "--toy", "glyphs", "--classes", "1", "--per-class", "3", "--noise", "0.5",
        "--seed", "5", "--out", cache.to_str().unwrap(),
    ]);
    let out = run(&[
        "embed", "--data", cache.to_str().unwrap(), "--method", "tsne", "--extractor", "rp:8",
        "--out", dir.join("e").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn protocol_real_only_rows_and_config_written() {
    let dir = scratch("proto-real");
    let cache = make_cache(&dir, 12);
    let out_dir = dir.join("proto");
    ok(&[
        "protocol", "--data", cache.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
        "--regimens", "real", "--seeds", "2", "--classifier-epochs", "1", "--classifier-width", "2",
        "--seed", "3",
    ]);
    assert!(out_dir.join("config.toml").exists());
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "one row per seed: {csv}");
    assert!(rows.iter().all(|r| r.starts_with("real,")));
    assert!(out_dir.join("results.md").exists());
    assert!(out_dir.join("classifier.gfc").exists());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn protocol_without_gan_source_exits_4() {
    let dir = scratch("proto-missing");
    let cache = make_cache(&dir, 8);
    let out = run(&[
        "protocol", "--data", cache.to_str().unwrap(), "--out", dir.join("p").to_str().unwrap(),
        "--regimens", "gan", "--seeds", "1",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn protocol_gate_exhaustion_exits_5() {
    let dir = scratch("proto-gate");
    let cache = make_cache(&dir, 8);
    let out = run(&[
        "protocol", "--data", cache.to_str().unwrap(), "--out", dir.join("p").to_str().unwrap(),
        "--train-first", "--gan-epochs", "1", "--gan-batch", "4", "--gan-width", "2",
        "--regimens", "gan", "--ratios", "0.5", "--seeds", "1", "--classifier-epochs", "1",
        "--classifier-width", "2", "--pool-per-class", "6", "--round-epochs", "1", "--max-rounds", "0",
        "--gate-fid-max", "0.000000001", "--seed", "4",
    ]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_file_feeds_defaults_and_flags_override() {
    let dir = scratch("config");
    let cfg_path = dir.join("ganforge.toml");
    std::fs::write(
        &cfg_path,
        "seed = 9\n[dataset]\ntoy = \"glyphs\"\nclasses = 2\nper_class = 4\nnoise = 0.5\n",
    )
    .unwrap();
    let c1 = dir.join("c1");
    ok(&["dataset", "--config", cfg_path.to_str().unwrap(), "--out", c1.to_str().unwrap()]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(c1.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n"], 8);
    // Flag overrides the file's per_class.
    let c2 = dir.join("c2");
    ok(&[
        "dataset", "--config", cfg_path.to_str().unwrap(), "--per-class", "6", "--out",
        c2.to_str().unwrap(),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(c2.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n"], 12);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn ganforge_seed_env_backfills_default() {
    let dir = scratch("envseed");
    let (c1, c2) = (dir.join("c1"), dir.join("c2"));
    let base = ["dataset", "--toy", "glyphs", "--classes", "2", "--per-class", "4"];
    let out1 = Command::new(bin())
        .args(base)
        .args(["--out", c1.to_str().unwrap()])
        .env("GANFORGE_SEED", "123")
        .output()
        .unwrap();
    assert!(out1.status.success());
    let out2 = Command::new(bin())
        .args(base)
        .args(["--out", c2.to_str().unwrap(), "--seed", "123"])
        .env_remove("GANFORGE_SEED")
        .output()
        .unwrap();
    assert!(out2.status.success());
    assert_eq!(
        std::fs::read(c1.join("images.gft")).unwrap(),
        std::fs::read(c2.join("images.gft")).unwrap()
    );
    std::fs::remove_dir_all(dir).unwrap();
}
