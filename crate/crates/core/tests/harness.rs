mod common;

use std::fs;
use std::process::Command;

use common::data_path;
use puclust::data::ArtifConfig;
use puclust::glm::{fit_logistic, LogisticConfig};
use puclust::harness::{
    cell_seed, emit_report, evaluate, prepare_dataset, read_raw, replication_count, run_experiment, stratified_split,
    summarize_raw, summarize_rows, DatasetSource, DatasetSpec, ExperimentConfig, Method,
};
use puclust::labelling::Scheme;
use puclust::seed::{self, hash_str};

fn small_artif(n: usize) -> DatasetSpec {
    DatasetSpec {
        name: "artif".into(),
        source: DatasetSource::Artif(ArtifConfig {
            n,
            ..ArtifConfig::default()
        }),
    }
}

#[test]
fn naive_at_full_frequency_is_supervised_logistic() {
    let mut cfg = ExperimentConfig::new(vec![small_artif(400)]);
    cfg.scheme = Scheme::Scar;
    cfg.c_list = vec![1.0];
    cfg.methods = vec![Method::Naive];
    cfg.replications = Some(4);
    cfg.master_seed = 17;
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 4);

    let ds = prepare_dataset(&cfg.datasets[0], &cfg).unwrap().data;
    for row in &rows {
        assert_eq!(row.realized_c, 1.0);
        // with every positive labeled, S is Y and the split is stratified on Y
        let cs = cell_seed(cfg.master_seed, "artif", Scheme::Scar, 1.0, row.replication_index);
        let (train, test) = stratified_split(&ds.y, cfg.split, seed::derive(cs, &[hash_str("split")]));
        let y_train: Vec<u8> = train.iter().map(|&i| ds.y[i]).collect();
        let y_test: Vec<u8> = test.iter().map(|&i| ds.y[i]).collect();
        let fit = fit_logistic(&ds.x.select_rows(&train), &y_train, &LogisticConfig::default()).unwrap();
        let (acc, f1, auc) = evaluate(&ds.x.select_rows(&test), &y_test, &fit.coefficients).unwrap();
        assert_eq!((row.accuracy, row.f1, row.auc), (acc, f1, auc));
    }
}

#[test]
fn one_cell_type_yields_replication_count_rows() {
    let mut cfg = ExperimentConfig::new(vec![small_artif(200)]);
    cfg.c_list = vec![0.5];
    cfg.methods = vec![Method::Naive];
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), replication_count(200, 21));
    assert!(rows.iter().all(|r| !r.failed()));
    assert!(rows.iter().all(|r| r.fit_seconds >= 0.0));
}

#[test]
fn summary_from_raw_matches_in_memory_summary() {
    let mut cfg = ExperimentConfig::new(vec![small_artif(300)]);
    cfg.c_list = vec![0.5];
    cfg.q_list = vec![0.5, 1.0];
    cfg.methods = vec![Method::Naive, Method::Clust];
    cfg.replications = Some(6);
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 6 * 3);

    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&rows, dir.path()).unwrap();
    let in_memory = summarize_rows(&rows);
    assert_eq!(in_memory.len(), 3, "one line per (method, q)");
    let again = summarize_raw(&files.raw, &dir.path().join("again")).unwrap();
    assert_eq!(format!("{in_memory:?}"), format!("{again:?}"));
    assert_eq!(read_raw(&files.raw).unwrap().len(), rows.len());
}

#[test]
fn metrics_score_true_labels_in_unit_interval() {
    let mut cfg = ExperimentConfig::new(vec![small_artif(300)]);
    cfg.c_list = vec![0.3];
    cfg.q_list = vec![1.0];
    cfg.methods = vec![Method::Naive, Method::Clust, Method::LassoJoint];
    cfg.replications = Some(3);
    for row in run_experiment(&cfg).unwrap() {
        for m in [row.accuracy, row.f1, row.auc] {
            assert!((0.0..=1.0).contains(&m), "{row:?}");
        }
    }
}

fn cli() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_puclust"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

#[test]
fn cli_describes_a_dataset() {
    let out = cli()
        .args(["datasets", "describe"])
        .arg(data_path("breastc.csv"))
        .args(["--target", "class"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("Dataset,Feat,Obs"));
    assert!(lines.next().unwrap().starts_with("breastc,9,683,"));
}

#[test]
fn cli_runs_and_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    fs::write(
        &config,
        "scheme = \"NONSCAR\"\nc_list = [0.5]\nq_list = [1.0]\nmethods = [\"NAIVE\", \"CLUST\"]\n\
         replications = 2\nmaster_seed = 5\n\n[[datasets]]\nkind = \"artif\"\nn = 200\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let status = cli()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0), "exit code counts failed cells");
    for f in ["raw.csv", "summary.csv", "summary_wide.csv", "summary_by_dataset.csv", "timing.csv"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }

    let resummary = dir.path().join("resummary");
    let status = cli()
        .args(["summarize", "--raw"])
        .arg(out_dir.join("raw.csv"))
        .arg("--out")
        .arg(&resummary)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        fs::read(out_dir.join("summary.csv")).unwrap(),
        fs::read(resummary.join("summary.csv")).unwrap()
    );
}

#[test]
fn cli_rejects_a_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "c_list = [1.5]\n\n[[datasets]]\nkind = \"artif\"\n").unwrap();
    let out = cli().args(["run", "--config"]).arg(&config).output().unwrap();
    assert!(!out.status.success());
}
