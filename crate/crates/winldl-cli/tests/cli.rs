//! End-to-end tests of the `winldl` binary.

use std::path::Path;
use std::process::{Command, Output};

fn winldl(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_winldl"))
        .arg("--out")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_writes_dataset_with_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = winldl(
        dir.path(),
        &[
            "synth", "--n", "100", "--k", "5", "--c", "4", "--name", "demo",
        ],
    );
    assert_success(&out);
    let text = std::fs::read_to_string(dir.path().join("demo.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 100);
    assert_eq!(lines[0].split(',').count(), 9);
    assert!(dir.path().join("demo.csv.meta").exists());
}

#[test]
fn mask_writes_expected_pair_count_and_rejects_rate_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&winldl(
        dir.path(),
        &[
            "synth", "--n", "100", "--k", "5", "--c", "4", "--name", "demo",
        ],
    ));
    let data = dir.path().join("demo.csv");
    let mask = dir.path().join("mask.csv");
    let out = winldl(
        dir.path(),
        &[
            "mask",
            "--data",
            data.to_str().unwrap(),
            "--rate",
            "0.3",
            "--out-mask",
            mask.to_str().unwrap(),
        ],
    );
    assert_success(&out);
    let pairs = std::fs::read_to_string(&mask).unwrap();
    assert_eq!(pairs.lines().count(), 120); // floor(0.3 * 400)

    let bad = winldl(
        dir.path(),
        &["mask", "--data", data.to_str().unwrap(), "--rate", "1.0"],
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn train_then_eval_produces_report_with_full_schema() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&winldl(
        dir.path(),
        &[
            "--seed", "5", "synth", "--n", "120", "--k", "6", "--c", "4", "--noise", "0.05",
            "--name", "pipe",
        ],
    ));
    let data = dir.path().join("pipe.csv");
    let model = dir.path().join("pipe-model.txt");
    let train = winldl(
        dir.path(),
        &[
            "train",
            "--data",
            data.to_str().unwrap(),
            "--missing-rate",
            "0.3",
            "--mask-seed",
            "7",
            "--train-fraction",
            "0.8",
            "--split-seed",
            "11",
            "--add-bias",
            "--model-out",
            model.to_str().unwrap(),
            "--trace-out",
            dir.path().join("trace.csv").to_str().unwrap(),
        ],
    );
    assert_success(&train);
    assert!(model.exists());
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,residual,objective"));
    assert_eq!(trace.lines().count(), 51); // header + default 50 iterations

    let eval = winldl(
        dir.path(),
        &[
            "eval",
            "--model",
            model.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--train-fraction",
            "0.8",
            "--split-seed",
            "11",
            "--partition",
            "test",
        ],
    );
    assert_success(&eval);

    // The train partition of the same seeded split also evaluates cleanly.
    let eval_train = winldl(
        dir.path(),
        &[
            "eval",
            "--model",
            model.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--train-fraction",
            "0.8",
            "--split-seed",
            "11",
            "--partition",
            "train",
            "--out-json",
            dir.path().join("train-report.json").to_str().unwrap(),
            "--out-csv",
            dir.path().join("train-report.csv").to_str().unwrap(),
        ],
    );
    assert_success(&eval_train);
    let train_report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("train-report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(train_report["per_sample"].as_array().unwrap().len(), 96);
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("pipe-report.json")).unwrap(),
    )
    .unwrap();
    for metric in ["cosine", "intersection", "chebyshev", "clark", "canberra"] {
        assert!(
            report["mean"][metric].is_number(),
            "report missing mean {metric}"
        );
        assert!(report["std"][metric].is_number());
    }
    assert!(report["mre_low"].is_number() || report["mre_low"].is_null());
    assert!(report["mre_high"].is_number() || report["mre_high"].is_null());
    assert_eq!(report["per_sample"].as_array().unwrap().len(), 24);

    let csv = std::fs::read_to_string(dir.path().join("pipe-report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 12);
}

#[test]
fn repeated_training_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&winldl(
        dir.path(),
        &[
            "synth", "--n", "60", "--k", "4", "--c", "3", "--name", "det",
        ],
    ));
    let data = dir.path().join("det.csv");
    for name in ["m1.txt", "m2.txt"] {
        assert_success(&winldl(
            dir.path(),
            &[
                "train",
                "--data",
                data.to_str().unwrap(),
                "--missing-rate",
                "0.5",
                "--mask-seed",
                "3",
                "--model-out",
                dir.path().join(name).to_str().unwrap(),
            ],
        ));
    }
    let a = std::fs::read(dir.path().join("m1.txt")).unwrap();
    let b = std::fs::read(dir.path().join("m2.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn missing_config_file_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = winldl(
        dir.path(),
        &[
            "--config",
            "/nonexistent/config",
            "synth",
            "--n",
            "10",
            "--k",
            "2",
            "--c",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config"), "stderr: {stderr}");
}

#[test]
fn config_file_sets_solver_options() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&winldl(
        dir.path(),
        &[
            "synth", "--n", "40", "--k", "3", "--c", "3", "--name", "cfg",
        ],
    ));
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "max_iter=7\nscheme=inldl-u\nadd_bias=true\n").unwrap();
    let model = dir.path().join("cfg-model.txt");
    assert_success(&winldl(
        dir.path(),
        &[
            "--config",
            config.to_str().unwrap(),
            "train",
            "--data",
            dir.path().join("cfg.csv").to_str().unwrap(),
            "--model-out",
            model.to_str().unwrap(),
            "--trace-out",
            dir.path().join("cfg-trace.csv").to_str().unwrap(),
        ],
    ));
    let text = std::fs::read_to_string(&model).unwrap();
    assert!(text.contains("scheme=inldl-u"));
    assert!(text.contains("max_iter=7"));
    assert!(text.contains("add_bias=true"));
    let trace = std::fs::read_to_string(dir.path().join("cfg-trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 8);
}

#[test]
fn eval_with_incompatible_dataset_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&winldl(
        dir.path(),
        &["synth", "--n", "40", "--k", "4", "--c", "3", "--name", "a"],
    ));
    assert_success(&winldl(
        dir.path(),
        &["synth", "--n", "40", "--k", "6", "--c", "3", "--name", "b"],
    ));
    let model = dir.path().join("a-model.txt");
    assert_success(&winldl(
        dir.path(),
        &[
            "train",
            "--data",
            dir.path().join("a.csv").to_str().unwrap(),
            "--model-out",
            model.to_str().unwrap(),
        ],
    ));
    let out = winldl(
        dir.path(),
        &[
            "eval",
            "--model",
            model.to_str().unwrap(),
            "--data",
            dir.path().join("b.csv").to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("4") && stderr.contains("6"),
        "error should name both shapes: {stderr}"
    );
}

#[test]
fn out_dir_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_winldl"))
        .env("WINLDL_OUT", dir.path())
        .args([
            "synth", "--n", "10", "--k", "2", "--c", "2", "--name", "envy",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("envy.csv").exists());
}

#[test]
fn standardized_training_round_trips_through_eval() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&winldl(
        dir.path(),
        &[
            "synth", "--n", "80", "--k", "4", "--c", "3", "--noise", "0.05", "--name", "std",
        ],
    ));
    let data = dir.path().join("std.csv");
    let model = dir.path().join("std-model.txt");
    assert_success(&winldl(
        dir.path(),
        &[
            "train",
            "--data",
            data.to_str().unwrap(),
            "--standardize",
            "--add-bias",
            "--model-out",
            model.to_str().unwrap(),
        ],
    ));
    let text = std::fs::read_to_string(&model).unwrap();
    assert!(text.contains("feature_means="));
    assert!(text.contains("feature_stds="));
    // Eval applies the stored standardization transparently.
    let eval = winldl(
        dir.path(),
        &[
            "eval",
            "--model",
            model.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
        ],
    );
    assert_success(&eval);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("std-report.json")).unwrap())
            .unwrap();
    let cosine = report["mean"]["cosine"].as_f64().unwrap();
    assert!(cosine > 0.7, "standardized pipeline cosine {cosine}");
}

#[test]
fn benchmark_mixes_file_and_synthetic_sources() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&winldl(
        dir.path(),
        &["synth", "--n", "50", "--k", "4", "--c", "3", "--noise", "0.05", "--name", "ondisk"],
    ));
    let out = winldl(
        dir.path(),
        &[
            "benchmark",
            "--data",
            dir.path().join("ondisk.csv").to_str().unwrap(),
            "--synth",
            "n=50,k=4,c=3,noise=0.05,seed=9",
            "--rates",
            "0.5",
            "--trials",
            "2",
            "--max-iter",
            "10",
            "--add-bias",
        ],
    );
    assert_success(&out);
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    // Header + 2 datasets x 1 scheme x 1 rate x 7 metrics.
    assert_eq!(csv.lines().count(), 15);
    assert!(csv.contains("ondisk,winldl,"));
    assert_eq!(
        std::fs::read_dir(dir.path().join("cells")).unwrap().count(),
        4
    );
}

#[test]
fn benchmark_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.cfg");
    std::fs::write(
        &config,
        "rates=0.3\ntrials=1\nschemes=inldl-u\nmax_iter=5\n",
    )
    .unwrap();
    let out = winldl(
        dir.path(),
        &[
            "--config",
            config.to_str().unwrap(),
            "benchmark",
            "--synth",
            "n=40,k=3,c=3,noise=0.05,seed=1",
            "--schemes",
            "winldl", // overrides the config's inldl-u
        ],
    );
    assert_success(&out);
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    // Config supplies rates=0.3 and trials=1; the flag supplies the scheme.
    // Header + 1 scheme x 1 rate x 7 metrics.
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.contains(",winldl,"));
    assert!(!csv.contains("inldl-u"));
    assert_eq!(
        std::fs::read_dir(dir.path().join("cells")).unwrap().count(),
        1
    );
}

#[test]
fn benchmark_smoke_produces_table_and_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = winldl(
        dir.path(),
        &[
            "--seed",
            "3",
            "benchmark",
            "--synth",
            "n=80,k=5,c=4,noise=0.05,seed=2",
            "--rates",
            "0.5",
            "--schemes",
            "winldl,inldl-u",
            "--trials",
            "2",
            "--max-iter",
            "15",
            "--add-bias",
        ],
    );
    assert_success(&out);
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    // Header + 2 schemes x 1 rate x 7 metrics.
    assert_eq!(csv.lines().count(), 15);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",ok")));
    assert!(dir.path().join("timings.csv").exists());
    assert_eq!(
        std::fs::read_dir(dir.path().join("cells")).unwrap().count(),
        2
    );
}
