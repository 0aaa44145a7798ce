use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use senstype::features::FeatureMatrix;
use senstype::forest::{classify, ModelFile};
use senstype::manifest::LabelManifest;
use senstype::uncertainty::read_predictions_csv;

fn senstype(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_senstype"))
        .current_dir(dir)
        .args(args)
        .stdin(Stdio::null())
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = senstype(dir, args);
    assert!(
        out.status.success(),
        "`{}` exited {:?}: {}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_corpus(dir: &Path) {
    fs::write(
        dir.join("corpus.toml"),
        "preset = \"default\"\ntraces_per_type = 4\nduration = 172800.0\n",
    )
    .unwrap();
    ok(
        dir,
        &["synth", "--config", "corpus.toml", "--out", "corpus"],
    );
}

fn write_trace(dir: &Path, name: &str, samples: &[(f64, f64)]) {
    let mut text = String::from("timestamp,value\n");
    for (t, v) in samples {
        text.push_str(&format!("{t},{v}\n"));
    }
    fs::write(dir.join(name), text).unwrap();
}

fn feature_row<'a>(csv: &'a str, id: &str) -> Vec<&'a str> {
    csv.lines()
        .find(|l| l.starts_with(&format!("{id},")))
        .expect("row present")
        .split(',')
        .collect()
}

#[test]
fn pipeline_from_files_matches_in_process() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_corpus(dir);
    ok(
        dir,
        &[
            "features",
            "--manifest",
            "corpus/manifest.csv",
            "--out",
            "features.csv",
        ],
    );
    ok(
        dir,
        &[
            "--trees",
            "20",
            "train",
            "--features",
            "features.csv",
            "--out",
            "model.json",
        ],
    );
    ok(
        dir,
        &[
            "classify",
            "--model",
            "model.json",
            "--manifest",
            "corpus/manifest.csv",
            "--out",
            "predictions.csv",
        ],
    );

    let (matrix, _) = FeatureMatrix::load(&dir.join("features.csv")).unwrap();
    let forest = ModelFile::load(&dir.join("model.json"))
        .unwrap()
        .into_forest()
        .unwrap();
    let (preds, preamble) = read_predictions_csv(&dir.join("predictions.csv")).unwrap();
    assert_eq!(preds.len(), 24);
    assert_eq!(preamble.get("n_trees"), Some("20"));
    assert!(preamble
        .get("tool")
        .is_some_and(|t| t.starts_with("senstype ")));
    for (row, p) in matrix.rows.iter().zip(&preds) {
        let c = classify(&forest, &row.features, forest.config().averaging).unwrap();
        assert_eq!(row.trace_id, p.trace_id);
        assert_eq!(c.label, p.predicted);
        for (a, b) in c.probs.as_slice().iter().zip(p.probs.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn every_csv_artifact_records_the_run_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_corpus(dir);
    ok(
        dir,
        &[
            "--trees",
            "10",
            "eval",
            "loo",
            "--manifest",
            "corpus/manifest.csv",
            "--baseline",
            "--out",
            "loo",
        ],
    );
    ok(
        dir,
        &[
            "--threshold",
            "0.3",
            "flag",
            "--predictions",
            "loo/predictions.csv",
            "--truth",
            "corpus/manifest.csv",
            "--out",
            "flags.csv",
        ],
    );
    for f in [
        "corpus/manifest.csv",
        "loo/accuracy.csv",
        "loo/accuracy_baseline.csv",
        "loo/predictions.csv",
        "flags.csv",
    ] {
        let text = fs::read_to_string(dir.join(f)).unwrap();
        for key in [
            "# tool=senstype ",
            "# seed=",
            "# averaging=",
            "# threshold=",
        ] {
            assert!(text.contains(key), "{f} lacks {key}");
        }
    }
    let text = fs::read_to_string(dir.join("loo/accuracy.txt")).unwrap();
    assert!(text.contains("overall"));
}

#[test]
fn hand_example_and_constant_trace_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_trace(
        dir,
        "hand.csv",
        &[
            (0.0, 1.0),
            (30.0, 2.0),
            (60.0, 3.0),
            (100.0, 10.0),
            (130.0, 10.0),
            (160.0, 16.0),
            (200.0, 0.0),
        ],
    );
    let constant: Vec<(f64, f64)> = (0..=40).map(|i| (i as f64 * 10.0, 5.0)).collect();
    write_trace(dir, "flat.csv", &constant);
    write_trace(dir, "short.csv", &[(0.0, 1.0), (30.0, 2.0)]);
    fs::write(
        dir.join("manifest.csv"),
        "trace_id,path,label\nhand,hand.csv,co2\nflat,flat.csv,setpoint\nshort,short.csv,humidity\n",
    )
    .unwrap();

    let out = senstype(
        dir,
        &[
            "--window-mins",
            "1.6666666666666667",
            "features",
            "--manifest",
            "manifest.csv",
            "--out",
            "f.csv",
        ],
    );
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("short"), "no skip warning: {stderr}");

    let csv = fs::read_to_string(dir.join("f.csv")).unwrap();
    assert!(!csv.lines().any(|l| l.starts_with("short,")));
    let hand: Vec<f64> = feature_row(&csv, "hand")[2..]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let want = [
        2.0,
        10.0,
        6.0,
        16.0,
        2.0 / 3.0,
        8.0,
        13.0 / 3.0,
        121.0 / 9.0,
    ];
    for (g, w) in hand.iter().zip(want) {
        assert!((g - w).abs() < 1e-9, "{hand:?}");
    }
    assert_eq!(
        feature_row(&csv, "flat")[2..],
        ["5", "5", "5", "0", "0", "0", "0", "0"]
    );
}

#[test]
fn relabel_budget_zero_and_confirm_all_keep_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_corpus(dir);
    ok(
        dir,
        &[
            "--trees",
            "10",
            "train",
            "--manifest",
            "corpus/manifest.csv",
            "--out",
            "model.json",
        ],
    );
    ok(
        dir,
        &[
            "classify",
            "--model",
            "model.json",
            "--manifest",
            "corpus/manifest.csv",
            "--out",
            "p.csv",
        ],
    );
    let common = [
        "relabel",
        "--predictions",
        "p.csv",
        "--manifest",
        "corpus/manifest.csv",
        "--model",
        "model.json",
    ];

    let mut args = common.to_vec();
    args.extend([
        "--budget",
        "0",
        "--out-manifest",
        "m0.csv",
        "--out-model",
        "model0.json",
    ]);
    ok(dir, &args);

    fs::write(dir.join("answers.csv"), "trace_id,label\n").unwrap();
    let mut args = common.to_vec();
    args.extend([
        "--budget",
        "100",
        "--answers",
        "answers.csv",
        "--out-manifest",
        "m1.csv",
        "--out-model",
        "model1.json",
    ]);
    let stdout = ok(dir, &args);
    assert!(stdout.contains("reviewed 24, changed 0"), "{stdout}");

    let manifest = fs::read(dir.join("corpus/manifest.csv")).unwrap();
    let model = fs::read(dir.join("model.json")).unwrap();
    for (m, f) in [("m0.csv", "model0.json"), ("m1.csv", "model1.json")] {
        assert_eq!(fs::read(dir.join(m)).unwrap(), manifest);
        assert_eq!(fs::read(dir.join(f)).unwrap(), model);
    }
}

#[test]
fn relabel_applies_scripted_corrections() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_corpus(dir);
    ok(
        dir,
        &[
            "--trees",
            "10",
            "train",
            "--manifest",
            "corpus/manifest.csv",
            "--out",
            "model.json",
        ],
    );
    ok(
        dir,
        &[
            "classify",
            "--model",
            "model.json",
            "--manifest",
            "corpus/manifest.csv",
            "--out",
            "p.csv",
        ],
    );
    fs::write(
        dir.join("answers.csv"),
        "trace_id,label\nco2_000,humidity\n",
    )
    .unwrap();
    ok(
        dir,
        &[
            "relabel",
            "--predictions",
            "p.csv",
            "--manifest",
            "corpus/manifest.csv",
            "--model",
            "model.json",
            "--budget",
            "24",
            "--answers",
            "answers.csv",
            "--out-manifest",
            "out/manifest.csv",
            "--out-model",
            "out/model.json",
        ],
    );
    let text = fs::read_to_string(dir.join("out/manifest.csv")).unwrap();
    assert!(text.contains("# relabeled=1"));
    let m = LabelManifest::parse(&text, Path::new("m"), dir.join("corpus")).unwrap();
    assert_eq!(m.label_of("co2_000"), Some(senstype::SensorType::Humidity));
    assert_ne!(
        fs::read(dir.join("out/model.json")).unwrap(),
        fs::read(dir.join("model.json")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    fs::write(dir.join("bad.toml"), "traces_per_typ = 3\n").unwrap();
    let out = senstype(dir, &["synth", "--config", "bad.toml", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("traces_per_typ"));

    assert_eq!(
        senstype(dir, &["--trees", "0", "synth", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        senstype(dir, &["--window-mins", "-1", "synth", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        senstype(dir, &["synth", "--preset", "nope", "--out", "x"])
            .status
            .code(),
        Some(2)
    );

    let out = senstype(
        dir,
        &["features", "--manifest", "missing.csv", "--out", "f.csv"],
    );
    assert_eq!(out.status.code(), Some(3));

    small_corpus(dir);
    ok(
        dir,
        &[
            "--trees",
            "10",
            "eval",
            "loo",
            "--manifest",
            "corpus/manifest.csv",
            "--out",
            "loo",
        ],
    );
    let flag = |threshold: &str| {
        senstype(
            dir,
            &[
                "--threshold",
                threshold,
                "flag",
                "--predictions",
                "loo/predictions.csv",
                "--truth",
                "corpus/manifest.csv",
                "--out",
                "f.csv",
            ],
        )
    };
    assert_eq!(flag("9").status.code(), Some(4));
    assert!(dir.join("f.csv").exists());

    ok(
        dir,
        &[
            "--trees",
            "10",
            "train",
            "--manifest",
            "corpus/manifest.csv",
            "--out",
            "model.json",
        ],
    );
    let out = senstype(
        dir,
        &[
            "relabel",
            "--predictions",
            "loo/predictions.csv",
            "--manifest",
            "corpus/manifest.csv",
            "--model",
            "model.json",
            "--budget",
            "3",
            "--out-manifest",
            "m.csv",
            "--out-model",
            "m.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}
