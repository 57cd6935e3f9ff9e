use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ock_core::datasets::{load_csv, CsvOptions};
use ock_core::kernels::KernelSpec;
use ock_core::learner::{fit_series, FitPath};
use ock_core::model_io::save_model;
use ock_core::SnapshotSeries;
use serde_json::Value;

fn ock(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ock"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = ock(dir, args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_lorenz96_has_requested_columns_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--system", "lorenz96", "--dim", "16", "--seed", "1", "--trajectories", "3", "--snapshots", "20"];
    ok(dir.path(), &[&args[..], &["-o", "a.csv"]].concat());
    ok(dir.path(), &[&args[..], &["-o", "b.csv"]].concat());
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    let header = String::from_utf8(a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 2 + 16);
    let meta = json(&dir.path().join("a.meta.json"));
    assert_eq!(meta["dimension"], 16);
    assert_eq!(meta["system"], "lorenz96");
}

#[test]
fn generate_rejects_bad_requests_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ock(dir.path(), &["generate", "--system", "lorenz96", "--dim", "3"])), 2);
    assert_eq!(code(&ock(dir.path(), &["generate", "--system", "fhn", "--dim", "5"])), 2);
    assert_eq!(code(&ock(dir.path(), &["generate"])), 2);
    assert_eq!(code(&ock(dir.path(), &["generate", "--preset", "nope"])), 2);
    assert_eq!(code(&ock(dir.path(), &["generate", "--system", "fhn", "--bogus-flag"])), 2);
    fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    assert_eq!(code(&ock(dir.path(), &["generate", "--system", "fhn", "--config", "bad.json"])), 2);
}

#[test]
fn diverging_simulation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = ock(
        dir.path(),
        &["generate", "--system", "lorenz63", "--t-end", "1000", "--snapshots", "5", "--substeps", "1", "--trajectories", "1"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flags_override_config_which_overrides_preset() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"n_trajectories": 3, "seed": 9, "n_snapshots": 7}"#).unwrap();
    ok(dir.path(), &["generate", "--preset", "fhn-desk", "--config", "cfg.json", "--seed", "4", "-o", "d.csv"]);
    let meta = json(&dir.path().join("d.meta.json"));
    assert_eq!(meta["n_trajectories"], 3);
    assert_eq!(meta["n_snapshots"], 7);
    assert_eq!(meta["seed"], 4);
    // untouched preset values survive the merge
    assert_eq!(meta["t_span"], serde_json::json!([0.0, 50.0]));
    assert_eq!(meta["noise_std"], 0.0);
}

fn small_dataset(dir: &Path) {
    ok(
        dir,
        &["generate", "--system", "fhn", "--trajectories", "6", "--snapshots", "15", "--t-end", "14", "--noise", "0", "--seed", "3", "-o", "data.csv"],
    );
}

#[test]
fn train_with_single_grid_point_fits_directly() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    ok(
        dir.path(),
        &["train", "--data", "data.csv", "--lambdas", "1e-4", "--lengthscales", "1.0", "--relative-lengthscales", "false", "--output-dir", "run"],
    );
    let report = json(&dir.path().join("run/train_report.json"));
    assert_eq!(report["search"]["searched"], false);
    assert_eq!(report["search"]["scores"].as_array().unwrap().len(), 0);
    assert_eq!(report["chosen_lambda"], 1e-4);
    assert_eq!(report["chosen_lengthscale"], 1.0);
    assert!(report["train_seconds"].as_f64().unwrap() >= 0.0);
    assert!(report["config"]["lambdas"].is_array());
    assert!(dir.path().join("run/model.json").exists());
}

#[test]
fn train_grid_reports_every_score_and_tune_matches() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    let grid = ["--data", "data.csv", "--lambdas", "1e-6,1e-3", "--lengthscales", "0.7,1.5", "--relative-lengthscales", "false"];
    ok(dir.path(), &[&["train"][..], &grid, &["--output-dir", "run"]].concat());
    ok(dir.path(), &[&["tune"][..], &grid, &["--output-dir", "tuned"]].concat());
    let train = json(&dir.path().join("run/train_report.json"));
    let tune = json(&dir.path().join("tuned/tune_report.json"));
    assert_eq!(train["search"]["scores"].as_array().unwrap().len(), 4);
    assert_eq!(train["search"]["searched"], true);
    assert_eq!(train["chosen_lambda"], tune["search"]["chosen_lambda"]);
    assert_eq!(train["chosen_lengthscale"], tune["search"]["chosen_lengthscale"]);
    let scores = fs::read_to_string(dir.path().join("tuned/grid_scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 5);
    assert!(train["test"]["err"]["mean"].is_number());
}

#[test]
fn train_without_a_dataset_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ock(dir.path(), &["train"])), 2);
    assert_eq!(code(&ock(dir.path(), &["train", "--data", "missing.csv"])), 2);
    assert_eq!(code(&ock(dir.path(), &["train", "--preset", "pde-desk"])), 2);
}

fn write_model(dir: &Path, scale: f64) {
    let mut cfg = ock_core::datasets::GeneratorConfig::new(ock_core::System::Fhn);
    cfg.n_trajectories = 2;
    cfg.n_snapshots = 8;
    let data: Vec<SnapshotSeries<f64>> = ock_core::datasets::generate(&cfg).unwrap();
    let model = fit_series(&data, &KernelSpec::gaussian(1.0).unwrap(), 1e-3, FitPath::Implicit, false).unwrap();
    save_model(&dir.join("model.json"), &model.with_scaled_weights(scale)).unwrap();
}

#[test]
fn zero_model_predicts_constant_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), 0.0);
    fs::write(dir.path().join("ic.csv"), "series_id,x_1,x_2\n4,0.5,-1\n7,2,3\n9,-0.25,0\n").unwrap();
    let out = ok(
        dir.path(),
        &["predict", "--model", "model.json", "--initial", "ic.csv", "--t-end", "2", "--n-times", "5", "-o", "p.csv"],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("3 trajectories"));
    let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "series_id,t,x_1,x_2,diverged");
    assert_eq!(text.lines().count(), 1 + 3 * 5);
    let expect = [(4, [0.5, -1.0]), (7, [2.0, 3.0]), (9, [-0.25, 0.0])];
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let id: u64 = f[0].parse().unwrap();
        let x0 = expect.iter().find(|e| e.0 == id).unwrap().1;
        assert_eq!(f[2].parse::<f64>().unwrap(), x0[0]);
        assert_eq!(f[3].parse::<f64>().unwrap(), x0[1]);
        assert_eq!(f[4], "0");
    }
}

#[test]
fn predict_rejects_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), 1.0);
    fs::write(dir.path().join("ic.csv"), "series_id,x_1,x_2,x_3\n0,1,2,3\n").unwrap();
    let out = ock(dir.path(), &["predict", "--model", "model.json", "--initial", "ic.csv", "--times", "0,1"]);
    assert_eq!(code(&out), 2);
    fs::write(dir.path().join("ic2.csv"), "series_id,x_1,x_2\n0,1,2\n").unwrap();
    let out = ock(dir.path(), &["predict", "--model", "model.json", "--initial", "ic2.csv"]);
    assert_eq!(code(&out), 2, "missing time grid");
}

#[test]
fn evaluate_reproduces_hand_computed_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("truth.csv"), "series_id,t,x_1\n0,0,0\n0,1,0\n0,2,0\n").unwrap();
    fs::write(dir.path().join("pred.csv"), "series_id,t,x_1,diverged\n0,0,0,0\n0,1,1,0\n0,2,1,0\n").unwrap();
    ok(dir.path(), &["evaluate", "--truth", "truth.csv", "--pred", "pred.csv", "--output-dir", "ev"]);
    let report = json(&dir.path().join("ev/evaluation.json"));
    let err = report["trajectories"][0]["err"].as_f64().unwrap();
    assert!((err - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(report["trajectories"][0]["null_err"], 0.0);
    assert!(report["trajectories"][0]["one_step_err"].is_null());
    let csv = fs::read_to_string(dir.path().join("ev/evaluation.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "series_id,err,one_step_err,null_err,diverged");
    assert!(rows[1].starts_with("0,1.414213562373095"));
    assert!(rows.iter().any(|r| r.starts_with("mean,")) && rows.iter().any(|r| r.starts_with("median,")));
}

#[test]
fn predictions_of_truth_score_zero_and_ids_must_match() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    write_model(dir.path(), 1.0);
    // identical files: every error vanishes
    ok(dir.path(), &["evaluate", "--truth", "data.csv", "--pred", "data.csv", "--output-dir", "same"]);
    let report = json(&dir.path().join("same/evaluation.json"));
    for t in report["trajectories"].as_array().unwrap() {
        assert_eq!(t["err"], 0.0);
        assert!(t["null_err"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(report["err"]["mean"], 0.0);

    ok(dir.path(), &["predict", "--model", "model.json", "--initial", "data.csv", "-o", "p.csv"]);
    ok(
        dir.path(),
        &["evaluate", "--truth", "data.csv", "--pred", "p.csv", "--model", "model.json", "--output-dir", "ev"],
    );
    let report = json(&dir.path().join("ev/evaluation.json"));
    assert_eq!(report["trajectories"].as_array().unwrap().len(), 6);
    assert!(report["trajectories"][0]["one_step_err"].is_number());

    let truth: Vec<SnapshotSeries<f64>> = load_csv(&dir.path().join("data.csv"), CsvOptions::default()).unwrap();
    let mut text = String::from("series_id,t,x_1,x_2\n");
    for s in &truth[..5] {
        for i in 0..s.len() {
            text.push_str(&format!("{},{},{},{}\n", s.series_id, s.times[i], s.state(i)[0], s.state(i)[1]));
        }
    }
    fs::write(dir.path().join("short.csv"), text).unwrap();
    let out = ock(dir.path(), &["evaluate", "--truth", "data.csv", "--pred", "short.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn diverged_prediction_is_flagged_and_scores_infinite() {
    let dir = tempfile::tempdir().unwrap();
    // a bounded kernel field only overflows when one step is astronomically long
    write_model(dir.path(), 1e300);
    fs::write(dir.path().join("ic.csv"), "series_id,x_1,x_2\n0,0.5,0.5\n").unwrap();
    ok(dir.path(), &["predict", "--model", "model.json", "--initial", "ic.csv", "--times", "0,1e10,2e10,3e10", "--substeps", "1", "-o", "p.csv"]);
    let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",1")), "{text}");
    fs::write(dir.path().join("truth.csv"), "series_id,t,x_1,x_2\n0,0,0.5,0.5\n0,1e10,1,1\n0,2e10,1,1\n0,3e10,1,1\n").unwrap();
    ok(dir.path(), &["evaluate", "--truth", "truth.csv", "--pred", "p.csv", "--output-dir", "ev"]);
    let csv = fs::read_to_string(dir.path().join("ev/evaluation.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("0,inf,"), "{csv}");
    assert!(json(&dir.path().join("ev/evaluation.json"))["trajectories"][0]["err"].is_null());
}

#[test]
fn pde_study_writes_errors_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["pde-study", "--sizes", "20x4,40x8", "--features-alpha", "20", "--features-f", "20", "--output-dir", "pde"]);
    let csv = fs::read_to_string(dir.path().join("pde/study.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,m,alpha_err,f_err");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("20,4,") && lines[2].starts_with("40,8,"));
    let report = json(&dir.path().join("pde/study.json"));
    assert!(report["alpha_slope"].is_number() && report["f_slope"].is_number());
    assert_eq!(report["config"]["fit"]["features_alpha"], 20);
    assert_eq!(report["config"]["fit"]["lambda1"], 1e-12);
}

#[test]
fn pde_study_rejects_tiny_grids() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ock(dir.path(), &["pde-study", "--sizes", "1x4"])), 2);
    assert_eq!(code(&ock(dir.path(), &["pde-study", "--sizes", "10x1"])), 2);
    assert_eq!(code(&ock(dir.path(), &["pde-study", "--preset", "fhn-desk"])), 2);
}

#[test]
fn explicit_rff_training_round_trips_through_predict() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    ok(
        dir.path(),
        &["train", "--data", "data.csv", "--kernel", "rff", "--features", "200", "--path", "explicit", "--lambdas", "1e-6", "--lengthscales", "1", "--relative-lengthscales", "false", "--output-dir", "run"],
    );
    let model = json(&dir.path().join("run/model.json"));
    assert_eq!(model["kernel"]["variant"], "random_fourier");
    ok(dir.path(), &["predict", "--model", "run/model.json", "--initial", "data.csv", "-o", "p.csv"]);
    let preds: Vec<SnapshotSeries<f64>> = {
        let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
        let stripped: String = text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect();
        ock_core::datasets::read_csv(stripped.as_bytes(), CsvOptions::default()).unwrap()
    };
    let truth: Vec<SnapshotSeries<f64>> = load_csv(&dir.path().join("data.csv"), CsvOptions::default()).unwrap();
    assert_eq!(preds.len(), truth.len());
    for (p, t) in preds.iter().zip(&truth) {
        assert_eq!(p.times, t.times);
        assert_eq!(p.state(0), t.state(0));
    }
}
