use std::path::Path;
use std::process::{Command, Output};

use enl_core::polsar_io::{self, CovarianceImage};
use enl_core::HermitianMatrix;

fn enl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enl"))
        .args(args)
        .env_remove("ENL_THREADS")
        .output()
        .expect("spawn enl")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_sample(dir: &Path, name: &str, looks: &str, seed: &str, side: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    let out = enl(&[
        "sample", "--builtin-sigma0", "--looks", looks, "--width", side, "--height", side, "--seed", seed, "--out",
        path_str(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&enl(&["--help"])), 0);
    assert_eq!(code(&enl(&["--version"])), 0);
    assert_eq!(code(&enl(&["simulate", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&enl(&[])), 1);
    assert_eq!(code(&enl(&["frobnicate"])), 1);
    assert_eq!(code(&enl(&["simulate", "--no-such-flag"])), 1);
    assert_eq!(code(&enl(&["simulate", "--reps", "0"])), 1);
    assert_eq!(code(&enl(&["simulate", "--looks", "4", "--sizes", "0", "--reps", "5"])), 1);
    assert_eq!(code(&enl(&["simulate", "--looks", "1.5", "--sizes", "9", "--reps", "5"])), 1);
    assert_eq!(code(&enl(&["simulate", "--estimators", "ml,xyz", "--reps", "5"])), 1);
    assert_eq!(code(&enl(&["simulate", "--defaults", "--reps", "5"])), 1);
    assert_eq!(code(&enl(&["simulate", "--reps", "5", "--threads", "0"])), 1);
}

#[test]
fn simulate_csv_has_one_row_per_cell() {
    let out = enl(&["simulate", "--reps", "20", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("estimator,L,N,mean,mse,cv,bias,failures"));
    assert_eq!(lines.count(), 60);
}

#[test]
fn simulate_estimator_subset_and_json() {
    let out = enl(&[
        "simulate", "--looks", "4,6", "--sizes", "9", "--reps", "30", "--estimators", "iml,bn", "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["config", "cells", "wall_time_seconds", "software_version", "cv_definition"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    let cells = doc["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for c in cells {
        let id = c["estimator"].as_str().unwrap();
        assert!(id == "IML" || id == "BN");
        for key in ["true_looks", "sample_size", "mean", "mse", "cv", "bias", "successes", "failures"] {
            assert!(c.get(key).is_some(), "cell missing {key}");
        }
    }
}

#[test]
fn simulate_writes_out_file_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let args = ["simulate", "--looks", "6", "--sizes", "9,49", "--reps", "50", "--seed", "11"];
    assert_eq!(code(&enl(&[&args[..], &["--out", path_str(&a)]].concat())), 0);
    let again = enl(&args);
    assert_eq!(std::fs::read(&a).unwrap(), again.stdout);
}

#[test]
fn bias_subcommand_emits_verdicts() {
    let out = enl(&["bias", "--looks", "4", "--sizes", "9,49,121", "--reps", "400", "--seed", "5"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("estimator,L,N,bias,closed_form_ml_bias,ordering_holds"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r[5] == "true"));
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn bias_with_partial_estimator_set_has_no_verdict() {
    let out = enl(&["bias", "--looks", "4", "--sizes", "9", "--reps", "20", "--estimators", "ml,iml"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",NA")));
}

#[test]
fn sample_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_sample(dir.path(), "a.wcov", "4", "1", "30");
    let b = write_sample(dir.path(), "b.wcov", "4", "1", "30");
    let c = write_sample(dir.path(), "c.wcov", "4", "2", "30");
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_ne!(bytes, std::fs::read(&c).unwrap());
    let image = polsar_io::read_covariance_image(&a).unwrap();
    assert_eq!((image.width(), image.height(), image.dim()), (30, 30, 3));
    assert_eq!(image.nominal_looks(), Some(4.0));
    assert!(image.non_pd_pixels().is_empty());
}

#[test]
fn sample_rejects_looks_below_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.wcov");
    let r = enl(&["sample", "--builtin-sigma0", "--looks", "2.5", "--width", "4", "--height", "4", "--out", path_str(&out)]);
    assert_eq!(code(&r), 2);
    assert!(!out.exists());
}

#[test]
fn sample_then_estimate_recovers_looks() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path(), "l4.wcov", "4", "9", "150");
    let out = enl(&["estimate", "--input", path_str(&path), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["sample_size"], 22_500);
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 5);
    for r in results {
        let v = r["value"].as_f64().unwrap();
        assert!((v - 4.0).abs() / 4.0 < 0.05, "{}: {v}", r["estimator"]);
    }
}

#[test]
fn estimate_region_and_subset() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path(), "l6.wcov", "6", "4", "20");
    let out = enl(&["estimate", "--input", path_str(&path), "--region", "2,3,10,7", "--estimators", "iml,bn"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("IML,") && rows[1].starts_with("BN,"));
    assert!(rows.iter().all(|r| r.ends_with(",70")));
}

#[test]
fn estimate_data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path(), "s.wcov", "4", "4", "10");
    assert_eq!(code(&enl(&["estimate", "--input", path_str(&path), "--region", "5,5,10,10"])), 2);
    assert_eq!(code(&enl(&["estimate", "--input", path_str(&dir.path().join("missing.wcov"))])), 2);
    assert_eq!(code(&enl(&["estimate", "--input", path_str(&path), "--region", "1,2,3"])), 1);

    let junk = dir.path().join("junk.wcov");
    std::fs::write(&junk, b"not a covariance image").unwrap();
    assert_eq!(code(&enl(&["estimate", "--input", path_str(&junk)])), 2);
}

#[test]
fn constant_image_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.wcov");
    let pixel = HermitianMatrix::diagonal(&[2.0, 3.0, 5.0]);
    let image = CovarianceImage::new(6, 6, vec![pixel; 36], None).unwrap();
    polsar_io::write_covariance_image(&image, &path).unwrap();
    let out = enl(&["estimate", "--input", path_str(&path), "--estimators", "ml"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ML"), "{err}");
}

#[test]
fn sigma_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("sigma.wcov");
    let image = CovarianceImage::new(1, 1, vec![HermitianMatrix::diagonal(&[1.0, 2.0])], None).unwrap();
    polsar_io::write_covariance_image(&image, &sigma).unwrap();
    let out = enl(&[
        "simulate", "--looks", "2.5", "--sizes", "9", "--reps", "20", "--sigma", path_str(&sigma), "--estimators", "ml",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = dir.path().join("s.wcov");
    let r = enl(&["sample", "--sigma", path_str(&sigma), "--looks", "2", "--width", "3", "--height", "2", "--out", path_str(&s)]);
    assert_eq!(code(&r), 0);
    assert_eq!(polsar_io::read_covariance_image(&s).unwrap().dim(), 2);
}

#[test]
fn verbose_prints_resolved_config() {
    let out = enl(&["--verbose", "simulate", "--looks", "4", "--sizes", "9", "--reps", "3", "--seed", "77"]);
    assert_eq!(code(&out), 0);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"seed\": 77") && err.contains("\"replications\": 3"), "{err}");
}

#[test]
fn thread_env_is_overridden_by_flag() {
    let args = ["simulate", "--looks", "4", "--sizes", "9", "--reps", "40"];
    let a = Command::new(env!("CARGO_BIN_EXE_enl")).args(args).env("ENL_THREADS", "3").output().unwrap();
    let b = enl(&[&args[..], &["--threads", "1"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_enl")).args(args).env("ENL_THREADS", "many").output().unwrap();
    assert_eq!(code(&bad), 1);
}

#[test]
fn json_report_matches_shipped_schema() {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/experiment_report.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let out = enl(&["simulate", "--looks", "4,6.5", "--sizes", "9,49", "--reps", "12", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");

    let mut broken = doc.clone();
    broken["cells"][0]["estimator"] = "XYZ".into();
    assert!(!validator.is_valid(&broken));
}
