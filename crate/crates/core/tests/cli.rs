use std::process::{Command, Output};

use perclab::report::{read_csv, read_json};

fn perclab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_perclab"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("PERCLAB_THREADS", t),
        None => cmd.env_remove("PERCLAB_THREADS"),
    };
    cmd.output().expect("run perclab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn all_open_crossing_has_length_two_n() {
    let o = perclab(&["crossing", "--p", "1.0", "--n", "8", "--trials", "10", "--seed", "1"], None);
    assert!(o.status.success());
    let records = read_csv(o.stdout.as_slice()).unwrap();
    let s = records.iter().find(|r| r.statistic == "shortest").unwrap();
    assert_eq!((s.mean, s.stderr, s.count), (16.0, 0.0, 10));
}

#[test]
fn arms_csv_has_a_row_per_size_and_a_fit_row() {
    let o = perclab(
        &["arms", "--model", "triangular-site", "--n-list", "8,16,32,64", "--trials", "2000", "--seed", "3", "--format", "csv"],
        None,
    );
    assert!(o.status.success());
    let records = read_csv(o.stdout.as_slice()).unwrap();
    let sizes: Vec<u32> = records.iter().map(|r| r.n).collect();
    assert_eq!(sizes, [8, 16, 32, 64, 0]);
    assert!(records.iter().all(|r| r.stderr.is_finite() && r.count > 0));
    assert_eq!(records[4].statistic, "pi3-fit");
    assert!(records[4].mean < 0.0);
}

#[test]
fn validate_passes() {
    let o = perclab(&["validate", "--n", "3", "--trials", "200", "--seed", "7"], None);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("[PASS]")));
}

#[test]
fn bad_arguments_exit_nonzero_with_usage() {
    for args in [&["bogus"][..], &["crossing", "--bogus"]] {
        let o = perclab(args, None);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    }
    assert_eq!(perclab(&["crossing", "--format", "xml"], None).status.code(), Some(2));
    let o = perclab(&["detour", "--epsilon", "2", "--n", "4", "--trials", "2"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_does_not_depend_on_threads() {
    let args = ["crossing", "--n-list", "4,8", "--trials", "200", "--seed", "5", "--format", "json"];
    let one = perclab(&args, Some("1"));
    let many = perclab(&args, Some("8"));
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, perclab(&args, None).stdout);
    assert_eq!(read_json(one.stdout.as_slice()).unwrap().len(), 8);
}

#[test]
fn config_file_and_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.toml");
    std::fs::write(
        &config,
        "model = \"square-bond\"\np = 0.5\nn_list = [4, 8, 16]\ntrials = 200\nseed = 2\n\
         statistic = \"shortest\"\nconditioning = \"crossing\"\nepsilon = 0.5\nwindow = 64\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let o = perclab(&["run", "--config", config.to_str().unwrap(), "--out", csv.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(records.len(), 4);
    let fitted = records[3].mean;

    let o = perclab(&["fit", "--input", csv.to_str().unwrap()], None);
    assert!(o.status.success());
    let refit = read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(refit.len(), 1);
    assert_eq!(refit[0].statistic, "shortest-fit");
    assert!((refit[0].mean - fitted).abs() < 1e-12);
}

#[test]
fn detour_report_json_fields() {
    let o = perclab(&["detour", "--report", "--n", "12", "--trials", "6", "--format", "json"], None);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let first = v.as_array().unwrap()[0].as_object().unwrap();
    let keys: Vec<&str> = first.keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        ["epsilon", "n", "sigma_length", "lowest_length", "shortest_length", "non_detoured_fraction"]
    );
}
