use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn dualcrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualcrit")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn size_prints_minimal_events_and_threshold() {
    let out = dualcrit(&["size", "--config", &cfg("tte_dual_nmin.cfg")]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("n_min = 52\n"), "{text}");
    assert!(text.contains("estimate threshold at n_min = 0.700\n"), "{text}");

    let out = dualcrit(&["size", "--config", &cfg("tte_dual_n70.cfg")]);
    assert!(stdout(&out).contains("estimate threshold at n = 0.736\n"));
}

#[test]
fn binary_size_writes_grid_trace() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let out = dualcrit(&["size", "--config", &cfg("orr_dual_n25.cfg"), "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("n_min = 22\n"));
    let trace = fs::read_to_string(&csv).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("n,clinical_boundary,prob_positive,median,implies_significance"));
    let row21: Vec<&str> = lines.clone().nth(20).unwrap().split(',').collect();
    let row22: Vec<&str> = lines.nth(21).unwrap().split(',').collect();
    assert_eq!((row21[0], row21[4]), ("21", "false"));
    assert_eq!((row22[0], row22[4]), ("22", "true"));
}

#[test]
fn oc_csv_has_full_precision_rows_that_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("oc.csv");
    let out = dualcrit(&["oc", "--config", &cfg("tte_dual_n309.cfg"), "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("true_effect,p_go,p_nogo,p_inconclusive"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 71);
    for row in &rows {
        assert!((row[1] + row[2] + row[3] - 1.0).abs() < 1e-9);
    }
    let at_dv = rows.iter().find(|r| (r[0] - 0.8).abs() < 1e-9).unwrap();
    assert!((at_dv[1] - 0.5).abs() < 1e-12);
}

#[test]
fn decide_labels_cases() {
    let out = dualcrit(&["decide", "--config", &cfg("orr_dual_n25.cfg"), "--observed", "5"]);
    assert!(stdout(&out).starts_with("GO: prob_positive=0.967, median=0.187\n"));
    let out = dualcrit(&["decide", "--config", &cfg("orr_dual_n36.cfg"), "--observed", "6"]);
    assert!(stdout(&out).starts_with("INCONCLUSIVE (case 3): prob_positive=0.954, median=0.158\n"));
    let out = dualcrit(&["decide", "--config", &cfg("tte_dual_nmin.cfg"), "--set", "n=30", "--observed", "0.7"]);
    assert!(stdout(&out).starts_with("INCONCLUSIVE (case 4):"), "{}", stdout(&out));
}

#[test]
fn set_overrides_file_values() {
    let out = dualcrit(&["oc", "--config", &cfg("tte_dual_n70.cfg"), "--set", "n=52"]);
    let expected = dualcrit(&["oc", "--config", &cfg("tte_dual_nmin.cfg")]);
    assert_eq!(out.stdout, expected.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "endpoint = tte\ndesign_kind = dual\nalpha = 0.1\n").unwrap();
    assert_eq!(dualcrit(&["size", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let infeasible = dir.path().join("infeasible.cfg");
    fs::write(&infeasible, "endpoint = tte\ndesign_kind = dual\nalpha = 0.1\ndecision_value = 1.0\n").unwrap();
    let out = dualcrit(&["size", "--config", infeasible.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let tight = ["--set", "n_max=20"];
    let out = dualcrit(&[&["size", "--config", &cfg("orr_three_outcome.cfg")][..], &tight].concat());
    assert_eq!(out.status.code(), Some(3));

    let one = dualcrit(&["compare", "--config", &cfg("tte_dual_n70.cfg")]);
    assert_eq!(one.status.code(), Some(2));
    let mixed = dualcrit(&["compare", "--config", &cfg("tte_dual_n70.cfg"), "--config", &cfg("orr_dual_n25.cfg")]);
    assert_eq!(mixed.status.code(), Some(2));
    assert_eq!(dualcrit(&["verify", "--config", &cfg("tte_dual_n70.cfg"), "--reps", "10"]).status.code(), Some(2));
}

#[test]
fn compare_csv_tags_designs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cmp.csv");
    let out = dualcrit(&[
        "compare",
        "--config",
        &cfg("tte_dual_n309.cfg"),
        "--config",
        &cfg("tte_dual_n420.cfg"),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("design,true_effect,p_go,p_nogo,p_inconclusive\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("2,")).count(), 71);
}
