use std::path::Path;
use std::process::{Command, Output};

fn gsvdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsvdlab"))
        .args(args)
        .env("GSVDLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn small_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--m", "30", "--n", "20", "--p", "40", "--seed", "7", "--out"];
    let out = out.to_str().unwrap();
    args.push(out);
    args.extend_from_slice(extra);
    gsvdlab(&args)
}

#[test]
fn repeated_runs_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(small_run(&a, &[]).status.success());
    assert!(small_run(&b, &[]).status.success());
    let first = std::fs::read(a.join("accuracy.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.join("accuracy.csv")).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 21);
}

#[test]
fn summary_reports_choice_and_nulls() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path(), &["--cond-a", "1e7", "--cond-b", "1e2", "--formulation", "auto"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["chosen_formulation"], "hat");
    assert!(summary["pct_sigma"].is_null());
    assert_eq!(summary["n"], 20);
}

#[test]
fn generated_files_round_trip_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    let gen = gsvdlab(&["gen", "--m", "9", "--n", "6", "--p", "8", "--out", g.to_str().unwrap()]);
    assert!(gen.status.success());
    let a = g.join("A.mtx");
    let b = g.join("B.mtx");
    let run = gsvdlab(&["run", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let only_a = gsvdlab(&["condest", "--a", a.to_str().unwrap(), "--method", "lsqr"]);
    assert!(only_a.status.success());
}

#[test]
fn exit_codes() {
    assert_eq!(gsvdlab(&["run", "--formulation", "sideways"]).status.code(), Some(2));
    assert_eq!(gsvdlab(&["run", "--a", "/does/not/exist.mtx"]).status.code(), Some(2));
    assert_eq!(
        gsvdlab(&["bounds", "--trials", "1", "--epsilon", "0.5"]).status.code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let singular = dir.path().join("S.mtx");
    std::fs::write(
        &singular,
        "%%MatrixMarket matrix array real general\n3 2\n1\n0\n0\n0\n0\n0\n",
    )
    .unwrap();
    assert_eq!(gsvdlab(&["run", "--a", singular.to_str().unwrap()]).status.code(), Some(3));

    let ok = gsvdlab(&["bounds", "--trials", "3", "--epsilon", "0"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("violations=0"));
}

#[test]
fn bounds_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = gsvdlab(&["bounds", "--trials", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "trial,index,form,quantity,observed,bound,ratio");
    assert_eq!(csv.lines().count(), 1 + 2 * 20 * 2 * 4);
}
