use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn mpsens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpsens"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_reports_each_statement() {
    let o = mpsens(&["check", path(&fixture("cachexia.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches(": holds").count(), 4);
}

#[test]
fn check_fails_with_witness_on_a_broken_model() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.json");
    std::fs::write(
        &file,
        r#"{"variables":["a","b","c"],
            "covariance":[[1,0.5,0.2],[0.5,1,0.5],[0.2,0.5,1]],
            "ci":[{"A":["a"],"B":["c"],"C":["b"]}]}"#,
    )
    .unwrap();
    let o = mpsens(&["check", path(&file)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAILS, witness"));
}

#[test]
fn build_cov_prints_the_dag_covariance() {
    let o = mpsens(&["build-cov", path(&fixture("four_variable.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    assert_eq!(last.split_whitespace().collect::<Vec<_>>(), ["Y4", "7", "17", "19", "63"]);

    let o = mpsens(&["build-cov", path(&fixture("minimal.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn covary_exit_codes() {
    let model = fixture("four_variable.json");
    let o = mpsens(&["covary", path(&model), "--pos", "2,1", "--delta", "1.05", "--scheme", "row"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("verdict: preserving"));
    assert!(out.contains("kl: 0."));

    let o = mpsens(&["covary", path(&model), "--pos", "Y2,Y1", "--delta", "1.25", "--scheme", "partial"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("frobenius: 5.6875"));

    let o = mpsens(&["covary", path(&model), "--pos", "2,1", "--delta", "1.05", "--scheme", "none"]);
    assert!(stdout(&o).contains("NOT preserving"));

    let o = mpsens(&["covary", path(&model), "--pos", "9,1", "--delta", "1.05"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mpsens(&["covary", path(&model), "--pos", "2,1", "--delta", "1.05", "--scheme", "zigzag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let o = mpsens(&[
        "sweep",
        path(&fixture("four_variable.json")),
        "--pos",
        "Y2,Y1",
        "--grid",
        "0.9:1.1:0.1",
        "--out",
        path(&csv),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta1,delta2,scheme,kl,frobenius,admissible,preserving"));
    assert_eq!(lines.count(), 3 * 5);
    assert!(text.contains("1,,total,0,0,true,true"));

    let o = mpsens(&["sweep", "--config", path(&fixture("sweep_four_variable.json")), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 51 * 5);
}

#[test]
fn two_way_sweep_needs_two_positions() {
    let model = fixture("four_variable.json");
    let o = mpsens(&[
        "sweep2", path(&model), "--pos", "2,2", "--pos", "3,2", "--grid", "0.9,1", "--grid", "1,1.1",
        "--scheme", "standard", "--scheme", "column:Y2+Y3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 2 * 2);

    let o = mpsens(&["sweep2", path(&model), "--pos", "2,2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn condition_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("pair.json");
    std::fs::write(&file, r#"{"variables":["x","y"],"covariance":[[1,2],[2,5]]}"#).unwrap();
    let o = mpsens(&["condition", path(&file), "--evidence", "y=1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("x        0.4"), "{out}");
    assert!(out.contains("0.200000"), "{out}");
    let o = mpsens(&["condition", path(&file), "--evidence", "z=1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_prints_the_ordering() {
    let o = mpsens(&["compare", path(&fixture("four_variable.json")), "--pos", "2,1", "--delta", "1.25"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("frobenius ordering holds"));
    assert!(out.contains("343.4375"));
}
