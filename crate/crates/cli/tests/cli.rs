use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pvbatt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvbatt")).args(args).output().expect("spawn pvbatt")
}

fn ok(args: &[&str]) -> String {
    let out = pvbatt(args);
    assert!(
        out.status.success(),
        "pvbatt {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_GRID: &str = "
[sweep]
pv_sizes = [1.0]
batt_sizes = [0.0, 1.0]
objectives = [\"cost\"]
scenarios = [\"fit\"]
";

#[test]
fn synth_run_and_stats_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let fleet = dir.path().join("fleet");
    let pv = dir.path().join("pv.csv");
    let config = dir.path().join("run.toml");
    let out = dir.path().join("out");
    fs::write(&config, SMALL_GRID).unwrap();

    ok(&["synth", "--fleet", "20", "--seed", "3", "--out", arg(&fleet)]);
    assert!(fleet.join("properties.csv").is_file());
    ok(&["synth", "--pv", "--seed", "7", "--out", arg(&pv)]);

    let summary = ok(&[
        "run", "--profiles", arg(&fleet), "--pv-profile", arg(&pv), "--config", arg(&config), "--out", arg(&out),
        "--jobs", "1",
    ]);
    assert!(summary.starts_with("40 cells from 20 properties"), "{summary}");
    let cells = out.join("cells.csv");
    assert_eq!(fs::read_to_string(&cells).unwrap().lines().count(), 41);
    let table = fs::read_to_string(out.join("table_scr_fit.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("batt_kwh_per_mwh,1.0"));
    assert_eq!(table.lines().count(), 3);

    let report = ok(&["stats", "--cells", arg(&cells), "--response", "scr", "--pv", "1.0", "--batt", "1.0"]);
    assert!(report.contains("R² ="), "{report}");
    assert!(report.contains("ANOVA ec_mwh"), "{report}");
    assert!(out.join("regression_scr_pv1.0_batt1.0.csv").is_file());
}

#[test]
fn single_profile_synth_writes_a_full_year() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("school.csv");
    ok(&["synth", "--type", "school", "--annual-mwh", "120", "--out", arg(&path)]);
    let rows = fs::read_to_string(&path).unwrap().lines().count();
    assert!(rows >= 35_040, "{rows} rows");
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = pvbatt(&[
        "run", "--profiles", arg(&missing), "--pv-profile", arg(&missing), "--out", arg(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[sweep]\npv_sizes = []\n").unwrap();
    let pv = dir.path().join("pv.csv");
    ok(&["synth", "--pv", "--out", arg(&pv)]);
    let fleet = dir.path().join("fleet");
    ok(&["synth", "--fleet", "2", "--out", arg(&fleet)]);
    let out = pvbatt(&[
        "run", "--profiles", arg(&fleet), "--pv-profile", arg(&pv), "--config", arg(&bad), "--out", arg(dir.path()),
    ]);
    assert!(!out.status.success());

    let out = pvbatt(&["synth", "--type", "castle", "--annual-mwh", "1", "--out", arg(&pv)]);
    assert!(!out.status.success());
}
