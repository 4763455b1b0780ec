use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn r2p2(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r2p2"))
        .args(args)
        .current_dir(cwd)
        .env_remove("R2P2_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_log_and_csv_and_exits_zero_on_success() {
    let dir = tempfile::tempdir().unwrap();
    let out = r2p2(&["run", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("outcome=success mission_time_s="));
    let csv = fs::read_to_string(dir.path().join("res/record.csv")).unwrap();
    assert!(csv.starts_with("schema_version,t,box_x,box_y,box_theta,r0_x,"));
    assert!(dir.path().join("res/record.ndjson").exists());

    let replay = r2p2(&["replay", "res/record.ndjson"], dir.path());
    assert_eq!(replay.status.code(), Some(0), "{}", stdout(&replay));
}

#[test]
fn invalid_config_exits_one_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[box]\nmass_kg = -1.0\n").unwrap();
    let out = r2p2(&["run", "--config", "bad.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("box.mass_kg"));

    fs::write(dir.path().join("typo.toml"), "[box]\nmass = 1.0\n").unwrap();
    let out = r2p2(&["run", "--config", "typo.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn zero_time_ceiling_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("z.toml"), "[mission]\nmax_time_s = 0.0\n").unwrap();
    let out = r2p2(&["run", "--config", "z.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("failure_a"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("z.toml"), "[mission]\nmax_time_s = 1.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_r2p2"))
        .args(["run", "--config", "z.toml"])
        .current_dir(dir.path())
        .env("R2P2_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("from_env/record.csv").exists());
}

#[test]
fn unknown_study_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = r2p2(&["study", "nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("possible values"));
}

#[test]
fn study_output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    for (jobs, out) in [("1", "a"), ("3", "b")] {
        let o = r2p2(
            &["study", "generalizability", "--terrain", "flat", "--jobs", jobs, "--out", out],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a/generalizability_runs.csv")).unwrap();
    let b = fs::read(dir.path().join("b/generalizability_runs.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 9);
}

#[test]
fn taguchi_study_emits_81_rows_and_main_effects() {
    let dir = tempfile::tempdir().unwrap();
    let o = r2p2(&["study", "taguchi", "--terrain", "flat", "--out", "t"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let runs = fs::read_to_string(dir.path().join("t/taguchi_flat_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 82);
    let effects = fs::read_to_string(dir.path().join("t/taguchi_flat_main_effects.csv")).unwrap();
    assert_eq!(effects.lines().count(), 1 + 8 * 3);

    let plot = r2p2(&["plot", "t/taguchi_flat_main_effects.csv", "--kind", "main-effects"], dir.path());
    assert_eq!(plot.status.code(), Some(0));
    let svg = fs::read_to_string(dir.path().join("t/taguchi_flat_main_effects.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 8);
    assert!(svg.contains("contact_placement_m (Δ"));
}

#[test]
fn plots_are_deterministic_and_reject_mismatched_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(r2p2(&["run", "--out", "r"], dir.path()).status.code(), Some(0));
    for kind in ["trajectory", "roles", "speeds"] {
        let mut renders = Vec::new();
        for i in 0..2 {
            let dest = format!("r/{kind}{i}.svg");
            let o = r2p2(&["plot", "r/record.ndjson", "--kind", kind, "--out", &dest], dir.path());
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            renders.push(fs::read(dir.path().join(&dest)).unwrap());
        }
        assert_eq!(renders[0], renders[1], "{kind}");
        assert!(renders[0].starts_with(b"<svg"));
    }
    let speeds = fs::read_to_string(dir.path().join("r/speeds0.svg")).unwrap();
    assert_eq!(speeds.matches("<polyline").count(), 4);

    let bad = r2p2(&["plot", "r/record.csv", "--kind", "trajectory"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let bad = r2p2(&["plot", "r/record.ndjson", "--kind", "main-effects"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn tampered_record_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.toml"), "[mission]\nmax_time_s = 2.0\n").unwrap();
    r2p2(&["run", "--config", "s.toml", "--out", "r"], dir.path());
    let path = dir.path().join("r/record.ndjson");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"seed\":0,"));
    fs::write(&path, text.replacen("\"seed\":0,", "\"seed\":7,", 1)).unwrap();
    let o = r2p2(&["replay", "r/record.ndjson"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("differs"));

    let lines: Vec<&str> = text.lines().collect();
    fs::write(&path, lines[..lines.len() - 1].join("\n")).unwrap();
    let o = r2p2(&["replay", "r/record.ndjson"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
